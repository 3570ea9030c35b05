//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("metric violation: {0}")]
    Metric(MetricViolation),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("LP row generation did not converge within {0} separation rounds")]
    IterationLimit(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("narrow cuts are not nested: {0}")]
    ChainViolation(String),

    #[error("{oracle} oracle limited to size {cap}, got {got}")]
    OracleCap {
        oracle: &'static str,
        cap: usize,
        got: usize,
    },

    #[error("multigraph violates Eulerian trail precondition: {0}")]
    EulerPrecondition(String),

    #[error("walk does not visit vertex {0}")]
    WalkIncomplete(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// First defect found by `validate_metric`. Reported, never thrown.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    NotSquare {
        row: usize,
        len: usize,
        n: usize,
    },
    Asymmetry {
        i: usize,
        j: usize,
        c_ij: f64,
        c_ji: f64,
    },
    NegativeCost {
        i: usize,
        j: usize,
        value: f64,
    },
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        via: f64,
    },
    EndpointOutOfRange {
        which: char,
        value: usize,
        n: usize,
    },
    NonFinite {
        i: usize,
        j: usize,
    },
}

impl std::fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricViolation::NotSquare { row, len, n } => {
                write!(f, "row {row} has {len} entries, expected {n}")
            }
            MetricViolation::Asymmetry { i, j, c_ij, c_ji } => {
                write!(f, "cost[{i}][{j}]={c_ij} differs from cost[{j}][{i}]={c_ji}")
            }
            MetricViolation::NegativeCost { i, j, value } => {
                write!(f, "cost[{i}][{j}]={value} is negative")
            }
            MetricViolation::NonzeroDiagonal { i, value } => {
                write!(f, "cost[{i}][{i}]={value} is not zero")
            }
            MetricViolation::Triangle { i, j, k, direct, via } => write!(
                f,
                "triangle inequality fails on ({i},{j},{k}): cost[{i}][{k}]={direct} > cost[{i}][{j}]+cost[{j}][{k}]={via}"
            ),
            MetricViolation::EndpointOutOfRange { which, value, n } => {
                write!(f, "endpoint {which}={value} out of range for n={n}")
            }
            MetricViolation::NonFinite { i, j } => {
                write!(f, "cost[{i}][{j}] is not finite")
            }
        }
    }
}
