//! Machine-readable run reports. The JSON schema is frozen by a golden-file
//! test in the CLI crate: every field is always present, optional ones as
//! `null`.

use crate::dp::StatsSnapshot;
use crate::instance::TourResult;
use serde::{Deserialize, Serialize};

pub const ALGO_CHRISTOFIDES: &str = "christofides";
pub const ALGO_RDP: &str = "rdp";
pub const ALGO_EXACT: &str = "exact";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub algorithm: String,
    pub epsilon: Option<f64>,
    pub k: Option<u32>,
    pub lambda_1: Option<f64>,
    pub tour: TourResult,
    pub lp_value_top: Option<f64>,
    pub parity_vector_cost: Option<f64>,
    pub stats: StatsReport,
    pub ratio_vs_exact: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct StatsReport {
    pub lp_solves: u64,
    pub dp_calls: u64,
    pub memo_hits: u64,
    pub separation_rounds: u64,
    pub wall_ms: u64,
}

impl StatsReport {
    pub fn from_snapshot(snap: StatsSnapshot, wall_ms: u64) -> Self {
        StatsReport {
            lp_solves: snap.lp_solves,
            dp_calls: snap.dp_calls,
            memo_hits: snap.memo_hits,
            separation_rounds: snap.separation_rounds,
            wall_ms,
        }
    }
}

/// Approximation guarantee of an algorithm at a given epsilon: `5/3` for the
/// baseline, `1 + λ_1` for the recursive DP, `1` for exact.
pub fn guarantee(algorithm: &str, lambda_1: Option<f64>) -> Option<f64> {
    match algorithm {
        ALGO_CHRISTOFIDES => Some(5.0 / 3.0),
        ALGO_RDP => lambda_1.map(|l| 1.0 + l),
        ALGO_EXACT => Some(1.0),
        _ => None,
    }
}
