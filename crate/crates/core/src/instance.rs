//! Metric s-t-path TSP instances: representation, parsing, validation,
//! metric closure, and seeded random generation.
//!
//! Costs are stored as doubles. Euclidean distances are kept unrounded
//! (deliberately deviating from classic TSPLIB integer rounding) so the
//! triangle inequality holds up to floating-point noise, which the validator
//! absorbs with a scale-relative slack. The rational solver mode converts
//! these doubles exactly, so both arithmetic modes see the same instance.

use crate::error::{Error, MetricViolation, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute slack, relative to the largest cost, tolerated when checking the
/// triangle inequality on double-precision data.
const TRIANGLE_SLACK: f64 = 1e-12;

/// A finite metric with designated endpoints. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricInstance {
    n: usize,
    cost: Vec<Vec<f64>>,
    s: usize,
    t: usize,
}

impl MetricInstance {
    /// Builds and validates an instance. `s = t` is permitted and routes the
    /// solvers to the circuit case.
    pub fn new(cost: Vec<Vec<f64>>, s: usize, t: usize) -> Result<Self> {
        let inst = MetricInstance {
            n: cost.len(),
            cost,
            s,
            t,
        };
        match validate_metric(&inst) {
            None => Ok(inst),
            Some(v) => Err(Error::Metric(v)),
        }
    }

    /// Builds an instance from planar points with unrounded Euclidean costs.
    pub fn from_points(points: &[(f64, f64)], s: usize, t: usize) -> Result<Self> {
        let n = points.len();
        let mut cost = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2))
                    .sqrt();
                cost[i][j] = d;
                cost[j][i] = d;
            }
        }
        MetricInstance::new(cost, s, t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn cost(&self, u: usize, v: usize) -> f64 {
        self.cost[u][v]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.cost
    }

    /// Total cost of an explicit edge list.
    pub fn edge_cost(&self, edges: &[(usize, usize)]) -> f64 {
        edges.iter().map(|&(u, v)| self.cost[u][v]).sum()
    }

    /// Serializes to the canonical JSON form `{"n","s","t","cost"}`.
    /// `parse_instance` of the output reproduces the instance exactly.
    pub fn to_json(&self) -> String {
        let doc = InstanceJson {
            n: self.n,
            s: Some(self.s),
            t: Some(self.t),
            cost: Some(self.cost.clone()),
            points: None,
        };
        serde_json::to_string_pretty(&doc).expect("instance serializes")
    }
}

/// An s-t tour: a vertex sequence from `s` to `t` covering every vertex once.
/// For `s = t` the sequence is a circuit listing each vertex once; its cost
/// includes the closing edge back to `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourResult {
    pub order: Vec<usize>,
    pub cost: f64,
}

impl TourResult {
    pub fn new(order: Vec<usize>, inst: &MetricInstance) -> Result<Self> {
        let n = inst.n();
        if order.len() != n {
            return Err(Error::InvalidInstance(format!(
                "tour visits {} vertices, expected {}",
                order.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n || seen[v] {
                return Err(Error::InvalidInstance(format!(
                    "tour is not a permutation (vertex {v})"
                )));
            }
            seen[v] = true;
        }
        if order[0] != inst.s() {
            return Err(Error::InvalidInstance("tour must start at s".into()));
        }
        if inst.s() != inst.t() && order[n - 1] != inst.t() {
            return Err(Error::InvalidInstance("tour must end at t".into()));
        }
        let mut cost: f64 = order.windows(2).map(|w| inst.cost(w[0], w[1])).sum();
        if inst.s() == inst.t() && n > 1 {
            cost += inst.cost(order[n - 1], inst.s());
        }
        Ok(TourResult { order, cost })
    }
}

/// Checks every instance invariant; returns the first violation found, or
/// `None` when the instance is a valid metric with in-range endpoints.
pub fn validate_metric(inst: &MetricInstance) -> Option<MetricViolation> {
    let n = inst.n;
    let c = &inst.cost;
    for (i, row) in c.iter().enumerate() {
        if row.len() != n {
            return Some(MetricViolation::NotSquare {
                row: i,
                len: row.len(),
                n,
            });
        }
    }
    if inst.s >= n {
        return Some(MetricViolation::EndpointOutOfRange {
            which: 's',
            value: inst.s,
            n,
        });
    }
    if inst.t >= n {
        return Some(MetricViolation::EndpointOutOfRange {
            which: 't',
            value: inst.t,
            n,
        });
    }
    let mut max_cost: f64 = 0.0;
    for i in 0..n {
        if c[i][i] != 0.0 {
            return Some(MetricViolation::NonzeroDiagonal { i, value: c[i][i] });
        }
        for j in 0..n {
            if !c[i][j].is_finite() {
                return Some(MetricViolation::NonFinite { i, j });
            }
            if c[i][j] < 0.0 {
                return Some(MetricViolation::NegativeCost {
                    i,
                    j,
                    value: c[i][j],
                });
            }
            if c[i][j] != c[j][i] {
                return Some(MetricViolation::Asymmetry {
                    i: i.min(j),
                    j: i.max(j),
                    c_ij: c[i.min(j)][i.max(j)],
                    c_ji: c[i.max(j)][i.min(j)],
                });
            }
            max_cost = max_cost.max(c[i][j]);
        }
    }
    let slack = TRIANGLE_SLACK * (1.0 + max_cost);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if c[i][k] > c[i][j] + c[j][k] + slack {
                    return Some(MetricViolation::Triangle {
                        i,
                        j,
                        k,
                        direct: c[i][k],
                        via: c[i][j] + c[j][k],
                    });
                }
            }
        }
    }
    None
}

/// All-pairs shortest-path closure of a symmetric nonnegative matrix.
/// The sweep is repeated to a fixed point so the result passes the triangle
/// check with zero slack in the exact floating-point comparisons used there.
pub fn metric_closure(matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = matrix.len();
    let mut d: Vec<Vec<f64>> = matrix.to_vec();
    loop {
        let mut changed = false;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Input format accepted by [`parse_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Tsplib,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 2]>>,
}

/// Parses and validates an instance from text in the declared format.
/// Endpoints default to `0` and `n-1` when unspecified.
pub fn parse_instance(text: &str, format: Format) -> Result<MetricInstance> {
    match format {
        Format::Json => parse_json(text),
        Format::Tsplib => parse_tsplib(text),
    }
}

fn parse_json(text: &str) -> Result<MetricInstance> {
    let doc: InstanceJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let s = doc.s.unwrap_or(0);
    let t = doc.t.unwrap_or(doc.n.saturating_sub(1));
    match (doc.cost, doc.points) {
        (Some(cost), None) => {
            if cost.len() != doc.n {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("cost matrix has {} rows, expected n={}", cost.len(), doc.n),
                });
            }
            MetricInstance::new(cost, s, t)
        }
        (None, Some(points)) => {
            if points.len() != doc.n {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("{} points given, expected n={}", points.len(), doc.n),
                });
            }
            let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
            MetricInstance::from_points(&pts, s, t)
        }
        (Some(_), Some(_)) => Err(Error::Parse {
            line: 1,
            msg: "give either \"cost\" or \"points\", not both".into(),
        }),
        (None, None) => Err(Error::Parse {
            line: 1,
            msg: "missing \"cost\" or \"points\"".into(),
        }),
    }
}

/// TSPLIB subset: `NAME`, `TYPE`, `DIMENSION`, `EDGE_WEIGHT_TYPE` of
/// `EXPLICIT` (with `EDGE_WEIGHT_FORMAT: FULL_MATRIX`) or `EUC_2D`, plus the
/// nonstandard `FIXED_ENDPOINTS: s t` line for path endpoints.
fn parse_tsplib(text: &str) -> Result<MetricInstance> {
    let err = |line: usize, msg: String| Error::Parse { line, msg };

    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<String> = None;
    let mut weight_format: Option<String> = None;
    let mut endpoints: Option<(usize, usize)> = None;
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Weights,
    }
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let keyword = line.split([':', ' ']).next().unwrap_or("");
        match keyword {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "EDGE_WEIGHT_SECTION" => {
                section = Section::Weights;
                continue;
            }
            "DISPLAY_DATA_SECTION" => {
                section = Section::Header;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let (key, value) = match line.split_once(':') {
                    Some((k, v)) => (k.trim(), v.trim()),
                    None => (line, ""),
                };
                match key {
                    "NAME" | "COMMENT" | "TYPE" => {}
                    "DIMENSION" => {
                        dimension =
                            Some(value.parse().map_err(|_| {
                                err(lineno, format!("bad DIMENSION value {value:?}"))
                            })?);
                    }
                    "EDGE_WEIGHT_TYPE" => weight_type = Some(value.to_string()),
                    "EDGE_WEIGHT_FORMAT" => weight_format = Some(value.to_string()),
                    "FIXED_ENDPOINTS" => {
                        let mut it = value.split_whitespace();
                        let s = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| {
                            err(lineno, "FIXED_ENDPOINTS needs two indices".into())
                        })?;
                        let t = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| {
                            err(lineno, "FIXED_ENDPOINTS needs two indices".into())
                        })?;
                        endpoints = Some((s, t));
                    }
                    other => {
                        return Err(err(lineno, format!("unsupported keyword {other:?}")));
                    }
                }
            }
            Section::Coords => {
                let mut it = line.split_whitespace();
                let _index: usize = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(lineno, "expected `index x y`".into()))?;
                let x: f64 = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(lineno, "expected `index x y`".into()))?;
                let y: f64 = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(lineno, "expected `index x y`".into()))?;
                coords.push((x, y));
            }
            Section::Weights => {
                for tok in line.split_whitespace() {
                    weights.push(
                        tok.parse()
                            .map_err(|_| err(lineno, format!("bad weight {tok:?}")))?,
                    );
                }
            }
        }
    }

    let n = dimension.ok_or_else(|| err(0, "missing DIMENSION".into()))?;
    let (s, t) = endpoints.unwrap_or((0, n.saturating_sub(1)));
    match weight_type.as_deref() {
        Some("EUC_2D") => {
            if coords.len() != n {
                return Err(err(
                    0,
                    format!(
                        "NODE_COORD_SECTION has {} entries, expected {}",
                        coords.len(),
                        n
                    ),
                ));
            }
            MetricInstance::from_points(&coords, s, t)
        }
        Some("EXPLICIT") => {
            match weight_format.as_deref() {
                Some("FULL_MATRIX") | None => {}
                Some(other) => {
                    return Err(err(0, format!("unsupported EDGE_WEIGHT_FORMAT {other:?}")));
                }
            }
            if weights.len() != n * n {
                return Err(err(
                    0,
                    format!(
                        "EDGE_WEIGHT_SECTION has {} entries, expected {}",
                        weights.len(),
                        n * n
                    ),
                ));
            }
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|i| weights[i * n..(i + 1) * n].to_vec())
                .collect();
            MetricInstance::new(cost, s, t)
        }
        Some(other) => Err(err(0, format!("unsupported EDGE_WEIGHT_TYPE {other:?}"))),
        None => Err(err(0, "missing EDGE_WEIGHT_TYPE".into())),
    }
}

/// Random instance families. Generation is deterministic in `(n, family, seed)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenFamily {
    /// Points drawn uniformly from the unit square, Euclidean costs.
    EuclideanUnitSquare,
    /// Uniform random symmetric weights, made metric by shortest-path closure.
    RandomMetricClosure,
}

impl std::str::FromStr for GenFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "euclidean-unit-square" | "euclidean" => Ok(GenFamily::EuclideanUnitSquare),
            "random-metric-closure" | "random" => Ok(GenFamily::RandomMetricClosure),
            other => Err(format!(
                "unknown family {other:?} (expected euclidean-unit-square or random-metric-closure)"
            )),
        }
    }
}

impl std::fmt::Display for GenFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenFamily::EuclideanUnitSquare => write!(f, "euclidean-unit-square"),
            GenFamily::RandomMetricClosure => write!(f, "random-metric-closure"),
        }
    }
}

/// Generates a random valid instance with `s = 0`, `t = n-1`.
pub fn gen_random(n: usize, family: GenFamily, seed: u64) -> Result<MetricInstance> {
    if n < 2 {
        return Err(Error::InvalidInstance(format!(
            "n={n} too small, need n >= 2"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        GenFamily::EuclideanUnitSquare => {
            let points: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
                .collect();
            MetricInstance::from_points(&points, 0, n - 1)
        }
        GenFamily::RandomMetricClosure => {
            let mut weights = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let w: f64 = rng.gen::<f64>() + 0.05;
                    weights[i][j] = w;
                    weights[j][i] = w;
                }
            }
            MetricInstance::new(metric_closure(&weights), 0, n - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> MetricInstance {
        MetricInstance::new(
            vec![
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 1.0, 0.0],
            ],
            0,
            2,
        )
        .unwrap()
    }

    #[test]
    fn parse_smallest_json() {
        let inst =
            parse_instance(r#"{"n":2,"cost":[[0,5],[5,0]],"s":0,"t":1}"#, Format::Json).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.cost(inst.s(), inst.t()), 5.0);
    }

    #[test]
    fn parse_points_345() {
        let inst = parse_instance(r#"{"n":2,"points":[[0,0],[3,4]]}"#, Format::Json).unwrap();
        assert_eq!(inst.cost(0, 1), 5.0);
        assert_eq!((inst.s(), inst.t()), (0, 1));
    }

    #[test]
    fn parse_rejects_triangle_violation() {
        let text = r#"{"n":3,"cost":[[0,1,10],[1,0,1],[10,1,0]]}"#;
        match parse_instance(text, Format::Json) {
            Err(Error::Metric(MetricViolation::Triangle { i, j, k, .. })) => {
                assert_eq!((i, j, k), (0, 1, 2));
            }
            other => panic!("expected triangle violation, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "{\"n\": 2,\n  \"cost\": [[0,5],[5,oops]]}";
        match parse_instance(text, Format::Json) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validate_reports_asymmetry() {
        let inst = MetricInstance {
            n: 3,
            cost: vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![1.0, 2.0, 0.0],
            ],
            s: 0,
            t: 2,
        };
        match validate_metric(&inst) {
            Some(MetricViolation::Asymmetry { i, j, .. }) => assert_eq!((i, j), (1, 2)),
            other => panic!("expected asymmetry, got {other:?}"),
        }
    }

    #[test]
    fn validate_accepts_identity_euclidean() {
        let inst =
            MetricInstance::from_points(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.7)], 0, 2).unwrap();
        assert!(validate_metric(&inst).is_none());
    }

    #[test]
    fn closure_shortens_and_is_idempotent() {
        let w = vec![
            vec![0.0, 1.0, 10.0],
            vec![1.0, 0.0, 1.0],
            vec![10.0, 1.0, 0.0],
        ];
        let d = metric_closure(&w);
        assert_eq!(d[0][2], 2.0);
        assert!(d
            .iter()
            .zip(&w)
            .all(|(dr, wr)| dr.iter().zip(wr).all(|(a, b)| a <= b)));
        assert_eq!(metric_closure(&d), d);
    }

    #[test]
    fn closure_matches_brute_force_paths() {
        // Every path of every length on 4 vertices, minimized by hand.
        let w = vec![
            vec![0.0, 3.0, 9.0, 7.0],
            vec![3.0, 0.0, 2.0, 8.0],
            vec![9.0, 2.0, 0.0, 1.5],
            vec![7.0, 8.0, 1.5, 0.0],
        ];
        let n = w.len();
        let d = metric_closure(&w);
        for i in 0..n {
            for j in 0..n {
                let mut best = w[i][j];
                // enumerate all vertex sequences of length <= n between i and j
                let mids: Vec<usize> = (0..n).collect();
                for &a in &mids {
                    best = best.min(w[i][a] + w[a][j]);
                    for &b in &mids {
                        best = best.min(w[i][a] + w[a][b] + w[b][j]);
                    }
                }
                assert!((d[i][j] - best).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn json_roundtrip_identity() {
        let inst = path3();
        let again = parse_instance(&inst.to_json(), Format::Json).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn gen_is_deterministic_and_valid() {
        let a = gen_random(2, GenFamily::EuclideanUnitSquare, 7).unwrap();
        let b = gen_random(2, GenFamily::EuclideanUnitSquare, 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(validate_metric(&a).is_none());

        let c = gen_random(8, GenFamily::RandomMetricClosure, 1).unwrap();
        assert!(validate_metric(&c).is_none());
        assert_eq!((c.s(), c.t()), (0, 7));

        assert!(gen_random(1, GenFamily::EuclideanUnitSquare, 0).is_err());
    }

    #[test]
    fn tsplib_euc2d_and_matrix() {
        let text = "NAME : toy\nTYPE : TSP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0.0 0.0\n2 3.0 4.0\nEOF\n";
        let inst = parse_instance(text, Format::Tsplib).unwrap();
        assert_eq!(inst.cost(0, 1), 5.0);

        let text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nFIXED_ENDPOINTS: 0 1\nEDGE_WEIGHT_SECTION\n0 1 2\n1 0 1\n2 1 0\nEOF\n";
        let inst = parse_instance(text, Format::Tsplib).unwrap();
        assert_eq!((inst.s(), inst.t()), (0, 1));
        assert_eq!(inst.cost(0, 2), 2.0);

        match parse_instance("DIMENSION: x\n", Format::Tsplib) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected line-1 parse error, got {other:?}"),
        }
    }

    #[test]
    fn tour_result_validates() {
        let inst = path3();
        let tour = TourResult::new(vec![0, 1, 2], &inst).unwrap();
        assert_eq!(tour.cost, 2.0);
        assert!(TourResult::new(vec![0, 2, 1], &inst).is_err());
        assert!(TourResult::new(vec![0, 1], &inst).is_err());
    }

    #[test]
    fn circuit_tour_closes_back() {
        let inst = MetricInstance::new(
            vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ],
            0,
            0,
        )
        .unwrap();
        let tour = TourResult::new(vec![0, 1, 2], &inst).unwrap();
        assert_eq!(tour.cost, 3.0);
    }
}
