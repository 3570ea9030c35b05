//! Parity correction and tour assembly.
//!
//! Both solvers end the same way: take a spanning tree, collect the vertices
//! whose tree degree has the wrong parity, fix them with a minimum-weight
//! perfect matching (a minimum T-join under a metric), walk an Eulerian trail
//! through tree plus matching, and shortcut repeated visits. The baseline
//! feeds a minimum spanning tree into this pipeline; the recursive dynamic
//! program feeds its tree and also returns the parity correction vector whose
//! scaled version certifies the matching cost.

use crate::audit::{Audit, AuditLevel, CheckId, Violation};
use crate::cuts::CutChain;
use crate::dp::{lambda_schedule, minimum_spanning_tree, DpResult, Solver, StatsSnapshot};
use crate::error::{Error, Result};
use crate::instance::{MetricInstance, TourResult};
use crate::lp::{DpCall, EdgeVec};
use crate::matching::max_weight_matching;
use crate::num::Weight;
use num_rational::BigRational;
use std::path::PathBuf;

/// The set of vertices whose tree degree has the wrong parity:
/// `T = {v : deg_S(v) odd} △ {s} △ {t}`. Always even-sized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParitySet {
    pub members: Vec<usize>,
}

/// A perfect matching on a parity set together with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinEdges {
    pub edges: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Computes the parity set of a spanning tree.
pub fn odd_parity_set(tree: &[(usize, usize)], s: usize, t: usize, n: usize) -> ParitySet {
    let mut degree = vec![0usize; n];
    for &(u, v) in tree {
        degree[u] += 1;
        degree[v] += 1;
    }
    let mut wrong = vec![false; n];
    for (v, d) in degree.iter().enumerate() {
        wrong[v] = d % 2 == 1;
    }
    wrong[s] = !wrong[s];
    wrong[t] = !wrong[t];
    let members: Vec<usize> = (0..n).filter(|&v| wrong[v]).collect();
    debug_assert!(members.len() % 2 == 0);
    ParitySet { members }
}

/// Minimum-cost perfect matching on the parity set under the instance metric,
/// via blossom maximum-weight matching on negated costs with the cardinality
/// bound active. This is a minimum T-join because the costs are metric.
pub fn min_cost_perfect_matching(t_set: &ParitySet, inst: &MetricInstance) -> JoinEdges {
    let verts = &t_set.members;
    assert!(verts.len() % 2 == 0, "parity set must be even");
    if verts.is_empty() {
        return JoinEdges {
            edges: Vec::new(),
            cost: 0.0,
        };
    }
    let mut edges = Vec::with_capacity(verts.len() * (verts.len() - 1) / 2);
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            edges.push((i, j, -inst.cost(verts[i], verts[j])));
        }
    }
    let mate = max_weight_matching(verts.len(), &edges, true);
    let mut out = Vec::with_capacity(verts.len() / 2);
    let mut cost = 0.0;
    for (i, m) in mate.iter().enumerate() {
        let j = m.expect("complete even graph has a perfect matching");
        if i < j {
            out.push((verts[i].min(verts[j]), verts[i].max(verts[j])));
            cost += inst.cost(verts[i], verts[j]);
        }
    }
    JoinEdges { edges: out, cost }
}

/// Eulerian trail through an edge multiset from `start` to `end` (a closed
/// trail when they coincide). Requires connected support and odd degrees at
/// exactly the distinct endpoints.
pub fn eulerian_trail(
    edges: &[(usize, usize)],
    start: usize,
    end: usize,
    n: usize,
) -> Result<Vec<usize>> {
    if edges.is_empty() {
        if start == end {
            return Ok(vec![start]);
        }
        return Err(Error::EulerPrecondition(
            "no edges but distinct endpoints".into(),
        ));
    }
    let mut degree = vec![0usize; n];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, &(u, v)) in edges.iter().enumerate() {
        degree[u] += 1;
        degree[v] += 1;
        adj[u].push((v, id));
        adj[v].push((u, id));
    }
    for v in 0..n {
        let expect_odd = if start == end {
            false
        } else {
            v == start || v == end
        };
        if (degree[v] % 2 == 1) != expect_odd {
            return Err(Error::EulerPrecondition(format!(
                "vertex {v} has degree {}",
                degree[v]
            )));
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }

    let mut used = vec![false; edges.len()];
    let mut next = vec![0usize; n];
    let mut stack = vec![start];
    let mut circuit = Vec::with_capacity(edges.len() + 1);
    while let Some(&v) = stack.last() {
        let mut advanced = false;
        while next[v] < adj[v].len() {
            let (to, id) = adj[v][next[v]];
            if used[id] {
                next[v] += 1;
                continue;
            }
            used[id] = true;
            next[v] += 1;
            stack.push(to);
            advanced = true;
            break;
        }
        if !advanced {
            circuit.push(v);
            stack.pop();
        }
    }
    if circuit.len() != edges.len() + 1 {
        return Err(Error::EulerPrecondition(
            "multigraph support is disconnected".into(),
        ));
    }
    circuit.reverse();
    debug_assert_eq!(circuit[0], start);
    debug_assert_eq!(*circuit.last().unwrap(), end);
    Ok(circuit)
}

/// Shortcuts a walk into a tour: first occurrence of each vertex wins, the
/// terminal endpoint is forced last. Never costs more than the walk under
/// the triangle inequality.
pub fn shortcut(walk: &[usize], inst: &MetricInstance) -> Result<TourResult> {
    let n = inst.n();
    let (s, t) = (inst.s(), inst.t());
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for &v in walk {
        if !seen[v] && (s == t || v != t) {
            seen[v] = true;
            order.push(v);
        }
    }
    if s != t {
        order.push(t);
        seen[t] = true;
    }
    if let Some(missing) = (0..n).find(|&v| !seen[v]) {
        return Err(Error::WalkIncomplete(missing));
    }
    let tour = TourResult::new(order, inst)?;
    let walk_cost: f64 = walk.windows(2).map(|w| inst.cost(w[0], w[1])).sum();
    debug_assert!(tour.cost <= walk_cost + 1e-9 * (1.0 + walk_cost.abs()));
    Ok(tour)
}

/// Runs tree + parity matching + Eulerian trail + shortcut.
fn finish_tour(
    tree: &[(usize, usize)],
    inst: &MetricInstance,
) -> Result<(TourResult, JoinEdges, ParitySet)> {
    let t_set = odd_parity_set(tree, inst.s(), inst.t(), inst.n());
    let join = min_cost_perfect_matching(&t_set, inst);
    let mut multigraph: Vec<(usize, usize)> = tree.to_vec();
    multigraph.extend_from_slice(&join.edges);
    let walk = eulerian_trail(&multigraph, inst.s(), inst.t(), inst.n())?;
    let tour = shortcut(&walk, inst)?;
    Ok((tour, join, t_set))
}

/// Christofides-Hoogeveen baseline: minimum spanning tree plus parity
/// correction.
pub fn christofides_hoogeveen(inst: &MetricInstance) -> Result<TourResult> {
    let costs = crate::num::Costs::<f64>::from_matrix(inst.matrix());
    let tree = minimum_spanning_tree(crate::cuts::CutSide::full(inst.n()), &costs);
    let (tour, _, _) = finish_tour(&tree, inst)?;
    Ok(tour)
}

/// Options for [`solve_rdp`].
pub struct RdpOptions {
    /// Run the LP and assembly arithmetic in exact rationals.
    pub rational: bool,
    pub audit_level: AuditLevel,
    /// Window-size cap for exhaustive audit enumerations.
    pub audit_cap: usize,
    /// Per-call JSONL trace destination.
    pub trace_path: Option<PathBuf>,
}

impl Default for RdpOptions {
    fn default() -> Self {
        RdpOptions {
            rational: false,
            audit_level: AuditLevel::Off,
            audit_cap: 10,
            trace_path: None,
        }
    }
}

/// Full result of a recursive-DP solve, converted to doubles.
#[derive(Clone, Debug)]
pub struct RdpOutcome {
    pub tour: TourResult,
    pub epsilon: f64,
    pub k: u32,
    pub lambda1: f64,
    pub tree: Vec<(usize, usize)>,
    pub y_star: EdgeVec<f64>,
    pub chain: CutChain,
    pub lp_value_top: f64,
    pub tree_cost: f64,
    /// Cost of the parity correction vector `y*`.
    pub parity_cost: f64,
    pub matching_cost: f64,
    pub stats: StatsSnapshot,
    pub subinstances: usize,
    pub rational_used: bool,
    pub violations: Vec<Violation>,
}

/// The recursive dynamic-programming solver. A chain violation in double
/// arithmetic (crossing narrow cuts can only be numerical noise) triggers
/// one retry in exact rational mode before failing.
pub fn solve_rdp(inst: &MetricInstance, epsilon: f64, opts: &RdpOptions) -> Result<RdpOutcome> {
    if opts.rational {
        return rdp_pipeline::<BigRational>(inst, epsilon, opts, true);
    }
    match rdp_pipeline::<f64>(inst, epsilon, opts, false) {
        Err(Error::ChainViolation(msg)) => {
            log::warn!("retrying in exact rational mode after chain violation: {msg}");
            rdp_pipeline::<BigRational>(inst, epsilon, opts, true)
        }
        other => other,
    }
}

fn rdp_pipeline<T: Weight>(
    inst: &MetricInstance,
    epsilon: f64,
    opts: &RdpOptions,
    rational: bool,
) -> Result<RdpOutcome> {
    if inst.n() > crate::cuts::MAX_VERTICES {
        return Err(Error::InvalidInstance(format!(
            "cut bitsets support up to {} vertices, got {}",
            crate::cuts::MAX_VERTICES,
            inst.n()
        )));
    }
    let sched = lambda_schedule::<T>(epsilon)?;
    let k = sched.k();
    let lambda1 = sched.lambda(1).to_f64();
    let audit = Audit::new(opts.audit_level, opts.audit_cap);
    let mut solver = Solver::new(inst, sched, audit);
    if let Some(path) = &opts.trace_path {
        let file = std::fs::File::create(path)?;
        solver = solver.with_trace(Box::new(std::io::BufWriter::new(file)));
    }

    let top = DpCall::top(inst.s(), inst.t());
    let dp: std::sync::Arc<DpResult<T>> = solver.run_dp(&top)?;

    let (tour, join, t_set) = finish_tour(&dp.tree, inst)?;

    let parity_cost = dp.y_cost.to_f64();
    let tree_cost = dp.tree_cost.to_f64();
    // The scaled parity vector certifies the matching, so its cost can
    // never exceed lambda_1 * c(y*).
    if solver.audit.enabled() && join.cost > lambda1 * parity_cost + 1e-7 * (1.0 + parity_cost) {
        solver.audit.record(
            CheckId::TJoinMembership,
            format!(
                "matching cost {} exceeds lambda_1*c(y*) = {}",
                join.cost,
                lambda1 * parity_cost
            ),
        );
    }
    debug_assert!(tour.cost <= tree_cost + join.cost + 1e-7 * (1.0 + tree_cost + join.cost));
    let _ = t_set;

    Ok(RdpOutcome {
        tour,
        epsilon,
        k,
        lambda1,
        tree: dp.tree.clone(),
        y_star: dp.y.map_to_f64(),
        chain: dp.chain.clone(),
        lp_value_top: dp.lp_value.to_f64(),
        tree_cost,
        parity_cost,
        matching_cost: join.cost,
        stats: solver.stats.snapshot(),
        subinstances: solver.subinstances(),
        rational_used: rational,
        violations: solver.audit.violations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_random, GenFamily};

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
    fn parity_set_cancels_path_endpoints() {
        // Path s-t: both endpoints odd, cancelled by the symmetric difference.
        let t = odd_parity_set(&[(0, 1)], 0, 1, 2);
        assert!(t.members.is_empty());
    }

    #[test]
    fn parity_set_star() {
        // Star center 4 over leaves 0..3 with s=0, t=1: the two other leaves
        // stay, the endpoints cancel, the center has even degree.
        let tree = [(0, 4), (1, 4), (2, 4), (3, 4)];
        let t = odd_parity_set(&tree, 0, 1, 5);
        assert_eq!(t.members, vec![2, 3]);
    }

    #[test]
    fn matching_pairs_two_vertices() {
        let inst = path3();
        let join = min_cost_perfect_matching(
            &ParitySet {
                members: vec![0, 2],
            },
            &inst,
        );
        assert_eq!(join.edges, vec![(0, 2)]);
        assert_eq!(join.cost, 2.0);
        let empty = min_cost_perfect_matching(&ParitySet { members: vec![] }, &inst);
        assert_eq!(empty.cost, 0.0);
    }

    #[test]
    fn euler_trail_single_edge_and_multi() {
        assert_eq!(eulerian_trail(&[(0, 1)], 0, 1, 2).unwrap(), vec![0, 1]);
        // Triangle plus doubled edge {s,t}: degrees s:3, a:2, t:3.
        let edges = [(0, 1), (1, 2), (0, 2), (0, 2)];
        let walk = eulerian_trail(&edges, 0, 2, 3).unwrap();
        assert_eq!(walk.len(), 5);
        assert_eq!(walk[0], 0);
        assert_eq!(walk[4], 2);
        let mut used: Vec<(usize, usize)> = walk
            .windows(2)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect();
        used.sort_unstable();
        let mut expect = edges.to_vec();
        expect.sort_unstable();
        assert_eq!(used, expect);
    }

    #[test]
    fn euler_trail_rejects_bad_parity_and_disconnection() {
        assert!(eulerian_trail(&[(0, 1), (1, 2)], 0, 1, 3).is_err());
        assert!(eulerian_trail(&[(0, 1), (2, 3)], 0, 1, 4).is_err());
    }

    #[test]
    fn shortcut_examples() {
        let inst = path3();
        let tour = shortcut(&[0, 1, 2], &inst).unwrap();
        assert_eq!(tour.order, vec![0, 1, 2]);
        // Walk s,a,s,t shortcuts to s,a,t of cost 2 <= 4.
        let walk = [0, 1, 0, 2];
        let tour = shortcut(&walk, &inst).unwrap();
        assert_eq!(tour.order, vec![0, 1, 2]);
        assert_eq!(tour.cost, 2.0);
        assert!(shortcut(&[0, 2], &inst).is_err());
    }

    #[test]
    fn christofides_smallest_cases() {
        let inst = MetricInstance::new(vec![vec![0.0, 5.0], vec![5.0, 0.0]], 0, 1).unwrap();
        let tour = christofides_hoogeveen(&inst).unwrap();
        assert_eq!(tour.order, vec![0, 1]);
        assert_eq!(tour.cost, 5.0);

        let tour = christofides_hoogeveen(&path3()).unwrap();
        assert_eq!(tour.order, vec![0, 1, 2]);
        assert_eq!(tour.cost, 2.0);
    }

    #[test]
    fn rdp_two_vertices_and_path3() {
        let inst = MetricInstance::new(vec![vec![0.0, 5.0], vec![5.0, 0.0]], 0, 1).unwrap();
        let out = solve_rdp(&inst, 0.5, &RdpOptions::default()).unwrap();
        assert_eq!(out.tour.order, vec![0, 1]);
        assert_eq!(out.tour.cost, 5.0);
        assert_eq!(out.k, 1);

        let opts = RdpOptions {
            audit_level: AuditLevel::Exhaustive,
            ..RdpOptions::default()
        };
        let out = solve_rdp(&path3(), 0.25, &opts).unwrap();
        assert_eq!(out.k, 2);
        assert!((out.lambda1 - 0.6).abs() < 1e-12);
        assert_eq!(out.tour.cost, 2.0);
        // Top-level cost bound with OPT = 2.
        assert!(out.tree_cost + out.lambda1 * out.parity_cost <= (1.0 + out.lambda1) * 2.0 + 1e-9);
        assert!(out.violations.is_empty(), "{:?}", out.violations);
    }

    #[test]
    fn rdp_circuit_case_matches_christofides_shape() {
        // s = t routes through the circuit special case.
        let mut inst = gen_random(6, GenFamily::EuclideanUnitSquare, 4).unwrap();
        inst = MetricInstance::new(inst.matrix().to_vec(), 0, 0).unwrap();
        let out = solve_rdp(&inst, 0.25, &RdpOptions::default()).unwrap();
        assert_eq!(out.tour.order.len(), 6);
        assert_eq!(out.tour.order[0], 0);
        let chr = christofides_hoogeveen(&inst).unwrap();
        assert!(out.tour.cost <= chr.cost + 1e-9);
    }

    #[test]
    fn rdp_rational_mode_agrees_with_f64() {
        let inst = gen_random(5, GenFamily::RandomMetricClosure, 11).unwrap();
        let fast = solve_rdp(&inst, 0.25, &RdpOptions::default()).unwrap();
        let exact = solve_rdp(
            &inst,
            0.25,
            &RdpOptions {
                rational: true,
                ..RdpOptions::default()
            },
        )
        .unwrap();
        assert!(exact.rational_used);
        assert!((fast.tour.cost - exact.tour.cost).abs() < 1e-7);
        assert!((fast.lp_value_top - exact.lp_value_top).abs() < 1e-7);
        assert!((fast.parity_cost - exact.parity_cost).abs() < 1e-7);
    }
}
