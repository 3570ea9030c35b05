//! The recursive dynamic program over lonely-cut guesses.
//!
//! Each call solves its window's cut LP, extracts the narrow-cut chain,
//! builds the auxiliary digraph whose nodes are (cut, inside endpoint,
//! outside endpoint) triples, evaluates every arc's sub-instance one level
//! deeper, and picks a cheapest source-sink path. The chosen path's
//! sub-trees joined by the guessed lonely edges form the tree `S`; the
//! sub-vectors plus the lonely-edge incidences form `y'`, which is mixed
//! with the local LP optimum into the parity correction vector `y`. At the
//! final level the call returns a minimum spanning tree and the LP optimum
//! itself.
//!
//! Sub-instances are memoized globally, keyed by the full call tuple
//! (shores, endpoints, busy list, level); the memo computes each key at most
//! once and lets concurrent requesters block on the key's slot.

use crate::audit::{self, Audit};
use crate::cuts::{narrow_cuts, CutChain, CutSide, NarrowCut};
use crate::error::{Error, Result};
use crate::instance::MetricInstance;
use crate::lp::{solve_sub_lp, window_edges, DpCall, EdgeVec, LpOutcome, LpRow};
use crate::num::{Costs, Weight};
use serde::Serialize;
use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering::Relaxed};
use std::sync::{Arc, Mutex};

/// Recursion depth and mixing coefficients for a target slack epsilon:
/// `k = ceil(log2(1/eps))`, `Λ = 2^(k+1) - 3`, `λ_l = (2^(k-l+1) - 1)/Λ`.
#[derive(Clone, Debug)]
pub struct LambdaSchedule<T> {
    epsilon: f64,
    k: u32,
    big_lambda: T,
    lambdas: Vec<T>,
}

impl<T: Weight> LambdaSchedule<T> {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn big_lambda(&self) -> &T {
        &self.big_lambda
    }

    /// `λ_l` for `l` in `1..=k`.
    pub fn lambda(&self, l: u32) -> &T {
        &self.lambdas[(l - 1) as usize]
    }

    /// `λ_{l+1}` with the convention `λ_{k+1} = 0`.
    pub fn lambda_next(&self, l: u32) -> T {
        if l >= self.k {
            T::zero()
        } else {
            self.lambdas[l as usize].clone()
        }
    }

    /// `Λ·λ_l = 2^(k-l+1) - 1`, the exact integer used in cut thresholds.
    pub fn lambda_scaled_int(&self, l: u32) -> i64 {
        (1i64 << (self.k - l + 1)) - 1
    }

    /// Fractions of each level's LP optimum inside the unfolded top-level
    /// parity correction vector `λ_1·y*`: `λ_l - λ_{l+1}` per level, ending
    /// with `λ_k` itself.
    pub fn mixing_fractions(&self) -> Vec<T> {
        (1..=self.k)
            .map(|l| self.lambda(l).clone() - self.lambda_next(l))
            .collect()
    }
}

/// Builds the schedule for `0 < eps <= 1/2`.
pub fn lambda_schedule<T: Weight>(epsilon: f64) -> Result<LambdaSchedule<T>> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidInstance(format!(
            "epsilon {epsilon} outside (0, 1/2]"
        )));
    }
    let mut k: u32 = 1;
    while ((1u64 << k) as f64) * epsilon < 1.0 {
        k += 1;
        if k > 40 {
            return Err(Error::InvalidInstance(format!(
                "epsilon {epsilon} too small"
            )));
        }
    }
    let big = (1i64 << (k + 1)) - 3;
    let lambdas: Vec<T> = (1..=k)
        .map(|l| T::ratio((1i64 << (k - l + 1)) - 1, big))
        .collect();
    debug_assert!(lambdas.windows(2).all(|w| w[0] > w[1]));
    Ok(LambdaSchedule {
        epsilon,
        k,
        big_lambda: T::from_int(big),
        lambdas,
    })
}

/// Global solve counters. Shared by reference across the recursion.
#[derive(Default)]
pub struct SolverStats {
    pub lp_solves: AtomicU64,
    pub dp_calls: AtomicU64,
    pub memo_hits: AtomicU64,
    pub separation_rounds: AtomicU64,
    pub simplex_pivots: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct StatsSnapshot {
    pub lp_solves: u64,
    pub dp_calls: u64,
    pub memo_hits: u64,
    pub separation_rounds: u64,
}

impl SolverStats {
    pub fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            lp_solves: self.lp_solves.load(Relaxed),
            dp_calls: self.dp_calls.load(Relaxed),
            memo_hits: self.memo_hits.load(Relaxed),
            separation_rounds: self.separation_rounds.load(Relaxed),
        }
    }
}

/// Output of one dynamic-program call.
#[derive(Clone, Debug)]
pub struct DpResult<T> {
    /// Edge set of the tree spanning the window.
    pub tree: Vec<(usize, usize)>,
    /// Parity correction contribution.
    pub y: EdgeVec<T>,
    /// Chain of lonely cuts crossed exactly once by the tree.
    pub chain: CutChain,
    pub lp_value: T,
    pub tree_cost: T,
    pub y_cost: T,
    /// Digraph size of this node: chain length and arc count.
    pub m: usize,
    pub arcs: usize,
}

impl<T: Weight> DpResult<T> {
    fn empty(n: usize) -> Self {
        DpResult {
            tree: Vec::new(),
            y: EdgeVec::new(n),
            chain: CutChain::default(),
            lp_value: T::zero(),
            tree_cost: T::zero(),
            y_cost: T::zero(),
            m: 0,
            arcs: 0,
        }
    }
}

type MemoSlot<T> = Arc<Mutex<Option<Arc<DpResult<T>>>>>;

/// Sub-instance cache with per-key at-most-once evaluation. Requesters of a
/// key being computed elsewhere block on that key's slot only.
pub struct Memo<T> {
    slots: Mutex<HashMap<DpCall, MemoSlot<T>>>,
}

impl<T: Weight> Memo<T> {
    pub fn new() -> Self {
        Memo {
            slots: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute<F>(&self, key: &DpCall, f: F) -> Result<(Arc<DpResult<T>>, bool)>
    where
        F: FnOnce() -> Result<DpResult<T>>,
    {
        let slot = {
            let mut map = self.slots.lock().unwrap();
            map.entry(key.clone()).or_default().clone()
        };
        let mut guard = slot.lock().unwrap();
        if let Some(hit) = guard.as_ref() {
            return Ok((hit.clone(), true));
        }
        let value = Arc::new(f()?);
        *guard = Some(value.clone());
        Ok((value, false))
    }
}

impl<T: Weight> Default for Memo<T> {
    fn default() -> Self {
        Memo::new()
    }
}

/// One node of the auxiliary digraph: a narrow cut with a guessed lonely-edge
/// endpoint on each side, or one of the two boundary nodes.
#[derive(Clone, Copy, Debug)]
pub struct AuxNode {
    /// -1 for the source, `0..m` for interior chain positions, `m` for the sink.
    pub layer: i64,
    /// Full-space member set: `W_s` at the source, `V \ W_t` at the sink.
    pub cut: CutSide,
    pub v: Option<usize>,
    pub w: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct AuxArc {
    pub tail: usize,
    pub head: usize,
    pub sub_call: DpCall,
}

/// Builds the auxiliary digraph for a call whose narrow-cut chain is given.
/// The source-to-sink arc always exists, so a path always exists.
pub fn build_aux_digraph(
    narrow: &[CutSide],
    call: &DpCall,
    n: usize,
) -> (Vec<AuxNode>, Vec<AuxArc>) {
    let window = call.window(n);
    let full = CutSide::full(n);
    let mut nodes = vec![AuxNode {
        layer: -1,
        cut: call.w_s,
        v: None,
        w: Some(call.s_prime),
    }];
    for (i, &side) in narrow.iter().enumerate() {
        for v in side.intersect(window).iter() {
            for w in window.minus(side).iter() {
                nodes.push(AuxNode {
                    layer: i as i64,
                    cut: side,
                    v: Some(v),
                    w: Some(w),
                });
            }
        }
    }
    nodes.push(AuxNode {
        layer: narrow.len() as i64,
        cut: full.minus(call.w_t),
        v: Some(call.t_prime),
        w: None,
    });

    let mut pool: Vec<CutSide> = narrow.to_vec();
    pool.extend_from_slice(&call.busy);

    let mut arcs = Vec::new();
    for (ti, tail) in nodes.iter().enumerate() {
        let Some(w1) = tail.w else { continue };
        for (hi, head) in nodes.iter().enumerate().skip(ti + 1) {
            if head.layer <= tail.layer {
                continue;
            }
            let Some(v2) = head.v else { continue };
            let diff = head.cut.minus(tail.cut);
            if !diff.contains(w1) || !diff.contains(v2) {
                continue;
            }
            let lower = tail.cut.union(CutSide::singleton(w1));
            let upper = head.cut.minus(CutSide::singleton(v2));
            let busy: Vec<CutSide> = pool
                .iter()
                .copied()
                .filter(|c| lower.is_subset(*c) && c.is_subset(upper))
                .collect();
            arcs.push(AuxArc {
                tail: ti,
                head: hi,
                sub_call: DpCall::new(tail.cut, full.minus(head.cut), w1, v2, busy, call.level + 1),
            });
        }
    }
    (nodes, arcs)
}

/// Arc cost: sub-tree cost plus the discounted sub-vector cost, plus the
/// head's lonely-edge term unless the head is the sink.
pub fn arc_cost<T: Weight>(
    head: &AuxNode,
    sub: &DpResult<T>,
    sched: &LambdaSchedule<T>,
    level: u32,
    costs: &Costs<T>,
) -> T {
    let lam = sched.lambda_next(level);
    let mut d = sub.tree_cost.clone() + lam.clone() * sub.y_cost.clone();
    if let (Some(v2), Some(w2)) = (head.v, head.w) {
        d = d + (T::one() + lam) * costs.get(v2, w2).clone();
    }
    d
}

/// Cheapest source-to-sink path under costs `d`, ties broken by fewer arcs,
/// then lexicographically smallest node-id sequence. Arcs always point from
/// lower to higher node ids, so one sweep in arc order is exact.
pub fn shortest_path_dag<T: Weight>(
    node_count: usize,
    arcs: &[AuxArc],
    d: &[T],
) -> (Vec<usize>, Vec<usize>, T) {
    #[derive(Clone)]
    struct Label<T> {
        cost: T,
        hops: u32,
        nodes: Vec<u32>,
        arcs: Vec<u32>,
    }
    let mut best: Vec<Option<Label<T>>> = vec![None; node_count];
    best[0] = Some(Label {
        cost: T::zero(),
        hops: 0,
        nodes: vec![0],
        arcs: Vec::new(),
    });
    let mut order: Vec<usize> = (0..arcs.len()).collect();
    order.sort_by_key(|&i| (arcs[i].tail, arcs[i].head));
    for idx in order {
        let arc = &arcs[idx];
        let Some(tail) = best[arc.tail].clone() else {
            continue;
        };
        let cost = tail.cost.clone() + d[idx].clone();
        let hops = tail.hops + 1;
        let better = match &best[arc.head] {
            None => true,
            Some(cur) => {
                cost < cur.cost
                    || (cost == cur.cost
                        && (hops < cur.hops || (hops == cur.hops && tail.nodes < cur.nodes)))
            }
        };
        if better {
            let mut nodes = tail.nodes.clone();
            nodes.push(arc.head as u32);
            let mut path_arcs = tail.arcs.clone();
            path_arcs.push(idx as u32);
            best[arc.head] = Some(Label {
                cost,
                hops,
                nodes,
                arcs: path_arcs,
            });
        }
    }
    let label = best[node_count - 1]
        .clone()
        .expect("source-sink arc guarantees a path");
    (
        label.nodes.iter().map(|&i| i as usize).collect(),
        label.arcs.iter().map(|&i| i as usize).collect(),
        label.cost,
    )
}

/// Deterministic Kruskal tree over the window's complete graph,
/// edges ordered by `(cost, u, v)`.
pub fn minimum_spanning_tree<T: Weight>(window: CutSide, costs: &Costs<T>) -> Vec<(usize, usize)> {
    let mut edges = window_edges(window);
    edges.sort_by(|&(a, b), &(c, d)| {
        costs
            .get(a, b)
            .partial_cmp(costs.get(c, d))
            .expect("costs are ordered")
            .then((a, b).cmp(&(c, d)))
    });
    let n = costs.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut tree = Vec::new();
    let need = window.len().saturating_sub(1);
    for (u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            tree.push((u, v));
            if tree.len() == need {
                break;
            }
        }
    }
    tree.sort_unstable();
    tree
}

#[derive(Serialize)]
struct TraceNode {
    cut: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<usize>,
}

#[derive(Serialize)]
struct TraceRecord {
    level: u32,
    window: usize,
    lp_value: f64,
    m: usize,
    path: Vec<TraceNode>,
    tree_cost: f64,
    y_cost: f64,
    lp_rows: Vec<TraceRow>,
}

#[derive(Serialize)]
struct TraceRow {
    cut: Vec<usize>,
    rhs: u8,
    dual: f64,
}

/// Recursive solver state: converted costs, schedule, memo, counters, and
/// optional audit/trace sinks. One `Solver` per instance and epsilon; calls
/// are pure given this shared state.
pub struct Solver<T: Weight> {
    n: usize,
    costs: Costs<T>,
    sched: LambdaSchedule<T>,
    memo: Memo<T>,
    pub stats: SolverStats,
    pub audit: Audit,
    trace: Option<Mutex<Box<dyn Write + Send>>>,
}

impl<T: Weight> Solver<T> {
    pub fn new(inst: &MetricInstance, sched: LambdaSchedule<T>, audit: Audit) -> Self {
        Solver {
            n: inst.n(),
            costs: Costs::from_matrix(inst.matrix()),
            sched,
            memo: Memo::new(),
            stats: SolverStats::default(),
            audit,
            trace: None,
        }
    }

    pub fn with_trace(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.trace = Some(Mutex::new(sink));
        self
    }

    pub fn costs(&self) -> &Costs<T> {
        &self.costs
    }

    pub fn schedule(&self) -> &LambdaSchedule<T> {
        &self.sched
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn subinstances(&self) -> usize {
        self.memo.len()
    }

    /// Runs the dynamic program. Memoized across parents: arcs that share
    /// the sub-call tuple share one evaluation.
    pub fn run_dp(&self, call: &DpCall) -> Result<Arc<DpResult<T>>> {
        let (result, hit) = self.memo.get_or_compute(call, || self.eval_call(call))?;
        if hit {
            self.stats.memo_hits.fetch_add(1, Relaxed);
        }
        Ok(result)
    }

    fn eval_call(&self, call: &DpCall) -> Result<DpResult<T>> {
        self.stats.dp_calls.fetch_add(1, Relaxed);
        call.validate(self.n, self.sched.k())?;

        let window = call.window(self.n);
        if window.len() == 1 {
            return Ok(DpResult::empty(self.n));
        }

        let lp = solve_sub_lp(call, &self.costs)?;
        self.stats.lp_solves.fetch_add(1, Relaxed);
        self.stats
            .separation_rounds
            .fetch_add(lp.separation_rounds, Relaxed);
        self.stats.simplex_pivots.fetch_add(lp.pivots, Relaxed);

        if call.level == self.sched.k() {
            return Ok(self.final_level(call, window, lp));
        }

        let narrow = narrow_cuts(&lp.x_star, call, self.n)?;
        if self.audit.is_exhaustive() && window.len() <= self.audit.cap() {
            audit::check_narrow_completeness(&lp.x_star, call, &narrow, self.n, &self.audit);
            // The restriction of x* to the window must satisfy the plain
            // relaxation; the busy rows only strengthen it.
            if let Some(detail) =
                audit::check_relaxation_feasibility(&lp.x_star, call, self.n, self.audit.cap())
            {
                self.audit
                    .record(audit::CheckId::LpFeasibility, format!("x*: {detail}"));
            }
        }
        let sides: Vec<CutSide> = narrow.iter().map(|c| c.side).collect();
        let (nodes, arcs) = build_aux_digraph(&sides, call, self.n);

        let mut subs: Vec<Arc<DpResult<T>>> = Vec::with_capacity(arcs.len());
        for arc in &arcs {
            subs.push(self.run_dp(&arc.sub_call)?);
        }
        let d: Vec<T> = arcs
            .iter()
            .zip(&subs)
            .map(|(arc, sub)| arc_cost(&nodes[arc.head], sub, &self.sched, call.level, &self.costs))
            .collect();
        let (path_nodes, path_arcs, path_cost) = shortest_path_dag(nodes.len(), &arcs, &d);

        let result = self.assemble(
            call,
            &lp,
            &narrow,
            &nodes,
            &arcs,
            &subs,
            &path_nodes,
            &path_arcs,
            &path_cost,
        );
        self.trace_call(call, &lp, &result, &nodes, &path_nodes);
        Ok(result)
    }

    fn final_level(&self, call: &DpCall, window: CutSide, lp: LpOutcome<T>) -> DpResult<T> {
        let tree = minimum_spanning_tree(window, &self.costs);
        let tree_cost = self.costs.edge_sum(&tree);
        let result = DpResult {
            tree,
            y: lp.x_star.clone(),
            chain: CutChain::default(),
            lp_value: lp.value.clone(),
            tree_cost,
            y_cost: lp.value.clone(),
            m: 0,
            arcs: 0,
        };
        if self.audit.enabled() {
            audit::check_node(
                call,
                &result,
                None,
                &self.sched,
                &self.costs,
                self.n,
                self.audit.cap(),
                &self.audit,
            );
        }
        self.trace_call(call, &lp, &result, &[], &[]);
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        call: &DpCall,
        lp: &LpOutcome<T>,
        narrow: &[NarrowCut<T>],
        nodes: &[AuxNode],
        arcs: &[AuxArc],
        subs: &[Arc<DpResult<T>>],
        path_nodes: &[usize],
        path_arcs: &[usize],
        path_cost: &T,
    ) -> DpResult<T> {
        let level = call.level;
        let lam = self.sched.lambda(level).clone();
        let lam_next = self.sched.lambda_next(level);

        let mut tree: Vec<(usize, usize)> = Vec::new();
        let mut y_prime = EdgeVec::new(self.n);
        let mut lonely_edges: Vec<(usize, usize)> = Vec::new();
        let mut chain_cuts: Vec<CutSide> = Vec::new();

        for &ai in path_arcs {
            let sub = &subs[ai];
            tree.extend_from_slice(&sub.tree);
            y_prime.add_scaled(&sub.y, &T::one());
            chain_cuts.extend(sub.chain.iter().copied());
        }
        for &ni in &path_nodes[1..path_nodes.len() - 1] {
            let node = &nodes[ni];
            let (v, w) = (node.v.unwrap(), node.w.unwrap());
            let e = (v.min(w), v.max(w));
            lonely_edges.push(e);
            tree.push(e);
            y_prime.add(e.0, e.1, T::one());
            chain_cuts.push(node.cut);
        }
        tree.sort_unstable();

        // y = ((λ_l - λ_{l+1})/λ_l) x* + (λ_{l+1}/λ_l) y'
        let mut y = EdgeVec::new(self.n);
        y.add_scaled(
            &lp.x_star,
            &((lam.clone() - lam_next.clone()) / lam.clone()),
        );
        y.add_scaled(&y_prime, &(lam_next.clone() / lam.clone()));

        let chain = CutChain::from_cuts(chain_cuts);
        let tree_cost = self.costs.edge_sum(&tree);
        let y_cost = y.cost(&self.costs);

        let result = DpResult {
            tree,
            y,
            chain,
            lp_value: lp.value.clone(),
            tree_cost,
            y_cost,
            m: narrow.len(),
            arcs: arcs.len(),
        };

        if self.audit.enabled() {
            let sub_chains: Vec<&CutChain> = path_arcs.iter().map(|&ai| &subs[ai].chain).collect();
            let v_j_cuts: Vec<CutSide> = path_nodes[1..path_nodes.len() - 1]
                .iter()
                .map(|&ni| nodes[ni].cut)
                .collect();
            audit::check_node(
                call,
                &result,
                Some(audit::AssembleView {
                    y_prime: &y_prime,
                    lonely_edges: &lonely_edges,
                    v_j_cuts: &v_j_cuts,
                    sub_chains: &sub_chains,
                    path_cost,
                }),
                &self.sched,
                &self.costs,
                self.n,
                self.audit.cap(),
                &self.audit,
            );
        }
        result
    }

    fn trace_call(
        &self,
        call: &DpCall,
        lp: &LpOutcome<T>,
        result: &DpResult<T>,
        nodes: &[AuxNode],
        path_nodes: &[usize],
    ) {
        let Some(sink) = &self.trace else { return };
        let record = TraceRecord {
            level: call.level,
            window: call.window(self.n).len(),
            lp_value: result.lp_value.to_f64(),
            m: result.m,
            path: path_nodes
                .iter()
                .map(|&ni| TraceNode {
                    cut: nodes[ni].cut.to_vec(),
                    v: nodes[ni].v,
                    w: nodes[ni].w,
                })
                .collect(),
            tree_cost: result.tree_cost.to_f64(),
            y_cost: result.y_cost.to_f64(),
            lp_rows: lp
                .rows
                .iter()
                .zip(&lp.duals)
                .map(|(row, dual): (&LpRow, &T)| TraceRow {
                    cut: row.side.to_vec(),
                    rhs: row.rhs,
                    dual: dual.to_f64(),
                })
                .collect(),
        };
        if let Ok(mut w) = sink.lock() {
            let _ = serde_json::to_writer(&mut *w, &record);
            let _ = writeln!(w);
        }
    }
}
