//! The sub-instance cut LP, solved by row generation.
//!
//! Variables live on the window's edges only. The row families are
//!   (a) `x(δ(U)) >= 1` for cuts separating s' from t' inside the window,
//!   (b) `x(δ(U)) >= 2` for cuts avoiding both endpoints, and
//!   (c) `x(C) >= 3` for each explicit busy cut.
//! Busy rows are installed eagerly (there are at most k·n of them); the two
//! exponential families are separated lazily with minimum-cut computations on
//! the support graph. A solve returns only after a full separation sweep
//! certifies feasibility of every constraint, generated or not.

use crate::cuts::CutSide;
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::num::{Costs, Weight};
use crate::simplex::solve_cover_lp;
use std::collections::BTreeMap;

/// Sparse nonnegative vector over unordered vertex pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeVec<T> {
    n: usize,
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Weight> EdgeVec<T> {
    pub fn new(n: usize) -> Self {
        EdgeVec {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), T> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, u: usize, v: usize) -> T {
        let key = (u.min(v), u.max(v));
        self.entries.get(&key).cloned().unwrap_or_else(T::zero)
    }

    /// Accumulates `val` onto the edge `{u, v}`, dropping entries that cancel.
    pub fn add(&mut self, u: usize, v: usize, val: T) {
        debug_assert!(u != v && u < self.n && v < self.n);
        if val.is_zero() {
            return;
        }
        let key = (u.min(v), u.max(v));
        let entry = self.entries.entry(key).or_insert_with(T::zero);
        *entry = entry.clone() + val;
        if entry.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn zero_out(&mut self, u: usize, v: usize) {
        self.entries.remove(&(u.min(v), u.max(v)));
    }

    /// `self + coeff * other`.
    pub fn add_scaled(&mut self, other: &EdgeVec<T>, coeff: &T) {
        for (&(u, v), val) in &other.entries {
            self.add(u, v, coeff.clone() * val.clone());
        }
    }

    /// Total cost `sum_e c(e) x_e`.
    pub fn cost(&self, costs: &Costs<T>) -> T {
        self.entries.iter().fold(T::zero(), |acc, (&(u, v), val)| {
            acc + costs.get(u, v).clone() * val.clone()
        })
    }

    /// True when every entry has both endpoints inside `window`.
    pub fn supported_in(&self, window: CutSide) -> bool {
        self.entries
            .keys()
            .all(|&(u, v)| window.contains(u) && window.contains(v))
    }

    pub fn map_to_f64(&self) -> EdgeVec<f64> {
        let mut out = EdgeVec::new(self.n);
        for (&(u, v), val) in &self.entries {
            out.add(u, v, val.to_f64());
        }
        out
    }
}

/// Input tuple of the dynamic program: a window between two guessed lonely
/// cuts, its endpoints, the busy cuts passed down, and the recursion level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DpCall {
    pub w_s: CutSide,
    pub w_t: CutSide,
    pub s_prime: usize,
    pub t_prime: usize,
    /// Busy cut sides, canonically sorted by `(|U|, bits)` and deduplicated.
    pub busy: Vec<CutSide>,
    pub level: u32,
}

impl DpCall {
    pub fn new(
        w_s: CutSide,
        w_t: CutSide,
        s_prime: usize,
        t_prime: usize,
        mut busy: Vec<CutSide>,
        level: u32,
    ) -> Self {
        busy.sort_by_key(|c| (c.len(), c.bits()));
        busy.dedup();
        DpCall {
            w_s,
            w_t,
            s_prime,
            t_prime,
            busy,
            level,
        }
    }

    /// The top-level call: empty shores, endpoints s and t, no busy cuts.
    pub fn top(s: usize, t: usize) -> Self {
        DpCall::new(CutSide::EMPTY, CutSide::EMPTY, s, t, Vec::new(), 1)
    }

    /// `W = V \ (W_s ∪ W_t)`.
    pub fn window(&self, n: usize) -> CutSide {
        CutSide::full(n).minus(self.w_s.union(self.w_t))
    }

    /// Checks the structural invariants; `k` bounds `|busy| <= k*n`.
    pub fn validate(&self, n: usize, k: u32) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInstance(msg));
        if !self.w_s.intersect(self.w_t).is_empty() {
            return fail("W_s and W_t intersect".into());
        }
        let window = self.window(n);
        if !window.contains(self.s_prime) || !window.contains(self.t_prime) {
            return fail("endpoints must lie in the window".into());
        }
        if self.level < 1 || self.level > k {
            return fail(format!("level {} outside 1..={k}", self.level));
        }
        if self.busy.len() > k as usize * n {
            return fail(format!("{} busy cuts exceed k*n", self.busy.len()));
        }
        let lower = self.w_s.union(CutSide::singleton(self.s_prime));
        let upper = CutSide::full(n)
            .minus(self.w_t)
            .minus(CutSide::singleton(self.t_prime));
        for c in &self.busy {
            if !lower.is_subset(*c) || !c.is_subset(upper) {
                return fail(format!("busy cut {c} is not sandwiched by the window"));
            }
        }
        Ok(())
    }
}

/// One generated row `x(δ(side)) >= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LpRow {
    pub side: CutSide,
    pub rhs: u8,
}

/// Result of a certified sub-LP solve.
#[derive(Clone, Debug)]
pub struct LpOutcome<T> {
    pub x_star: EdgeVec<T>,
    pub value: T,
    pub rows: Vec<LpRow>,
    pub duals: Vec<T>,
    pub separation_rounds: u64,
    pub pivots: u64,
}

impl<T: Weight> LpOutcome<T> {
    fn zero(n: usize) -> Self {
        LpOutcome {
            x_star: EdgeVec::new(n),
            value: T::zero(),
            rows: Vec::new(),
            duals: Vec::new(),
            separation_rounds: 0,
            pivots: 0,
        }
    }
}

/// A violated constraint discovered by [`separate`].
#[derive(Clone, Debug)]
pub struct ViolatedCut<T> {
    pub side: CutSide,
    pub rhs: u8,
    pub violation: T,
}

/// Standard max-flow/min-cut subroutine over sparse symmetric capacities.
/// Returns the flow value and the residual-reachable source side.
pub fn max_flow_min_cut<T: Weight>(
    n: usize,
    capacities: &[(usize, usize, T)],
    source: usize,
    sink: usize,
) -> (T, CutSide) {
    let mut net = FlowNetwork::new(n);
    for (u, v, cap) in capacities {
        net.add_undirected(*u, *v, cap.clone());
    }
    net.min_cut(source, sink)
}

/// All edges of the complete graph on the window, ordered lexicographically.
pub fn window_edges(window: CutSide) -> Vec<(usize, usize)> {
    let verts = window.to_vec();
    let mut edges = Vec::with_capacity(verts.len() * (verts.len().saturating_sub(1)) / 2);
    for (i, &u) in verts.iter().enumerate() {
        for &v in &verts[i + 1..] {
            edges.push((u, v));
        }
    }
    edges
}

/// Finds a most-violated constraint of the sub-LP at `x`, or `None` when all
/// constraints hold within the feasibility slack. Family (a) takes one
/// minimum s'-t' cut, family (b) one minimum cut per interior vertex against
/// the merged endpoint super-node, family (c) a direct evaluation per busy cut.
pub fn separate<T: Weight>(x: &EdgeVec<T>, call: &DpCall, n: usize) -> Option<ViolatedCut<T>> {
    let window = call.window(n);
    let verts = window.to_vec();
    debug_assert!(x.supported_in(window));

    let mut best: Option<ViolatedCut<T>> = None;
    let mut consider = |side: CutSide, rhs: u8, value: T| {
        let violation = T::from_int(rhs as i64) - value;
        if violation <= T::tol_feas() {
            return;
        }
        let better = match &best {
            None => true,
            Some(cur) => {
                violation > cur.violation
                    || (violation == cur.violation
                        && (side.len(), side.bits()) < (cur.side.len(), cur.side.bits()))
            }
        };
        if better {
            best = Some(ViolatedCut {
                side,
                rhs,
                violation,
            });
        }
    };

    // (c) busy cuts, checked explicitly.
    for &c in &call.busy {
        let value = crate::cuts::cut_value(x, c);
        consider(c, 3, value);
    }

    let local = |v: usize| verts.binary_search(&v).expect("window vertex");

    // (a) one minimum s'-t' cut on the support graph.
    if call.s_prime != call.t_prime && verts.len() >= 2 {
        let mut net = FlowNetwork::<T>::new(verts.len());
        for (&(u, v), val) in x.entries() {
            if val > &T::zero() {
                net.add_undirected(local(u), local(v), val.clone());
            }
        }
        let (value, side_local) = net.min_cut(local(call.s_prime), local(call.t_prime));
        let side = CutSide::from_verts(side_local.iter().map(|lv| verts[lv]));
        consider(side, 1, value);
    }

    // (b) per interior vertex, a minimum cut against {s', t'} merged.
    if verts.len() >= 2 {
        let merged = local(call.s_prime);
        let redirect = |v: usize| {
            let lv = local(v);
            if v == call.t_prime {
                merged
            } else {
                lv
            }
        };
        let mut net = FlowNetwork::<T>::new(verts.len());
        for (&(u, v), val) in x.entries() {
            let (lu, lv) = (redirect(u), redirect(v));
            if lu != lv && val > &T::zero() {
                net.add_undirected(lu, lv, val.clone());
            }
        }
        for &v in &verts {
            if v == call.s_prime || v == call.t_prime {
                continue;
            }
            let (value, side_local) = net.min_cut(local(v), merged);
            let side = CutSide::from_verts(
                side_local
                    .iter()
                    .filter(|&lv| lv != merged)
                    .map(|lv| verts[lv]),
            );
            consider(side, 2, value);
        }
    }

    best
}

/// Optimal solution of the restricted LP over the given rows.
pub fn lp_optimize<T: Weight>(
    columns: &[(usize, usize)],
    rows: &[LpRow],
    costs: &Costs<T>,
) -> Result<LpOutcome<T>> {
    let n = costs.n();
    let a: Vec<Vec<bool>> = rows
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|&(u, v)| row.side.crosses(u, v))
                .collect()
        })
        .collect();
    let b: Vec<T> = rows.iter().map(|row| T::from_int(row.rhs as i64)).collect();
    let c: Vec<T> = columns
        .iter()
        .map(|&(u, v)| costs.get(u, v).clone())
        .collect();
    let sol = solve_cover_lp(&a, &b, &c)?;

    let mut x = EdgeVec::new(n);
    for (&(u, v), val) in columns.iter().zip(&sol.x) {
        if !val.is_zero() {
            x.add(u, v, val.clone());
        }
    }
    Ok(LpOutcome {
        x_star: x,
        value: sol.value,
        rows: rows.to_vec(),
        duals: sol.duals,
        separation_rounds: 0,
        pivots: sol.pivots,
    })
}

/// Two rows are the same constraint when they cross the same window edges
/// with the same right-hand side.
fn canonical_row(side: CutSide, window: CutSide) -> CutSide {
    let inside = side.intersect(window);
    let flipped = window.minus(inside);
    if (inside.len(), inside.bits()) <= (flipped.len(), flipped.bits()) {
        inside
    } else {
        flipped
    }
}

/// Solves the sub-instance LP by row generation and certifies the result
/// with a final full separation sweep. Degenerate single-vertex windows
/// return the zero vector without invoking the solver.
pub fn solve_sub_lp<T: Weight>(call: &DpCall, costs: &Costs<T>) -> Result<LpOutcome<T>> {
    let n = costs.n();
    let window = call.window(n);
    let verts = window.to_vec();
    if verts.len() <= 1 {
        return Ok(LpOutcome::zero(n));
    }

    let columns = window_edges(window);
    let mut rows: Vec<LpRow> = call
        .busy
        .iter()
        .map(|&side| LpRow { side, rhs: 3 })
        .collect();
    // Seed with the singleton cuts; they are valid members of the two
    // families and save the first few separation rounds.
    for &v in &verts {
        let rhs = if v == call.s_prime || v == call.t_prime {
            if call.s_prime == call.t_prime {
                continue;
            }
            1
        } else {
            2
        };
        rows.push(LpRow {
            side: CutSide::singleton(v),
            rhs,
        });
    }

    let round_cap = 40 * n * n + 200;
    let mut separation_rounds = 0u64;
    let mut pivots = 0u64;
    loop {
        let mut outcome = lp_optimize(&columns, &rows, costs)?;
        pivots += outcome.pivots;
        match separate(&outcome.x_star, call, n) {
            None => {
                outcome.separation_rounds = separation_rounds;
                outcome.pivots = pivots;
                debug_assert!({
                    let recomputed = outcome.x_star.cost(costs);
                    (recomputed.clone() - outcome.value.clone()).abs()
                        <= T::tol_feas() * (T::one() + recomputed.abs())
                });
                return Ok(outcome);
            }
            Some(vc) => {
                separation_rounds += 1;
                if separation_rounds as usize > round_cap {
                    return Err(Error::IterationLimit(round_cap));
                }
                let canon = canonical_row(vc.side, window);
                if rows
                    .iter()
                    .any(|r| r.rhs == vc.rhs && canonical_row(r.side, window) == canon)
                {
                    // An installed row came back violated: the basic solution
                    // drifted beyond the feasibility slack.
                    return Err(Error::Numerical(format!(
                        "separation returned installed row {} (rhs {})",
                        vc.side, vc.rhs
                    )));
                }
                rows.push(LpRow {
                    side: vc.side,
                    rhs: vc.rhs,
                });
            }
        }
    }
}
