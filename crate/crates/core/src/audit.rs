//! Runtime invariant checks for the dynamic program.
//!
//! Every structural property the recursion promises is assertable on the
//! artifacts it returns; this module holds those checks. The cheap ones
//! (chain shape, tree shape, unit crossings, the path-cost identity) run at
//! every recursion node when auditing is on. The exhaustive ones enumerate
//! all cuts of a window and are gated on window size. Violations are
//! collected, not thrown, so a verify run can report all of them.

use crate::cuts::{cut_value, verify_chain, CutChain, CutSide, NarrowCut};
use crate::dp::{DpResult, LambdaSchedule};
use crate::lp::{separate, DpCall, EdgeVec};
use crate::num::Weight;
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditLevel {
    Off,
    /// Cheap per-node checks at every recursion node.
    Invariants,
    /// Adds exhaustive cut enumeration on windows up to the configured cap.
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    /// Lonely-cut chain shape and sandwiching.
    ChainShape,
    /// Lonely edges stay out of sub-chain cuts.
    FreshLonelyEdges,
    /// Tree spans the window and crosses each lonely cut once.
    TreeUnitCrossing,
    /// Path cost equals tree cost plus discounted vector cost.
    PathCostIdentity,
    /// Support containment and unit value on chosen narrow cuts.
    SupportUnit,
    /// Relaxation feasibility of the parity vectors.
    LpFeasibility,
    /// Busy cuts keep value at least three.
    BusyLowerBound,
    /// Every sufficiently light sandwich cut is a chosen lonely cut.
    LowCutsChosen,
    /// Narrow-cut extraction found every narrow cut.
    NarrowComplete,
    /// Scaled parity vector lies in the T-join polyhedron.
    TJoinMembership,
}

impl std::fmt::Display for CheckId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CheckId::ChainShape => "chain of lonely cuts",
            CheckId::FreshLonelyEdges => "lonely edges outside sub-chains",
            CheckId::TreeUnitCrossing => "spanning tree with unit crossings",
            CheckId::PathCostIdentity => "path cost identity",
            CheckId::SupportUnit => "support and unit narrow-cut values",
            CheckId::LpFeasibility => "relaxation feasibility of y",
            CheckId::BusyLowerBound => "busy-cut lower bound",
            CheckId::LowCutsChosen => "light cuts are chosen lonely cuts",
            CheckId::NarrowComplete => "narrow-cut completeness",
            CheckId::TJoinMembership => "T-join polyhedron membership",
        };
        write!(f, "{name}")
    }
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub check: CheckId,
    pub detail: String,
}

pub struct Audit {
    level: AuditLevel,
    cap: usize,
    violations: Mutex<Vec<Violation>>,
}

impl Audit {
    pub fn off() -> Self {
        Audit::new(AuditLevel::Off, 0)
    }

    pub fn invariants() -> Self {
        Audit::new(AuditLevel::Invariants, 0)
    }

    pub fn exhaustive(cap: usize) -> Self {
        Audit::new(AuditLevel::Exhaustive, cap)
    }

    pub fn new(level: AuditLevel, cap: usize) -> Self {
        Audit {
            level,
            cap,
            violations: Mutex::new(Vec::new()),
        }
    }

    pub fn enabled(&self) -> bool {
        self.level != AuditLevel::Off
    }

    pub fn is_exhaustive(&self) -> bool {
        self.level == AuditLevel::Exhaustive
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn record(&self, check: CheckId, detail: String) {
        self.violations
            .lock()
            .unwrap()
            .push(Violation { check, detail });
    }

    pub fn violations(&self) -> Vec<Violation> {
        self.violations.lock().unwrap().clone()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.lock().unwrap().is_empty()
    }
}

/// Loose tolerance for accumulated quantities; zero in exact mode.
fn tol_loose<T: Weight>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64(1e-7)
    }
}

/// Tight tolerance for identities that hold term by term; zero in exact mode.
fn tol_tight<T: Weight>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64(1e-9)
    }
}

/// Borrowed view of the assembly internals of one recursion node.
pub struct AssembleView<'a, T> {
    pub y_prime: &'a EdgeVec<T>,
    pub lonely_edges: &'a [(usize, usize)],
    pub v_j_cuts: &'a [CutSide],
    pub sub_chains: &'a [&'a CutChain],
    pub path_cost: &'a T,
}

/// All sandwich cut sides `W_s ∪ {s'} ⊆ U ⊆ V \ (W_t ∪ {t'})`.
/// Empty when `s' = t'`. Exponential in the window size; callers cap it.
pub fn sandwich_sides(call: &DpCall, n: usize) -> Vec<CutSide> {
    if call.s_prime == call.t_prime {
        return Vec::new();
    }
    let window = call.window(n);
    let free: Vec<usize> = window
        .iter()
        .filter(|&v| v != call.s_prime && v != call.t_prime)
        .collect();
    let base = call.w_s.union(CutSide::singleton(call.s_prime));
    let mut sides = Vec::with_capacity(1 << free.len());
    for mask in 0u64..(1u64 << free.len()) {
        let mut side = base;
        for (bit, &v) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                side.insert(v);
            }
        }
        sides.push(side);
    }
    sides
}

/// Checks that `chain` is strictly nested and every member is a sandwich cut.
pub fn check_chain_shape(chain: &CutChain, call: &DpCall, n: usize) -> Option<String> {
    if !verify_chain(chain) {
        return Some("chain is not strictly nested".into());
    }
    let lower = call.w_s.union(CutSide::singleton(call.s_prime));
    let upper = CutSide::full(n)
        .minus(call.w_t)
        .minus(CutSide::singleton(call.t_prime));
    for &c in chain.iter() {
        if !lower.is_subset(c) || !c.is_subset(upper) {
            return Some(format!("cut {c} is not a sandwich cut"));
        }
    }
    None
}

/// No guessed lonely edge may lie in a cut of any chosen sub-chain.
pub fn check_fresh_lonely_edges(
    lonely_edges: &[(usize, usize)],
    sub_chains: &[&CutChain],
) -> Option<String> {
    for &(u, v) in lonely_edges {
        for chain in sub_chains {
            for &c in chain.iter() {
                if c.crosses(u, v) {
                    return Some(format!("lonely edge ({u},{v}) lies in sub-chain cut {c}"));
                }
            }
        }
    }
    None
}

/// `(W, S)` must be a tree and cross every chain cut exactly once.
pub fn check_tree_unit_crossing(
    tree: &[(usize, usize)],
    window: CutSide,
    chain: &CutChain,
) -> Option<String> {
    let verts = window.to_vec();
    if tree.len() + 1 != verts.len() {
        return Some(format!(
            "tree has {} edges on a {}-vertex window",
            tree.len(),
            verts.len()
        ));
    }
    let index = |v: usize| verts.binary_search(&v).ok();
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for &(u, v) in tree {
        let (Some(lu), Some(lv)) = (index(u), index(v)) else {
            return Some(format!("tree edge ({u},{v}) leaves the window"));
        };
        let (ru, rv) = (find(&mut parent, lu), find(&mut parent, lv));
        if ru == rv {
            return Some(format!("tree edge ({u},{v}) closes a cycle"));
        }
        parent[ru] = rv;
    }
    for &c in chain.iter() {
        let crossings = tree.iter().filter(|&&(u, v)| c.crosses(u, v)).count();
        if crossings != 1 {
            return Some(format!("cut {c} crossed {crossings} times by the tree"));
        }
    }
    None
}

/// `d(P) = c(S) + λ_{l+1} · c(y')` within the tight tolerance.
pub fn check_path_cost_identity<T: Weight>(
    path_cost: &T,
    tree_cost: &T,
    lambda_next: &T,
    y_prime_cost: &T,
) -> Option<String> {
    let rhs = tree_cost.clone() + lambda_next.clone() * y_prime_cost.clone();
    let diff = (path_cost.clone() - rhs.clone()).abs();
    let scale = T::one() + path_cost.abs() + rhs.abs();
    if diff > tol_tight::<T>() * scale {
        return Some(format!(
            "d(P) = {} but c(S) + lambda*c(y') = {}",
            path_cost.to_f64(),
            rhs.to_f64()
        ));
    }
    None
}

/// Support of `y'` inside the window, and `y'(δ(V_j)) = 1` per chosen cut.
pub fn check_support_unit<T: Weight>(
    y_prime: &EdgeVec<T>,
    window: CutSide,
    v_j_cuts: &[CutSide],
) -> Option<String> {
    if !y_prime.supported_in(window) {
        return Some("support of y' leaves the window".into());
    }
    for &c in v_j_cuts {
        let value = cut_value(y_prime, c);
        if (value.clone() - T::one()).abs() > tol_tight::<T>() {
            return Some(format!("y'({c}) = {} instead of 1", value.to_f64()));
        }
    }
    None
}

/// Feasibility of a parity vector for the busy-free window relaxation:
/// exhaustive cut enumeration for windows up to `cap`, separation above.
pub fn check_relaxation_feasibility<T: Weight>(
    y: &EdgeVec<T>,
    call: &DpCall,
    n: usize,
    cap: usize,
) -> Option<String> {
    let window = call.window(n);
    let verts = window.to_vec();
    if verts.len() <= cap {
        for mask in 1u64..(1u64 << verts.len()) - 1 {
            let side = CutSide::from_verts(
                verts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &v)| v),
            );
            let rhs = if side.contains(call.s_prime) != side.contains(call.t_prime) {
                T::one()
            } else {
                T::from_int(2)
            };
            let value = cut_value(y, side);
            if value.clone() < rhs.clone() - tol_loose::<T>() {
                return Some(format!(
                    "y({side}) = {} below {}",
                    value.to_f64(),
                    rhs.to_f64()
                ));
            }
        }
        None
    } else {
        let relaxed = DpCall::new(
            call.w_s,
            call.w_t,
            call.s_prime,
            call.t_prime,
            Vec::new(),
            call.level,
        );
        match separate(y, &relaxed, n) {
            Some(vc) if vc.violation > tol_loose::<T>() => Some(format!(
                "separation found y({}) short of {} by {}",
                vc.side,
                vc.rhs,
                vc.violation.to_f64()
            )),
            _ => None,
        }
    }
}

/// `y(C) >= 3` on every busy cut passed into the call.
pub fn check_busy_lower_bound<T: Weight>(y: &EdgeVec<T>, busy: &[CutSide]) -> Option<String> {
    let bound = T::from_int(3) - tol_loose::<T>();
    for &c in busy {
        let value = cut_value(y, c);
        if value < bound {
            return Some(format!("y({c}) = {} below 3", value.to_f64()));
        }
    }
    None
}

/// Every sandwich cut with `y` value below `2 - 1/(Λ·λ_l)` must be in the
/// chain. Exhaustive; callers gate on window size.
pub fn check_low_cuts_chosen<T: Weight>(
    y: &EdgeVec<T>,
    call: &DpCall,
    chain: &CutChain,
    sched: &LambdaSchedule<T>,
    n: usize,
) -> Option<String> {
    let threshold = T::from_int(2)
        - T::one() / T::from_int(sched.lambda_scaled_int(call.level))
        - tol_loose::<T>();
    for side in sandwich_sides(call, n) {
        let value = cut_value(y, side);
        if value < threshold && !chain.contains(side) {
            return Some(format!(
                "y({side}) = {} below threshold but not a chosen lonely cut",
                value.to_f64()
            ));
        }
    }
    None
}

/// Every sandwich cut with `x*` value clearly below two must appear among the
/// extracted narrow cuts.
pub fn check_narrow_completeness<T: Weight>(
    x_star: &EdgeVec<T>,
    call: &DpCall,
    narrow: &[NarrowCut<T>],
    n: usize,
    audit: &Audit,
) {
    let threshold = T::from_int(2) - T::tol_narrow() - tol_loose::<T>();
    for side in sandwich_sides(call, n) {
        let value = cut_value(x_star, side);
        if value < threshold && !narrow.iter().any(|c| c.side == side) {
            audit.record(
                CheckId::NarrowComplete,
                format!("narrow cut {side} with value {} was missed", value.to_f64()),
            );
        }
    }
}

/// Runs the per-node checks for one recursion node. `view` carries the
/// assembly internals and is absent at the final level.
#[allow(clippy::too_many_arguments)]
pub fn check_node<T: Weight>(
    call: &DpCall,
    result: &DpResult<T>,
    view: Option<AssembleView<'_, T>>,
    sched: &LambdaSchedule<T>,
    costs: &crate::num::Costs<T>,
    n: usize,
    cap: usize,
    audit: &Audit,
) {
    let window = call.window(n);
    let at = |detail: String| format!("level {} window {}: {detail}", call.level, window);

    if let Some(detail) = check_chain_shape(&result.chain, call, n) {
        audit.record(CheckId::ChainShape, at(detail));
    }
    if let Some(detail) = check_tree_unit_crossing(&result.tree, window, &result.chain) {
        audit.record(CheckId::TreeUnitCrossing, at(detail));
    }
    if let Some(detail) = check_busy_lower_bound(&result.y, &call.busy) {
        audit.record(CheckId::BusyLowerBound, at(detail));
    }

    if let Some(view) = &view {
        if let Some(detail) = check_fresh_lonely_edges(view.lonely_edges, view.sub_chains) {
            audit.record(CheckId::FreshLonelyEdges, at(detail));
        }
        if let Some(detail) = check_path_cost_identity(
            view.path_cost,
            &result.tree_cost,
            &sched.lambda_next(call.level),
            &view.y_prime.cost(costs),
        ) {
            audit.record(CheckId::PathCostIdentity, at(detail));
        }
        if let Some(detail) = check_support_unit(view.y_prime, window, view.v_j_cuts) {
            audit.record(CheckId::SupportUnit, at(detail));
        }
    }

    if audit.is_exhaustive() {
        if let Some(detail) = check_relaxation_feasibility(&result.y, call, n, cap) {
            audit.record(CheckId::LpFeasibility, at(detail));
        }
        if let Some(view) = &view {
            if let Some(detail) = check_relaxation_feasibility(view.y_prime, call, n, cap) {
                audit.record(CheckId::LpFeasibility, at(format!("y': {detail}")));
            }
        }
        if window.len() <= cap {
            if let Some(detail) = check_low_cuts_chosen(&result.y, call, &result.chain, sched, n) {
                audit.record(CheckId::LowCutsChosen, at(detail));
            }
        }
    }
}
