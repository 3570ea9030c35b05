//! Canonical cut representation, cut values, and narrow-cut chains.
//!
//! A cut `δ(U)` is represented by the member set `U` of its source side, kept
//! as a fixed-width bitset. Narrow cuts of a feasible LP solution (value below
//! two) form a chain ordered by inclusion; [`narrow_cuts`] extracts the chain
//! with one minimum-cut computation per ordered vertex pair of the window and
//! fails loudly if the result ever crosses, which can only happen through
//! numerical trouble in the LP.

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::lp::{DpCall, EdgeVec};
use crate::num::Weight;

/// Maximum vertex count supported by the bitset representation.
pub const MAX_VERTICES: usize = 128;

/// A vertex set `U` standing for the cut `δ(U)`, canonically the side that
/// contains the designated source.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CutSide(u128);

impl CutSide {
    pub const EMPTY: CutSide = CutSide(0);

    pub fn singleton(v: usize) -> Self {
        debug_assert!(v < MAX_VERTICES);
        CutSide(1u128 << v)
    }

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_VERTICES);
        if n == MAX_VERTICES {
            CutSide(u128::MAX)
        } else {
            CutSide((1u128 << n) - 1)
        }
    }

    pub fn from_verts<I: IntoIterator<Item = usize>>(verts: I) -> Self {
        let mut s = CutSide::EMPTY;
        for v in verts {
            s.insert(v);
        }
        s
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn insert(&mut self, v: usize) {
        debug_assert!(v < MAX_VERTICES);
        self.0 |= 1u128 << v;
    }

    pub fn remove(&mut self, v: usize) {
        self.0 &= !(1u128 << v);
    }

    pub fn contains(self, v: usize) -> bool {
        v < MAX_VERTICES && self.0 >> v & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: CutSide) -> CutSide {
        CutSide(self.0 | other.0)
    }

    pub fn intersect(self, other: CutSide) -> CutSide {
        CutSide(self.0 & other.0)
    }

    pub fn minus(self, other: CutSide) -> CutSide {
        CutSide(self.0 & !other.0)
    }

    pub fn complement(self, n: usize) -> CutSide {
        CutSide::full(n).minus(self)
    }

    pub fn is_subset(self, other: CutSide) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset(self, other: CutSide) -> bool {
        self.is_subset(other) && self.0 != other.0
    }

    /// True when the edge `{u, v}` has exactly one endpoint in the set.
    #[inline]
    pub fn crosses(self, u: usize, v: usize) -> bool {
        self.contains(u) != self.contains(v)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl std::fmt::Display for CutSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl std::fmt::Debug for CutSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

/// An inclusion-ordered family of cut sides.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CutChain {
    cuts: Vec<CutSide>,
}

impl CutChain {
    /// Builds a chain candidate: deduplicates and orders by `(|U|, bits)`.
    /// Nesting is *not* enforced here; see [`verify_chain`].
    pub fn from_cuts<I: IntoIterator<Item = CutSide>>(cuts: I) -> Self {
        let mut cuts: Vec<CutSide> = cuts.into_iter().collect();
        cuts.sort_by_key(|c| (c.len(), c.bits()));
        cuts.dedup();
        CutChain { cuts }
    }

    pub fn cuts(&self) -> &[CutSide] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn contains(&self, side: CutSide) -> bool {
        self.cuts
            .binary_search_by_key(&(side.len(), side.bits()), |c| (c.len(), c.bits()))
            .is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CutSide> {
        self.cuts.iter()
    }
}

/// True iff the chain is strictly nested.
pub fn verify_chain(chain: &CutChain) -> bool {
    chain.cuts().windows(2).all(|w| w[0].is_strict_subset(w[1]))
}

/// `x(δ(U))`: the total weight of entries with exactly one endpoint in `U`.
pub fn cut_value<T: Weight>(x: &EdgeVec<T>, side: CutSide) -> T {
    let mut acc = T::zero();
    for (&(u, v), val) in x.entries() {
        if side.crosses(u, v) {
            acc = acc + val.clone();
        }
    }
    acc
}

/// A narrow cut together with the LP value it was found at.
#[derive(Clone, Debug)]
pub struct NarrowCut<T> {
    pub side: CutSide,
    pub value: T,
}

/// Extracts every narrow cut of `x` for the given sub-instance: each cut side
/// `U` with `W_s ∪ {s'} ⊆ U ⊆ V \ (W_t ∪ {t'})` and `x(δ(U)) < 2 - tol`.
///
/// One minimum cut is computed per ordered vertex pair of the window; sides
/// are oriented so the source end `s'` lies inside, mapped back to full-space
/// sets by re-attaching `W_s`, deduplicated, and ordered by cardinality. A
/// crossing pair in the result contradicts the chain property of narrow cuts
/// and is reported as [`Error::ChainViolation`].
pub fn narrow_cuts<T: Weight>(
    x: &EdgeVec<T>,
    call: &DpCall,
    n: usize,
) -> Result<Vec<NarrowCut<T>>> {
    let window = call.window(n);
    let verts = window.to_vec();
    if verts.len() < 2 || call.s_prime == call.t_prime {
        // Narrow cuts must separate s' from t' inside the window.
        return Ok(Vec::new());
    }

    let local = |v: usize| verts.binary_search(&v).expect("window vertex");
    let mut net = FlowNetwork::<T>::new(verts.len());
    for (&(u, v), val) in x.entries() {
        if val > &T::zero() {
            net.add_undirected(local(u), local(v), val.clone());
        }
    }

    let threshold = T::from_int(2) - T::tol_narrow();
    let s_local = local(call.s_prime);
    let t_local = local(call.t_prime);

    let mut found: Vec<NarrowCut<T>> = Vec::new();
    let mut seen: Vec<CutSide> = Vec::new();
    for a in 0..verts.len() {
        for b in 0..verts.len() {
            if a == b {
                continue;
            }
            let (value, side_local) = net.min_cut(a, b);
            if value >= threshold {
                continue;
            }
            let oriented = if side_local.contains(s_local) && !side_local.contains(t_local) {
                Some(side_local)
            } else if side_local.contains(t_local) && !side_local.contains(s_local) {
                Some(side_local.complement(verts.len()))
            } else {
                // The LP forces value >= 2 on every cut that fails to separate
                // s' from t'; seeing one here means the solution is noisy.
                log::warn!(
                    "discarding non-separating cut of value {} found during narrow-cut extraction",
                    value.to_f64()
                );
                None
            };
            let Some(side_local) = oriented else { continue };
            let mut side = call.w_s;
            for lv in side_local.iter() {
                side.insert(verts[lv]);
            }
            if !seen.contains(&side) {
                seen.push(side);
                found.push(NarrowCut { side, value });
            }
        }
    }

    found.sort_by_key(|c| (c.side.len(), c.side.bits()));
    let chain = CutChain::from_cuts(found.iter().map(|c| c.side));
    if !verify_chain(&chain) {
        let (i, _) = chain
            .cuts()
            .windows(2)
            .enumerate()
            .find(|(_, w)| !w[0].is_strict_subset(w[1]))
            .expect("violation present");
        return Err(Error::ChainViolation(format!(
            "cuts {} and {} cross",
            chain.cuts()[i],
            chain.cuts()[i + 1]
        )));
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitset_basics() {
        let mut u = CutSide::from_verts([0, 2, 5]);
        assert!(u.contains(2) && !u.contains(1));
        assert_eq!(u.len(), 3);
        u.remove(2);
        assert_eq!(u.to_vec(), vec![0, 5]);
        assert!(CutSide::from_verts([0]).is_strict_subset(u.union(CutSide::singleton(0))));
        assert_eq!(CutSide::full(4).complement(4), CutSide::EMPTY);
        assert!(u.crosses(0, 1));
        assert!(!u.crosses(0, 5));
    }

    #[test]
    fn chain_verification() {
        let good = CutChain::from_cuts([CutSide::from_verts([0]), CutSide::from_verts([0, 1])]);
        assert!(verify_chain(&good));
        // {0,1} and {0,2} cross.
        let bad = CutChain::from_cuts([CutSide::from_verts([0, 1]), CutSide::from_verts([0, 2])]);
        assert!(!verify_chain(&bad));
        assert!(verify_chain(&CutChain::default()));
    }

    #[test]
    fn cut_value_incidence() {
        let mut x = EdgeVec::<f64>::new(2);
        x.add(0, 1, 1.0);
        assert_eq!(cut_value(&x, CutSide::singleton(0)), 1.0);
        assert_eq!(
            cut_value(&EdgeVec::<f64>::new(2), CutSide::singleton(0)),
            0.0
        );
    }

    #[test]
    fn narrow_cuts_on_tiny_lp_optima() {
        use crate::lp::solve_sub_lp;
        use crate::num::Costs;

        // n = 2: the optimum x_{st} = 1 has the single narrow cut {s}.
        let two = crate::instance::MetricInstance::new(vec![vec![0.0, 5.0], vec![5.0, 0.0]], 0, 1)
            .unwrap();
        let costs = Costs::<f64>::from_matrix(two.matrix());
        let call = DpCall::top(0, 1);
        let lp = solve_sub_lp(&call, &costs).unwrap();
        let narrow = narrow_cuts(&lp.x_star, &call, 2).unwrap();
        assert_eq!(narrow.len(), 1);
        assert_eq!(narrow[0].side, CutSide::singleton(0));
        assert!((narrow[0].value - 1.0).abs() < 1e-9);

        // n = 3 path metric: chain {s} then {s,a}, both of value 1.
        let path = crate::instance::MetricInstance::new(
            vec![
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 1.0, 0.0],
            ],
            0,
            2,
        )
        .unwrap();
        let costs = Costs::<f64>::from_matrix(path.matrix());
        let call = DpCall::top(0, 2);
        let lp = solve_sub_lp(&call, &costs).unwrap();
        let narrow = narrow_cuts(&lp.x_star, &call, 3).unwrap();
        assert_eq!(narrow.len(), 2);
        assert_eq!(narrow[0].side, CutSide::from_verts([0]));
        assert_eq!(narrow[1].side, CutSide::from_verts([0, 1]));
        assert!((narrow[0].value - 1.0).abs() < 1e-9);
        assert!((narrow[1].value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_narrow_cuts_when_all_values_reach_two() {
        // Doubled tour incidence: every s-t cut carries value >= 2.
        let mut x = EdgeVec::<f64>::new(3);
        x.add(0, 1, 2.0);
        x.add(1, 2, 2.0);
        let narrow = narrow_cuts(&x, &DpCall::top(0, 2), 3).unwrap();
        assert!(narrow.is_empty());
    }

    #[test]
    fn cut_value_matches_edge_scan() {
        // Random-ish sparse vector on n=6 against direct enumeration.
        let pairs = [
            (0, 1, 0.3),
            (1, 2, 1.1),
            (2, 5, 0.25),
            (0, 4, 2.0),
            (3, 4, 0.5),
        ];
        let mut x = EdgeVec::<f64>::new(6);
        for &(u, v, w) in &pairs {
            x.add(u, v, w);
        }
        let side = CutSide::from_verts([0, 2, 3]);
        let mut expect = 0.0;
        for &(u, v, w) in &pairs {
            if side.contains(u) != side.contains(v) {
                expect += w;
            }
        }
        assert!((cut_value(&x, side) - expect).abs() < 1e-12);
    }
}
