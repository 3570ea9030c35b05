//! Dinic maximum flow with minimum-cut certificates, generic over the solver
//! scalar. Capacities come from fractional LP solutions; undirected edges are
//! modelled as an arc pair where each arc is the other's reverse. The network
//! can be reset and reused for the many cut queries a separation round makes.

use crate::cuts::CutSide;
use crate::num::Weight;

struct Arc<T> {
    to: usize,
    cap: T,
}

pub struct FlowNetwork<T> {
    n: usize,
    arcs: Vec<Arc<T>>,
    initial_caps: Vec<T>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl<T: Weight> FlowNetwork<T> {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            n,
            arcs: Vec::new(),
            initial_caps: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![0; n],
            next: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds a directed arc `u -> v` of the given capacity (reverse capacity 0).
    pub fn add_directed(&mut self, u: usize, v: usize, cap: T) {
        self.push_pair(u, v, cap, T::zero());
    }

    /// Adds an undirected edge: capacity `cap` in both directions.
    pub fn add_undirected(&mut self, u: usize, v: usize, cap: T) {
        self.push_pair(u, v, cap.clone(), cap);
    }

    fn push_pair(&mut self, u: usize, v: usize, cap_uv: T, cap_vu: T) {
        debug_assert!(u != v && u < self.n && v < self.n);
        self.adj[u].push(self.arcs.len());
        self.arcs.push(Arc {
            to: v,
            cap: cap_uv.clone(),
        });
        self.adj[v].push(self.arcs.len());
        self.arcs.push(Arc {
            to: u,
            cap: cap_vu.clone(),
        });
        self.initial_caps.push(cap_uv);
        self.initial_caps.push(cap_vu);
    }

    /// Restores all residual capacities to their construction values.
    pub fn reset(&mut self) {
        for (arc, cap) in self.arcs.iter_mut().zip(&self.initial_caps) {
            arc.cap = cap.clone();
        }
    }

    fn usable(cap: &T) -> bool {
        cap > &T::tol_pivot()
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[source] = 0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &id in &self.adj[u] {
                let arc = &self.arcs[id];
                if self.level[arc.to] < 0 && Self::usable(&arc.cap) {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, u: usize, sink: usize, pushed: Option<T>) -> Option<T> {
        if u == sink {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let id = self.adj[u][self.next[u]];
            let to = self.arcs[id].to;
            if self.level[to] == self.level[u] + 1 && Self::usable(&self.arcs[id].cap) {
                // Bottleneck so far: min of pushed and this arc's residual.
                let avail = match &pushed {
                    Some(p) if *p < self.arcs[id].cap => p.clone(),
                    _ => self.arcs[id].cap.clone(),
                };
                if let Some(got) = self.dfs(to, sink, Some(avail)) {
                    self.arcs[id].cap = self.arcs[id].cap.clone() - got.clone();
                    self.arcs[id ^ 1].cap = self.arcs[id ^ 1].cap.clone() + got.clone();
                    return Some(got);
                }
            }
            self.next[u] += 1;
        }
        None
    }

    /// Maximum flow from `source` to `sink` on the current residual network.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> T {
        debug_assert!(source != sink);
        let mut total = T::zero();
        while self.bfs(source, sink) {
            self.next.iter_mut().for_each(|x| *x = 0);
            while let Some(got) = self.dfs(source, sink, None) {
                total = total + got;
            }
        }
        total
    }

    /// Vertices reachable from `source` in the residual network. After
    /// `max_flow` this is the canonical (minimal) source side of a minimum cut.
    pub fn residual_reachable(&self, source: usize) -> CutSide {
        let mut side = CutSide::singleton(source);
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &id in &self.adj[u] {
                let arc = &self.arcs[id];
                if Self::usable(&arc.cap) && !side.contains(arc.to) {
                    side.insert(arc.to);
                    stack.push(arc.to);
                }
            }
        }
        side
    }

    /// Resets, runs max-flow, and returns `(value, source side)` where the
    /// source side is the residual-reachable set. The max-flow = min-cut
    /// certificate is checked in debug builds.
    pub fn min_cut(&mut self, source: usize, sink: usize) -> (T, CutSide) {
        self.reset();
        let value = self.max_flow(source, sink);
        let side = self.residual_reachable(source);
        debug_assert!(!side.contains(sink));
        #[cfg(debug_assertions)]
        {
            let cap = self.cut_capacity(side);
            let diff = (value.clone() - cap).abs();
            let scale = T::one() + value.clone().abs();
            debug_assert!(
                diff <= T::tol_feas() * scale,
                "max-flow/min-cut certificate mismatch"
            );
        }
        (value, side)
    }

    #[cfg(debug_assertions)]
    fn cut_capacity(&self, side: CutSide) -> T {
        // Sum of construction capacities on arcs leaving the side.
        let mut total = T::zero();
        for u in side.iter() {
            for &id in &self.adj[u] {
                if !side.contains(self.arcs[id].to) {
                    total = total + self.initial_caps[id].clone();
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertices_unit_edge() {
        let mut net = FlowNetwork::<f64>::new(2);
        net.add_undirected(0, 1, 1.0);
        let (value, side) = net.min_cut(0, 1);
        assert_eq!(value, 1.0);
        assert_eq!(side, CutSide::singleton(0));
    }

    #[test]
    fn disconnected_gives_component() {
        let mut net = FlowNetwork::<f64>::new(4);
        net.add_undirected(0, 1, 2.0);
        net.add_undirected(2, 3, 2.0);
        let (value, side) = net.min_cut(0, 3);
        assert_eq!(value, 0.0);
        assert_eq!(side, CutSide::from_verts([0, 1]));
    }

    #[test]
    fn matches_exhaustive_cut_enumeration() {
        // Random 8-vertex capacities vs brute force over all source sides.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let mut caps = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.6 {
                    let c = rng.gen::<f64>() * 3.0;
                    caps[i][j] = c;
                    caps[j][i] = c;
                }
            }
        }
        let mut net = FlowNetwork::<f64>::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if caps[i][j] > 0.0 {
                    net.add_undirected(i, j, caps[i][j]);
                }
            }
        }
        for (s, t) in [(0usize, 7usize), (3, 5), (6, 1)] {
            let (value, side) = net.min_cut(s, t);
            assert!(side.contains(s) && !side.contains(t));
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                if mask >> s & 1 == 0 || mask >> t & 1 == 1 {
                    continue;
                }
                let mut cut = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (mask >> i & 1) != (mask >> j & 1) {
                            cut += caps[i][j];
                        }
                    }
                }
                best = best.min(cut);
            }
            assert!((value - best).abs() < 1e-9, "({s},{t}): {value} vs {best}");
        }
    }

    #[test]
    fn rational_flow_is_exact() {
        use num_rational::BigRational;
        let mut net = FlowNetwork::<BigRational>::new(3);
        net.add_undirected(0, 1, BigRational::ratio(1, 3));
        net.add_undirected(1, 2, BigRational::ratio(1, 2));
        net.add_undirected(0, 2, BigRational::ratio(1, 7));
        let (value, _) = net.min_cut(0, 2);
        assert_eq!(value, BigRational::ratio(1, 3) + BigRational::ratio(1, 7));
    }
}
