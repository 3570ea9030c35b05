//! Maximum-weight matching in general graphs, for real edge weights.
//!
//! This is a Rust adaptation of Joris van Rantwijk's blossom implementation
//! (Edmonds' blossom method combined with the primal-dual update from Galil's
//! survey), reworked for `f64` weights. Most structural comments follow the
//! original. With `max_cardinality` set, only maximum-cardinality matchings
//! are considered, which on a complete even graph forces a perfect matching;
//! minimum-cost perfect matching is obtained by negating the costs.
//!
//! Vertices are `0..n`; non-trivial blossoms are numbered `n..2n`. Edge
//! endpoints are numbered `2k` and `2k+1` for edge `k`.

const SENTINEL: usize = usize::MAX;

type Weight = f64;

struct Blossom {
    nvertex: usize,
    nedge: usize,
    edges: Vec<(usize, usize, Weight)>,
    max_cardinality: bool,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<usize>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Vec<usize>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<Weight>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

/// Computes a maximum-weight matching of `edges` over vertices `0..n`.
/// Returns `mate`, where `mate[v]` is `v`'s partner or `None`.
pub fn max_weight_matching(
    n: usize,
    edges: &[(usize, usize, f64)],
    max_cardinality: bool,
) -> Vec<Option<usize>> {
    if edges.is_empty() {
        return vec![None; n];
    }
    let mut state = Blossom::new(n, edges.to_vec(), max_cardinality);
    let mate = state.solve();
    debug_assert!(
        state.verify_optimum().is_none(),
        "{:?}",
        state.verify_optimum()
    );
    let mut out = vec![None; n];
    for (v, &m) in mate.iter().enumerate() {
        if m != SENTINEL {
            out[v] = Some(m);
        }
    }
    out
}

impl Blossom {
    fn new(n: usize, edges: Vec<(usize, usize, Weight)>, max_cardinality: bool) -> Self {
        let nedge = edges.len();
        let mut nvertex = n;
        for &(i, j, _) in &edges {
            assert!(i != j);
            nvertex = nvertex.max(i + 1).max(j + 1);
        }
        let maxweight = edges.iter().map(|e| e.2).fold(0.0_f64, f64::max);

        let endpoint: Vec<usize> = (0..2 * nedge)
            .map(|p| {
                if p % 2 == 0 {
                    edges[p / 2].0
                } else {
                    edges[p / 2].1
                }
            })
            .collect();
        let mut neighbend = vec![vec![]; nvertex];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }

        let mut dualvar = vec![maxweight; nvertex];
        dualvar.extend(vec![0.0; nvertex]);

        let mut blossombase: Vec<usize> = (0..nvertex).collect();
        blossombase.extend(vec![SENTINEL; nvertex]);

        Blossom {
            nvertex,
            nedge,
            edges,
            max_cardinality,
            endpoint,
            neighbend,
            mate: vec![SENTINEL; nvertex],
            label: vec![0; 2 * nvertex],
            labelend: vec![SENTINEL; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![SENTINEL; 2 * nvertex],
            blossomchilds: vec![vec![]; 2 * nvertex],
            blossombase,
            blossomendps: vec![vec![]; 2 * nvertex],
            bestedge: vec![SENTINEL; 2 * nvertex],
            blossombestedges: vec![vec![]; 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).collect(),
            dualvar,
            allowedge: vec![false; nedge],
            queue: vec![],
        }
    }

    // 2 * slack of edge k (not valid inside blossoms).
    fn slack(&self, k: usize) -> Weight {
        let (i, j, wt) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2.0 * wt
    }

    fn blossom_leaves(&self, b: usize) -> Vec<usize> {
        let mut leaves = vec![];
        if b < self.nvertex {
            leaves.push(b);
        } else {
            for &t in &self.blossomchilds[b] {
                if t < self.nvertex {
                    leaves.push(t);
                } else {
                    leaves.extend(self.blossom_leaves(t));
                }
            }
        }
        leaves
    }

    /// Assign label `t` to the top-level blossom containing vertex `w`,
    /// reached through remote endpoint `p`.
    fn assign_label(&mut self, w: usize, t: usize, p: usize) {
        let b = self.inblossom[w];
        assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = SENTINEL;
        self.bestedge[b] = SENTINEL;
        if t == 1 {
            // S-blossom: scan its vertices.
            let leaves = self.blossom_leaves(b);
            self.queue.extend(leaves);
        } else if t == 2 {
            // T-blossom: its base's mate becomes an S-vertex.
            let base = self.blossombase[b];
            assert!(self.mate[base] != SENTINEL);
            let mbase = self.mate[base];
            let ep = self.endpoint[mbase];
            self.assign_label(ep, 1, mbase ^ 1);
        }
    }

    /// Trace back from v and w to find either a new blossom's base or an
    /// augmenting path (SENTINEL).
    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path = vec![];
        let mut base = SENTINEL;
        let mut v = v;
        let mut w = w;
        while v != SENTINEL || w != SENTINEL {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            assert!(self.label[b] == 1);
            path.push(b);
            self.label[b] = 5;
            assert!(self.labelend[b] == self.mate[self.blossombase[b]]);
            if self.labelend[b] == SENTINEL {
                v = SENTINEL;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                assert!(self.label[b] == 2);
                assert!(self.labelend[b] != SENTINEL);
                v = self.endpoint[self.labelend[b]];
            }
            if w != SENTINEL {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    /// Construct a new blossom with the given base, containing edge k that
    /// joins two S-blossoms.
    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];

        let b = self.unusedblossoms.pop().unwrap();
        self.blossombase[b] = base;
        self.blossomparent[b] = SENTINEL;
        self.blossomparent[bb] = b;

        self.blossomchilds[b] = vec![];
        self.blossomendps[b] = vec![];

        while bv != bb {
            self.blossomparent[bv] = b;
            self.blossomchilds[b].push(bv);
            self.blossomendps[b].push(self.labelend[bv]);
            assert!(
                self.label[bv] == 2
                    || (self.label[bv] == 1
                        && self.labelend[bv] == self.mate[self.blossombase[bv]])
            );
            assert!(self.labelend[bv] != SENTINEL);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        self.blossomchilds[b].push(bb);
        self.blossomchilds[b].reverse();
        self.blossomendps[b].reverse();
        self.blossomendps[b].push(2 * k);

        while bw != bb {
            self.blossomparent[bw] = b;
            self.blossomchilds[b].push(bw);
            self.blossomendps[b].push(self.labelend[bw] ^ 1);
            assert!(
                self.label[bw] == 2
                    || (self.label[bw] == 1
                        && self.labelend[bw] == self.mate[self.blossombase[bw]])
            );
            assert!(self.labelend[bw] != SENTINEL);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }

        assert!(self.label[bb] == 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0.0;

        for v in self.blossom_leaves(b) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }

        // Recompute least-slack edges into neighbouring S-blossoms.
        let mut bestedgeto = vec![SENTINEL; 2 * self.nvertex];
        for bv in self.blossomchilds[b].clone() {
            let nblists: Vec<Vec<usize>> = if self.blossombestedges[bv].is_empty() {
                self.blossom_leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect()
            } else {
                vec![self.blossombestedges[bv].clone()]
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == SENTINEL
                            || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.blossombestedges[bv] = vec![];
            self.bestedge[bv] = SENTINEL;
        }
        self.blossombestedges[b] = bestedgeto.into_iter().filter(|&k| k != SENTINEL).collect();
        self.bestedge[b] = SENTINEL;
        for &k in &self.blossombestedges[b] {
            if self.bestedge[b] == SENTINEL || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
    }

    /// Expand the given top-level blossom.
    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = SENTINEL;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0.0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.blossom_leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }

        // A T-blossom expanded during a stage needs its sub-blossoms relabeled.
        if !endstage && self.label[b] == 2 {
            assert!(self.labelend[b] != SENTINEL);
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = self.blossomchilds[b]
                .iter()
                .position(|&r| r == entrychild)
                .unwrap() as i64;
            let (jstep, endptrick): (i64, usize) = if j & 1 != 0 {
                j -= self.blossomchilds[b].len() as i64;
                (1, 0)
            } else {
                (-1, 1)
            };

            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = 0;
                let q = self.wrapped(&self.blossomendps[b], j - endptrick as i64) ^ endptrick ^ 1;
                self.label[self.endpoint[q]] = 0;
                let ep = self.endpoint[p ^ 1];
                self.assign_label(ep, 2, p);

                let allow = self.wrapped(&self.blossomendps[b], j - endptrick as i64) / 2;
                self.allowedge[allow] = true;
                j += jstep;
                p = self.wrapped(&self.blossomendps[b], j - endptrick as i64) ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }

            let bv = self.wrapped(&self.blossomchilds[b], j);
            self.label[self.endpoint[p ^ 1]] = 2;
            self.label[bv] = 2;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = SENTINEL;

            j += jstep;
            while self.wrapped(&self.blossomchilds[b], j) != entrychild {
                let bv = self.wrapped(&self.blossomchilds[b], j);
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let mut v = SENTINEL;
                for leaf in self.blossom_leaves(bv) {
                    v = leaf;
                    if self.label[v] != 0 {
                        break;
                    }
                }
                if v != SENTINEL && self.label[v] != 0 {
                    assert!(self.label[v] == 2);
                    assert!(self.inblossom[v] == bv);
                    self.label[v] = 0;
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0;
                    let lblend = self.labelend[v];
                    self.assign_label(v, 2, lblend);
                }
                j += jstep;
            }
        }

        self.label[b] = SENTINEL;
        self.labelend[b] = SENTINEL;
        self.blossombase[b] = SENTINEL;
        self.bestedge[b] = SENTINEL;
        self.blossomchilds[b] = vec![];
        self.blossomendps[b] = vec![];
        self.blossombestedges[b] = vec![];
        self.unusedblossoms.push(b);
    }

    /// Swap matched/unmatched edges over the alternating path through
    /// blossom b between vertex v and the base.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }

        let i = self.blossomchilds[b].iter().position(|&r| r == t).unwrap();
        let mut j = i as i64;
        let (jstep, endptrick): (i64, usize) = if i & 1 != 0 {
            j -= self.blossomchilds[b].len() as i64;
            (1, 0)
        } else {
            (-1, 1)
        };

        while j != 0 {
            j += jstep;
            let mut t = self.wrapped(&self.blossomchilds[b], j);
            let p = self.wrapped(&self.blossomendps[b], j - endptrick as i64) ^ endptrick;
            if t >= self.nvertex {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            t = self.wrapped(&self.blossomchilds[b], j);
            if t >= self.nvertex {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }

        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        assert!(self.blossombase[b] == v);
    }

    /// Swap matched/unmatched edges over an alternating path between two
    /// single vertices, running through edge k.
    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for &(start, startp) in &[(v, 2 * k + 1), (w, 2 * k)] {
            let mut s = start;
            let mut p = startp;
            loop {
                let bs = self.inblossom[s];
                assert!(self.label[bs] == 1);
                assert!(self.labelend[bs] == self.mate[self.blossombase[bs]]);
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;

                if self.labelend[bs] == SENTINEL {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                assert!(self.label[bt] == 2);
                assert!(self.labelend[bt] != SENTINEL);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                assert!(self.blossombase[bt] == t);
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn wrapped(&self, v: &[usize], index: i64) -> usize {
        if index >= 0 {
            v[index as usize]
        } else {
            v[(v.len() as i64 + index) as usize]
        }
    }

    fn solve(&mut self) -> Vec<usize> {
        for _ in 0..self.nvertex {
            // Stage: find one augmenting path and use it.
            self.label = vec![0; 2 * self.nvertex];
            self.bestedge = vec![SENTINEL; 2 * self.nvertex];
            for be in self.blossombestedges[self.nvertex..].iter_mut() {
                be.clear();
            }
            self.allowedge = vec![false; self.nedge];
            self.queue = vec![];

            for v in 0..self.nvertex {
                if self.mate[v] == SENTINEL && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, SENTINEL);
                }
            }

            let mut augmented = false;
            let mut kslack = 0.0_f64;
            loop {
                // Substage: grow the forest or pump the duals.
                while !self.queue.is_empty() && !augmented {
                    let v = self.queue.pop().unwrap();
                    assert!(self.label[self.inblossom[v]] == 1);
                    for p in self.neighbend[v].clone() {
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0.0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != SENTINEL {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                assert!(self.label[self.inblossom[w]] == 2);
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == SENTINEL || kslack < self.slack(self.bestedge[b])
                            {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == SENTINEL
                                || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }

                // Compute the dual update delta.
                let mut deltatype = -1;
                let mut delta = 0.0_f64;
                let mut deltaedge = 0usize;
                let mut deltablossom = 0usize;

                if !self.max_cardinality {
                    deltatype = 1;
                    delta = self.dualvar[..self.nvertex]
                        .iter()
                        .fold(f64::INFINITY, |a, &b| a.min(b));
                }
                for v in 0..self.nvertex {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != SENTINEL {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == -1 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * self.nvertex {
                    if self.blossomparent[b] == SENTINEL
                        && self.label[b] == 1
                        && self.bestedge[b] != SENTINEL
                    {
                        let d = self.slack(self.bestedge[b]) / 2.0;
                        if deltatype == -1 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != SENTINEL
                        && self.blossomparent[b] == SENTINEL
                        && self.label[b] == 2
                        && (deltatype == -1 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == -1 {
                    // Max-cardinality optimum reached; final correction so
                    // the duals verify.
                    assert!(self.max_cardinality);
                    deltatype = 1;
                    delta = self.dualvar[..self.nvertex]
                        .iter()
                        .fold(f64::INFINITY, |a, &b| a.min(b))
                        .max(0.0);
                }

                for v in 0..self.nvertex {
                    match self.label[self.inblossom[v]] {
                        0 => {}
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => unreachable!(),
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != SENTINEL && self.blossomparent[b] == SENTINEL {
                        match self.label[b] {
                            0 => {}
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => unreachable!(),
                        }
                    }
                }

                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        assert!(self.label[self.inblossom[i]] == 1);
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        assert!(self.label[self.inblossom[i]] == 1);
                        self.queue.push(i);
                    }
                    4 => self.expand_blossom(deltablossom, false),
                    _ => unreachable!(),
                }
            }

            if !augmented {
                break;
            }

            for b in self.nvertex..2 * self.nvertex {
                if self.blossomparent[b] == SENTINEL
                    && self.blossombase[b] != SENTINEL
                    && self.label[b] == 1
                    && self.dualvar[b] == 0.0
                {
                    self.expand_blossom(b, true);
                }
            }
        }

        let mut mate = self.mate.clone();
        for v in 0..self.nvertex {
            if mate[v] != SENTINEL {
                mate[v] = self.endpoint[mate[v]];
            }
        }
        for v in 0..self.nvertex {
            assert!(mate[v] == SENTINEL || mate[mate[v]] == v);
        }
        mate
    }

    /// Checks the complementary-slackness conditions within floating-point
    /// tolerance. Returns a description of the first failure.
    fn verify_optimum(&self) -> Option<String> {
        let scale = self.edges.iter().map(|e| e.2.abs()).fold(1.0_f64, f64::max);
        let tol = 1e-7 * scale;
        let vdualoffset = if self.max_cardinality {
            (-self.dualvar[..self.nvertex]
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b)))
            .max(0.0)
        } else {
            0.0
        };
        for k in 0..self.nedge {
            let (i, j, wt) = self.edges[k];
            let mut s = self.dualvar[i] + self.dualvar[j] - 2.0 * wt;
            let mut iblossoms = vec![i];
            let mut jblossoms = vec![j];
            while self.blossomparent[*iblossoms.last().unwrap()] != SENTINEL {
                iblossoms.push(self.blossomparent[*iblossoms.last().unwrap()]);
            }
            while self.blossomparent[*jblossoms.last().unwrap()] != SENTINEL {
                jblossoms.push(self.blossomparent[*jblossoms.last().unwrap()]);
            }
            iblossoms.reverse();
            jblossoms.reverse();
            for (&bi, &bj) in iblossoms.iter().zip(jblossoms.iter()) {
                if bi != bj {
                    break;
                }
                s += 2.0 * self.dualvar[bi];
            }
            if s < -tol {
                return Some(format!("edge {k} has negative slack {s}"));
            }
            if (self.mate[i] / 2 == k || self.mate[j] / 2 == k) && s.abs() > tol {
                return Some(format!("matched edge {k} has slack {s}"));
            }
        }
        for v in 0..self.nvertex {
            if self.mate[v] == SENTINEL && (self.dualvar[v] + vdualoffset).abs() > tol {
                return Some(format!("single vertex {v} has dual {}", self.dualvar[v]));
            }
        }
        for b in self.nvertex..2 * self.nvertex {
            if self.blossombase[b] != SENTINEL && self.dualvar[b] > tol {
                if self.blossomendps[b].len() % 2 != 1 {
                    return Some(format!("blossom {b} has even endpoint list"));
                }
                for (ix, &p) in self.blossomendps[b].iter().enumerate() {
                    if ix % 2 == 1
                        && (self.mate[self.endpoint[p]] != p ^ 1
                            || self.mate[self.endpoint[p ^ 1]] != p)
                    {
                        return Some(format!("blossom {b} is not full"));
                    }
                }
            }
        }
        None
    }
}
