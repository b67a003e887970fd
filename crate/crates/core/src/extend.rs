use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::search::{self, Coverage, CoverageQuery, Weights};
use crate::graph::Graph;
use crate::params::{Audit, CheckMode, Policy, SearchConfig};
use crate::tree::{traversal_order, OrderKind, Tree};
use crate::vertex_set::VertexSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendConfig {
    /// Re-check the extendability condition after every mutation.
    pub verified: bool,
    pub policy: Policy,
    /// `m'` such that the host is `(m, m')`-joined; only used in size hypotheses.
    pub joined_m2: usize,
    pub order: OrderKind,
    /// Shuffle candidate leaves with this seed instead of ascending id.
    pub leaf_shuffle: Option<u64>,
    pub search: SearchConfig,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig {
            verified: true,
            policy: Policy::Enforce,
            joined_m2: 1,
            order: OrderKind::Bfs,
            leaf_shuffle: None,
            search: SearchConfig::default(),
        }
    }
}

impl ExtendConfig {
    pub fn audit() -> Self {
        ExtendConfig {
            policy: Policy::Audit,
            ..Default::default()
        }
    }

    /// Trust the guarantees: no re-checks, first candidate leaf wins.
    pub fn fast() -> Self {
        ExtendConfig {
            verified: false,
            policy: Policy::Audit,
            ..Default::default()
        }
    }

    fn leaf_search(&self) -> SearchConfig {
        if self.verified {
            self.search
        } else {
            SearchConfig {
                seed: self.search.seed,
                ..SearchConfig::fast()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ExtCheck {
    Extendable { mode: CheckMode },
    DegreeExceeded { vertex: usize },
    Violated { u: Vec<usize> },
}

impl ExtCheck {
    pub fn holds(&self) -> bool {
        matches!(self, ExtCheck::Extendable { .. })
    }
}

/// A subgraph `S` of the host together with the data needed to test
/// `|N'(U) \ V(S)| >= (d-1)|U| - Σ_{u ∈ U ∩ V(S)} (d_S(u) - 1)` for `|U| <= 2m`.
#[derive(Clone, Debug)]
pub struct ExtendableEmbedding<'g> {
    host: &'g Graph,
    d: usize,
    m: usize,
    in_s: VertexSet,
    /// Vertices that stay in `S` when they become isolated.
    pinned: VertexSet,
    deg: Vec<usize>,
    adj_s: Vec<Vec<usize>>,
    /// `|N(u) \ V(S)|` for every host vertex.
    ext_deg: Vec<usize>,
    pub cfg: ExtendConfig,
    audit: Audit,
}

impl PartialEq for ExtendableEmbedding<'_> {
    fn eq(&self, o: &Self) -> bool {
        std::ptr::eq(self.host, o.host)
            && self.d == o.d
            && self.m == o.m
            && self.in_s == o.in_s
            && self.pinned == o.pinned
            && self.deg == o.deg
            && self.adj_s == o.adj_s
            && self.ext_deg == o.ext_deg
    }
}

impl<'g> ExtendableEmbedding<'g> {
    /// The empty subgraph.
    pub fn new(host: &'g Graph, d: usize, m: usize, cfg: ExtendConfig) -> Result<Self> {
        if d < 3 || m < 1 {
            return Err(Error::Parameter(format!("need d >= 3 and m >= 1, got d={d}, m={m}")));
        }
        let n = host.n();
        Ok(ExtendableEmbedding {
            host,
            d,
            m,
            in_s: VertexSet::new(n),
            pinned: VertexSet::new(n),
            deg: vec![0; n],
            adj_s: vec![Vec::new(); n],
            ext_deg: (0..n).map(|u| host.degree(u)).collect(),
            cfg,
            audit: Audit::default(),
        })
    }

    /// `I(X)`: the vertices of `X` with no edges.
    pub fn isolated(
        host: &'g Graph,
        d: usize,
        m: usize,
        x: &[usize],
        cfg: ExtendConfig,
    ) -> Result<Self> {
        let mut e = Self::new(host, d, m, cfg)?;
        for &v in x {
            e.pin(v)?;
        }
        Ok(e)
    }

    /// Add `v` to `S` as a vertex that is kept even without edges.
    pub fn pin(&mut self, v: usize) -> Result<()> {
        self.host.validate_vertex(v)?;
        self.pinned.insert(v);
        self.enter(v);
        Ok(())
    }

    pub fn host(&self) -> &'g Graph {
        self.host
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.in_s
    }

    pub fn len(&self) -> usize {
        self.in_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_s.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.host.n() && self.in_s.contains(v)
    }

    pub fn degree_in(&self, v: usize) -> usize {
        self.deg[v]
    }

    pub fn neighbours_in(&self, v: usize) -> &[usize] {
        &self.adj_s[v]
    }

    pub fn max_degree(&self) -> usize {
        self.deg.iter().copied().max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adj_s.iter().enumerate() {
            out.extend(nb.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn audit(&self) -> &Audit {
        &self.audit
    }

    pub fn note(&mut self, what: impl Into<String>) {
        self.audit.note(what);
    }

    /// Right-hand side weight of a single vertex.
    pub fn weight(&self, u: usize) -> usize {
        if self.in_s.contains(u) {
            self.d.saturating_sub(self.deg[u])
        } else {
            self.d - 1
        }
    }

    fn enter(&mut self, v: usize) {
        if self.in_s.insert(v) {
            for &w in self.host.neighbours(v) {
                self.ext_deg[w] -= 1;
            }
        }
    }

    fn leave(&mut self, v: usize) {
        if self.in_s.remove(v) {
            for &w in self.host.neighbours(v) {
                self.ext_deg[w] += 1;
            }
        }
    }

    fn link(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            let nb = &mut self.adj_s[x];
            let pos = nb.binary_search(&y).unwrap_or_else(|p| p);
            nb.insert(pos, y);
            self.deg[x] += 1;
        }
    }

    fn unlink(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            let nb = &mut self.adj_s[x];
            if let Ok(pos) = nb.binary_search(&y) {
                nb.remove(pos);
                self.deg[x] -= 1;
            }
        }
    }

    /// Exhaustive search for a violating set, falling back to sampling past the budget.
    pub fn check(&self) -> ExtCheck {
        self.check_with(&self.cfg.search)
    }

    pub fn check_with(&self, scfg: &SearchConfig) -> ExtCheck {
        let n = self.host.n();
        if let Some(v) = (0..n).find(|&u| self.deg[u] > self.d) {
            return ExtCheck::DegreeExceeded { vertex: v };
        }
        let w: Vec<f64> = (0..n).map(|u| self.weight(u) as f64).collect();
        let wmax = w.iter().copied().fold(0.0f64, f64::max);
        let cap = (2 * self.m) as f64 * wmax;
        // A vertex with this many outside neighbours satisfies every set containing it.
        let candidates: Vec<usize> = (0..n)
            .filter(|&u| w[u] > 0.0 && (self.ext_deg[u] as f64) < cap)
            .collect();
        if candidates.is_empty() {
            return ExtCheck::Extendable {
                mode: CheckMode::Exact,
            };
        }
        let target = self.in_s.complement();
        let q = CoverageQuery {
            graph: self.host,
            candidates,
            target: &target,
            mode: Coverage::Raw,
            base: 0.0,
            weights: Weights::PerVertex(&w),
            strict: true,
            lo: 1,
            hi: 2 * self.m,
            prefix: None,
        };
        let v = search::find(&q, scfg.budget_for(self.m, n), scfg);
        match v.witness {
            Some(u) => ExtCheck::Violated { u },
            None => ExtCheck::Extendable { mode: v.mode },
        }
    }

    pub fn is_extendable(&self) -> bool {
        self.check().holds()
    }

    /// Sufficient condition: `|N(U, V(G) \ V(S))| >= d|U|` for all `|U| <= 2m`.
    /// `true` only when the exhaustive search completed.
    pub fn check_external(&self) -> bool {
        external_condition(self.host, &self.in_s, self.d, self.m, &self.cfg.search)
    }

    fn verify_or_revert(&mut self, what: &str, revert: impl FnOnce(&mut Self)) -> Result<()> {
        if !self.cfg.verified {
            return Ok(());
        }
        match self.check() {
            ExtCheck::Extendable { .. } => Ok(()),
            ExtCheck::DegreeExceeded { vertex } => {
                revert(self);
                Err(Error::Contract {
                    what: format!("{what}: degree cap exceeded"),
                    witness: vec![vertex],
                })
            }
            ExtCheck::Violated { u } => {
                revert(self);
                Err(Error::Contract {
                    what: format!("{what}: extendability lost"),
                    witness: u,
                })
            }
        }
    }

    fn check_leaf_hypotheses(&mut self, s: usize) -> Result<()> {
        self.host.validate_vertex(s)?;
        if !self.in_s.contains(s) {
            return Err(Error::InvalidInput(format!("vertex {s} is not in S")));
        }
        if self.deg[s] + 1 > self.d {
            return Err(Error::Precondition(format!(
                "d_S({s}) = {} must be at most d-1 = {}",
                self.deg[s],
                self.d - 1
            )));
        }
        let need = self.in_s.len() + (2 * self.d + 2) * self.m + self.cfg.joined_m2 + 1;
        let have = self.host.n();
        if have < need {
            match self.cfg.policy {
                Policy::Enforce => {
                    return Err(Error::Size(format!(
                        "|G| = {have} < |S| + (2d+2)m + m' + 1 = {need}"
                    )))
                }
                Policy::Audit => self.audit.note("|G| >= |S| + (2d+2)m + m' + 1"),
            }
        }
        Ok(())
    }

    /// Candidate leaves at `s`, in the configured order.
    fn leaf_candidates(&self, s: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .host
            .neighbours(s)
            .iter()
            .copied()
            .filter(|&y| !self.in_s.contains(y))
            .collect();
        if let Some(seed) = self.cfg.leaf_shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ self.in_s.len() as u64,
            );
            c.shuffle(&mut rng);
        }
        c
    }

    /// Attach a new leaf at `s`, trying candidates in order and keeping the
    /// first one that leaves `S` extendable.
    pub fn add_leaf(&mut self, s: usize) -> Result<usize> {
        self.add_leaf_filtered(s, |_| true)
    }

    pub fn add_leaf_filtered(&mut self, s: usize, keep: impl Fn(usize) -> bool) -> Result<usize> {
        self.check_leaf_hypotheses(s)?;
        let scfg = self.cfg.leaf_search();
        for y in self.leaf_candidates(s) {
            if !keep(y) {
                continue;
            }
            self.enter(y);
            self.link(s, y);
            if !self.cfg.verified || self.check_with(&scfg).holds() {
                return Ok(y);
            }
            self.unlink(s, y);
            self.leave(y);
        }
        Err(Error::NoValidLeaf {
            vertex: s,
            audit: self.audit.failed.clone(),
        })
    }

    /// Remove the leaf `y` hanging from `s`, dropping `y` unless it is pinned.
    pub fn remove_leaf(&mut self, s: usize, y: usize) -> Result<()> {
        self.host.validate_vertex(s)?;
        self.host.validate_vertex(y)?;
        if self.adj_s[y] != [s] {
            return Err(Error::InvalidInput(format!("{y} is not a leaf of S attached at {s}")));
        }
        self.unlink(s, y);
        let dropped = !self.pinned.contains(y);
        if dropped {
            self.leave(y);
        }
        self.verify_or_revert("remove_leaf", |e| {
            if dropped {
                e.enter(y);
            }
            e.link(s, y);
        })
    }

    /// Add the host edge `st` between two vertices of `S`.
    pub fn add_edge(&mut self, s: usize, t: usize) -> Result<()> {
        self.host.validate_vertex(s)?;
        self.host.validate_vertex(t)?;
        if !self.host.has_edge(s, t) {
            return Err(Error::InvalidInput(format!("{s}-{t} is not a host edge")));
        }
        if !self.in_s.contains(s) || !self.in_s.contains(t) {
            return Err(Error::InvalidInput(format!("both {s} and {t} must be in S")));
        }
        if self.adj_s[s].binary_search(&t).is_ok() {
            return Err(Error::InvalidInput(format!("{s}-{t} is already in S")));
        }
        if self.deg[s] + 1 > self.d || self.deg[t] + 1 > self.d {
            return Err(Error::Precondition(format!(
                "d_S({s}) and d_S({t}) must be at most d-1 = {}",
                self.d - 1
            )));
        }
        self.link(s, t);
        self.verify_or_revert("add_edge", |e| e.unlink(s, t))
    }

    /// Remove an edge of `S`; endpoints that become isolated leave unless pinned.
    pub fn remove_edge(&mut self, s: usize, t: usize) -> Result<()> {
        if s >= self.host.n() || self.adj_s[s].binary_search(&t).is_err() {
            return Err(Error::InvalidInput(format!("{s}-{t} is not in S")));
        }
        self.unlink(s, t);
        for v in [s, t] {
            if self.deg[v] == 0 && !self.pinned.contains(v) {
                self.leave(v);
            }
        }
        Ok(())
    }

    /// Move the image `y` onto `x`, carrying every `S`-edge at `y` across.
    /// Nothing guarantees this move, so it is always checked.
    pub fn relocate(&mut self, y: usize, x: usize) -> Result<()> {
        self.host.validate_vertex(y)?;
        self.host.validate_vertex(x)?;
        if !self.in_s.contains(y) || x == y {
            return Err(Error::InvalidInput(format!("cannot move {y} onto {x}")));
        }
        if self.in_s.contains(x) && (self.deg[x] > 0 || !self.pinned.contains(x)) {
            return Err(Error::InvalidInput(format!("{x} is already used by S")));
        }
        let nb = self.adj_s[y].clone();
        if let Some(&w) = nb.iter().find(|&&w| !self.host.has_edge(x, w)) {
            return Err(Error::InvalidInput(format!("{x} is not adjacent to {w}")));
        }
        let x_was_in = self.in_s.contains(x);
        let y_pinned = self.pinned.contains(y);
        for &w in &nb {
            self.unlink(y, w);
        }
        if !y_pinned {
            self.leave(y);
        }
        self.enter(x);
        for &w in &nb {
            self.link(x, w);
        }
        let scfg = self.cfg.leaf_search();
        match self.check_with(&scfg) {
            ExtCheck::Extendable { .. } => Ok(()),
            other => {
                for &w in &nb {
                    self.unlink(x, w);
                }
                if !x_was_in {
                    self.leave(x);
                }
                self.enter(y);
                for &w in &nb {
                    self.link(y, w);
                }
                let witness = match other {
                    ExtCheck::Violated { u } => u,
                    ExtCheck::DegreeExceeded { vertex } => vec![vertex],
                    ExtCheck::Extendable { .. } => unreachable!(),
                };
                Err(Error::Contract {
                    what: "relocation breaks extendability".into(),
                    witness,
                })
            }
        }
    }

    /// Copy `tree` onto the host with `t ↦ v`, growing `S` leaf by leaf.
    /// On failure the state is restored.
    pub fn embed_tree(&mut self, tree: &Tree, t: usize, v: usize) -> Result<Embedding> {
        tree.validate_vertex(t)?;
        self.host.validate_vertex(v)?;
        if !self.in_s.contains(v) {
            return Err(Error::Precondition(format!("anchor {v} must be a vertex of R")));
        }
        let d = self.d;
        let policy = self.cfg.policy;
        let mut audit = std::mem::take(&mut self.audit);
        let r = (|| {
            audit.require(policy, 2 * tree.max_degree() <= d, "Δ(T) <= d/2")?;
            audit.require(policy, 2 * self.max_degree() <= d, "Δ(R) <= d/2")?;
            let budget = self.host.n() as i64
                - ((2 * d + 2) * self.m) as i64
                - self.cfg.joined_m2 as i64;
            audit.require(
                policy,
                (self.in_s.len() + tree.n()) as i64 <= budget,
                format!("|R| + |T| <= |G| - (2d+2)m - m' = {budget}"),
            )
        })();
        self.audit = audit;
        r?;
        let order = traversal_order(tree, t, self.cfg.order)?;
        let parents = tree.parents_from(t);
        let snapshot = self.clone();
        let mut emb = Embedding::new(tree.n(), self.host.n());
        emb.set(t, v)?;
        for (i, &x) in order.iter().enumerate().skip(1) {
            let hp = emb.get(parents[x].expect("non-root")).expect("parent placed first");
            match self.add_leaf(hp) {
                Ok(y) => emb.set(x, y)?,
                Err(e) => {
                    let audit = self.audit.clone();
                    *self = snapshot;
                    self.audit = audit;
                    return Err(Error::EmbedFailed {
                        index: i,
                        tree_vertex: x,
                        cause: Box::new(e),
                    });
                }
            }
        }
        Ok(emb)
    }
}

/// `|N(U, V(G) \ S)| >= d|U|` for every `1 <= |U| <= 2m`, established exhaustively.
pub fn external_condition(g: &Graph, s: &VertexSet, d: usize, m: usize, cfg: &SearchConfig) -> bool {
    let target = s.complement();
    let q = CoverageQuery {
        graph: g,
        candidates: (0..g.n()).collect(),
        target: &target,
        mode: Coverage::Open,
        base: 0.0,
        weights: Weights::Uniform(d as f64),
        strict: true,
        lo: 1,
        hi: 2 * m,
        prefix: None,
    };
    matches!(
        search::exact(&q, cfg.budget_for(m, g.n())),
        search::Outcome::Absent
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct transcription of the condition over all subsets.
    fn brute(e: &ExtendableEmbedding<'_>) -> bool {
        let n = e.host().n();
        if e.max_degree() > e.d() {
            return false;
        }
        let outside = e.vertices().complement();
        for mask in 1u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size > 2 * e.m() {
                continue;
            }
            let mut nb = VertexSet::new(n);
            let mut rhs = 0i64;
            for u in 0..n {
                if mask >> u & 1 == 1 {
                    nb.union_with(e.host().row(u));
                    rhs += e.d() as i64 - 1;
                    if e.contains(u) {
                        rhs -= e.degree_in(u) as i64 - 1;
                    }
                }
            }
            if (nb.intersection_len(&outside) as i64) < rhs {
                return false;
            }
        }
        true
    }

    #[test]
    fn complete_host_examples() {
        let g = Graph::complete(20);
        let e = ExtendableEmbedding::isolated(&g, 3, 2, &[0], ExtendConfig::default()).unwrap();
        assert!(e.is_extendable());
        let g = Graph::complete(12);
        let mut e = ExtendableEmbedding::isolated(&g, 3, 1, &[0], ExtendConfig::default()).unwrap();
        for y in 1..5 {
            e.pin(y).unwrap();
            e.link(0, y);
        }
        assert_eq!(e.check(), ExtCheck::DegreeExceeded { vertex: 0 });
    }

    #[test]
    fn leaf_and_edge_calculus() {
        let g = Graph::complete(50);
        let cfg = ExtendConfig {
            joined_m2: 2,
            ..Default::default()
        };
        let mut e = ExtendableEmbedding::isolated(&g, 4, 2, &[0], cfg).unwrap();
        let mut last = 0;
        for _ in 0..4 {
            last = e.add_leaf(last).unwrap();
        }
        assert_eq!(e.len(), 5);
        let before = e.clone();
        let y = e.add_leaf(last).unwrap();
        assert!(e.is_extendable());
        e.remove_leaf(last, y).unwrap();
        assert_eq!(e, before);
        assert!(e.remove_leaf(1, 2).is_err());
        e.add_edge(0, last).unwrap();
        assert!(e.is_extendable());
        let mut full = ExtendableEmbedding::isolated(&g, 4, 2, &[0], cfg).unwrap();
        for _ in 0..4 {
            full.add_leaf(0).unwrap();
        }
        assert!(matches!(full.add_leaf(0), Err(Error::Precondition(_))));
        let small = Graph::complete(10);
        let mut e = ExtendableEmbedding::isolated(&small, 4, 2, &[0], cfg).unwrap();
        assert!(matches!(e.add_leaf(0), Err(Error::Size(_))));
    }

    #[test]
    fn matches_brute_force_on_sparse_hosts() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let n = 10;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(0.45) {
                        edges.push((a, b));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            let mut e = ExtendableEmbedding::new(&g, 3, 1, ExtendConfig::default()).unwrap();
            for v in 0..n {
                if rng.gen_bool(0.3) {
                    e.pin(v).unwrap();
                }
            }
            for &(a, b) in &edges {
                if e.contains(a) && e.contains(b) && rng.gen_bool(0.5) {
                    e.link(a, b);
                }
            }
            assert_eq!(e.check().holds(), brute(&e));
        }
    }

    #[test]
    fn tree_embedding() {
        let g = Graph::complete(60);
        let cfg = ExtendConfig {
            joined_m2: 2,
            ..Default::default()
        };
        let t = Tree::random(20, 3, 1).unwrap();
        let mut r = ExtendableEmbedding::isolated(&g, 6, 2, &[7], cfg).unwrap();
        let emb = r.embed_tree(&t, 0, 7).unwrap();
        emb.validate_complete(&t, &g).unwrap();
        assert_eq!(emb.get(0), Some(7));
        assert!(r.is_extendable());
        let mut r = ExtendableEmbedding::isolated(&g, 6, 2, &[7], cfg).unwrap();
        let big = Tree::random(40, 3, 1).unwrap();
        assert!(matches!(r.embed_tree(&big, 0, 7), Err(Error::Size(_))));
        let one = r.embed_tree(&Tree::single(), 0, 7).unwrap();
        assert_eq!(one.pairs(), vec![(0, 7)]);
    }

    #[test]
    fn external_condition_examples() {
        let g = Graph::complete(36);
        assert!(external_condition(&g, &VertexSet::new(36), 3, 2, &SearchConfig::default()));
        assert!(!external_condition(&g, &VertexSet::full(36), 3, 2, &SearchConfig::default()));
    }
}
