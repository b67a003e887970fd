//! Tree embeddings whose image covers a prescribed vertex set.

use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::extend::{ExtendConfig, ExtendableEmbedding};
use crate::graph::Graph;
use crate::params::{Audit, Policy};
use crate::tree::{
    fixed_length_decomposition, separated_at_distance, traversal_order, OrderKind, Tree,
};
use crate::vertex_set::VertexSet;

/// Cover `x` with a copy of `tree` rooted at `t ↦ v`.
#[derive(Clone, Debug)]
pub struct CoverTask<'a> {
    pub host: &'a Graph,
    pub x: Vec<usize>,
    pub v: usize,
    pub tree: &'a Tree,
    pub t: usize,
    /// Leaf that must land outside `x`; defaults to the largest-id leaf other than `t`.
    pub t_excluded: Option<usize>,
    pub d: usize,
    pub m: usize,
    pub gamma: f64,
    pub cfg: ExtendConfig,
    /// Extra attempts with reshuffled orders after a failed stage.
    pub retries: usize,
    pub seed: u64,
    /// Hypotheses found false on construction under [`Policy::Audit`].
    pub audit: Audit,
}

impl<'a> CoverTask<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        host: &'a Graph,
        x: Vec<usize>,
        v: usize,
        tree: &'a Tree,
        t: usize,
        d: usize,
        m: usize,
        gamma: f64,
        cfg: ExtendConfig,
    ) -> Result<Self> {
        host.validate_vertex(v)?;
        tree.validate_vertex(t)?;
        let mut xs = VertexSet::new(host.n());
        for &u in &x {
            host.validate_vertex(u)?;
            if !xs.insert(u) {
                return Err(Error::InvalidInput(format!("vertex {u} repeated in X")));
            }
        }
        if xs.contains(v) {
            return Err(Error::InvalidInput(format!("anchor {v} lies in X")));
        }
        let mut x = x;
        x.sort_unstable();
        let task = CoverTask {
            host,
            x,
            v,
            tree,
            t,
            t_excluded: None,
            d,
            m,
            gamma,
            cfg,
            retries: 0,
            seed: 0,
            audit: Audit::default(),
        };
        let mut task = task;
        if cfg.verified {
            let st = task.initial_state()?;
            if let crate::extend::ExtCheck::Violated { u } = st.check() {
                match cfg.policy {
                    Policy::Enforce => {
                        return Err(Error::Contract {
                            what: "I(X ∪ {v}) is not extendable".into(),
                            witness: u,
                        })
                    }
                    Policy::Audit => task.audit.note("I(X ∪ {v}) is (d,m)-extendable"),
                }
            }
        }
        Ok(task)
    }

    /// `I(X ∪ {v})`.
    pub fn initial_state(&self) -> Result<ExtendableEmbedding<'a>> {
        let mut st = ExtendableEmbedding::isolated(self.host, self.d, self.m, &self.x, self.cfg)?;
        st.pin(self.v)?;
        for f in &self.audit.failed {
            st.note(f.clone());
        }
        Ok(st)
    }

    fn x_set(&self) -> VertexSet {
        VertexSet::from_iter(self.host.n(), self.x.iter().copied())
    }
}

/// Per-stage counters, emitted as one JSON line each.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageStats {
    pub piece: usize,
    pub tree_size: usize,
    pub residual: usize,
    pub bound: f64,
    pub good: usize,
    pub neutral: usize,
    pub repairs: usize,
}

#[derive(Clone, Debug)]
pub struct CoverOutcome {
    /// Map of the tree handed in, into host vertices.
    pub embedding: Embedding,
    pub stats: StageStats,
}

/// Grow `tree` from `t ↦ anchor`, taking an edge into `open` whenever one is
/// available at the current parent (smallest id first), otherwise a fresh leaf.
pub(crate) fn grow(
    state: &mut ExtendableEmbedding<'_>,
    tree: &Tree,
    t: usize,
    anchor: usize,
    open: &mut VertexSet,
    stats: &mut StageStats,
) -> Result<Embedding> {
    let host = state.host();
    let order = traversal_order(tree, t, state.cfg.order)?;
    let parents = tree.parents_from(t);
    let mut emb = Embedding::new(tree.n(), host.n());
    emb.set(t, anchor)?;
    for (i, &x) in order.iter().enumerate().skip(1) {
        let u = emb.get(parents[x].expect("non-root")).expect("parent placed first");
        let mut placed = None;
        for c in host.row(u).intersection(open).iter() {
            if state.add_edge(u, c).is_ok() {
                placed = Some(c);
                break;
            }
        }
        match placed {
            Some(c) => {
                open.remove(c);
                stats.good += 1;
                emb.set(x, c)?;
            }
            None => match state.add_leaf(u) {
                Ok(y) => {
                    stats.neutral += 1;
                    emb.set(x, y)?;
                }
                Err(e) => {
                    return Err(Error::StepFailure {
                        step: i + 1,
                        detail: e.to_string(),
                    })
                }
            },
        }
    }
    Ok(emb)
}

/// Copy of `T` with `t ↦ v` such that `S ∪ I(X)` stays extendable and fewer
/// than `m` vertices of `X` are missed.
pub fn cover_most<'g>(task: &CoverTask<'g>) -> Result<(CoverOutcome, ExtendableEmbedding<'g>)> {
    let mut state = task.initial_state()?;
    let out = cover_most_on(task, &mut state)?;
    Ok((out, state))
}

fn cover_most_on(task: &CoverTask<'_>, state: &mut ExtendableEmbedding<'_>) -> Result<CoverOutcome> {
    let (tree, d, m) = (task.tree, task.d, task.m);
    let delta = tree.max_degree();
    if tree.n() < task.x.len() + delta * m + 2 && !task.x.is_empty() {
        return Err(Error::Precondition(format!(
            "need |T| >= |X| + Δm + 2 = {}, got {}",
            task.x.len() + delta * m + 2,
            tree.n()
        )));
    }
    if d < delta {
        return Err(Error::Parameter(format!("need d >= Δ(T), got d={d}, Δ={delta}")));
    }
    let policy = task.cfg.policy;
    let need = tree.n() + (2 * d + 4) * m + 1;
    match policy {
        Policy::Enforce if task.host.n() < need => {
            return Err(Error::Size(format!("|G| = {} < |T| + (2d+4)m + 1 = {need}", task.host.n())))
        }
        Policy::Audit if task.host.n() < need => state.note("|G| >= |T| + (2d+4)m + 1"),
        _ => {}
    }
    let snapshot = state.clone();
    let mut open = task.x_set();
    let mut stats = StageStats {
        piece: 1,
        tree_size: tree.n(),
        residual: 0,
        bound: m as f64,
        good: 0,
        neutral: 0,
        repairs: 0,
    };
    let emb = match grow(state, tree, task.t, task.v, &mut open, &mut stats) {
        Ok(e) => e,
        Err(e) => {
            restore(state, snapshot);
            return Err(e);
        }
    };
    stats.residual = open.len();
    if stats.residual >= m && !task.x.is_empty() {
        restore(state, snapshot);
        return Err(Error::Residual {
            stage: 1,
            residual: stats.residual,
            bound: m as f64,
        });
    }
    Ok(CoverOutcome { embedding: emb, stats })
}

/// Put back an earlier state but keep the audit trail gathered since.
fn restore<'g>(state: &mut ExtendableEmbedding<'g>, snapshot: ExtendableEmbedding<'g>) {
    let audit = state.audit().clone();
    *state = snapshot;
    for f in audit.failed {
        state.note(f);
    }
}

/// Copy of `T` attached at `r ∈ V(R)` (`state` holds `R ∪ I(X)`), missing at
/// most `⌊2m/(d-1)^k⌋` vertices of `X`.
///
/// Vertices are grown greedily into `X`; afterwards tree vertices of a
/// `(4k+4)`-separated set are moved onto still-uncovered vertices of `X`
/// whenever the host allows it.
pub fn cover_separated(
    state: &mut ExtendableEmbedding<'_>,
    x: &[usize],
    tree: &Tree,
    t: usize,
    r: usize,
    k: usize,
) -> Result<CoverOutcome> {
    let host = state.host();
    let (d, m) = (state.d(), state.m());
    tree.validate_vertex(t)?;
    host.validate_vertex(r)?;
    if !state.contains(r) {
        return Err(Error::Precondition(format!("anchor {r} must be a vertex of R")));
    }
    let mut open = VertexSet::new(host.n());
    for &u in x {
        host.validate_vertex(u)?;
        if state.contains(u) && state.degree_in(u) > 0 {
            return Err(Error::InvalidInput(format!("X vertex {u} is already used by R")));
        }
        open.insert(u);
    }
    let policy = state.cfg.policy;
    let mut audit = Audit::default();
    audit.require(policy, d >= 20, "d >= 20")?;
    audit.require(policy, 4 * state.max_degree() <= d, "Δ(R) <= d/4")?;
    audit.require(policy, 4 * tree.max_degree() <= d, "Δ(T) <= d/4")?;
    let used = state.vertices().difference(&open).len();
    let budget = host.n() as i64 - (10 * d * m) as i64 - 2 * k as i64;
    audit.require(
        policy,
        (used + open.len() + tree.n()) as i64 <= budget,
        "|R| + |X| + |T| <= |G| - 10dm - 2k",
    )?;
    let q = separated_at_distance(tree, 4 * k + 4);
    if q.len() < 3 * open.len() {
        let what = format!(
            "T has a (4k+4)-separated set of size 3|X| = {} (found {})",
            3 * open.len(),
            q.len()
        );
        match policy {
            Policy::Enforce => return Err(Error::Precondition(what)),
            Policy::Audit => audit.note(what),
        }
    }
    for f in &audit.failed {
        state.note(f.clone());
    }
    for u in open.iter() {
        state.pin(u)?;
    }
    let snapshot = state.clone();
    let bound = 2.0 * m as f64 / ((d - 1) as f64).powi(k as i32);
    let mut stats = StageStats {
        piece: k + 1,
        tree_size: tree.n(),
        residual: 0,
        bound,
        good: 0,
        neutral: 0,
        repairs: 0,
    };
    let mut emb = match grow(state, tree, t, r, &mut open, &mut stats) {
        Ok(e) => e,
        Err(e) => {
            restore(state, snapshot);
            return Err(e);
        }
    };
    let xs = VertexSet::from_iter(host.n(), x.iter().copied());
    repair(state, tree, t, &q, &xs, &mut open, &mut emb, &mut stats);
    stats.residual = open.len();
    if stats.residual as f64 > bound.floor() {
        restore(state, snapshot);
        return Err(Error::Residual {
            stage: k + 1,
            residual: stats.residual,
            bound,
        });
    }
    Ok(CoverOutcome { embedding: emb, stats })
}

/// Move tree vertices onto uncovered targets, separated-set vertices first.
#[allow(clippy::too_many_arguments)]
fn repair(
    state: &mut ExtendableEmbedding<'_>,
    tree: &Tree,
    t: usize,
    q: &[usize],
    xs: &VertexSet,
    open: &mut VertexSet,
    emb: &mut Embedding,
    stats: &mut StageStats,
) {
    let host = state.host();
    let mut order: Vec<usize> = q.to_vec();
    let in_q = VertexSet::from_iter(tree.n(), q.iter().copied());
    order.extend((0..tree.n()).filter(|&z| !in_q.contains(z)));
    for target in open.to_vec() {
        for &z in &order {
            if z == t {
                continue;
            }
            let y = emb.get(z).expect("tree fully embedded");
            if xs.contains(y) {
                continue;
            }
            let fits = tree
                .neighbours(z)
                .iter()
                .all(|&w| host.has_edge(target, emb.get(w).expect("embedded")));
            if fits && state.relocate(y, target).is_ok() {
                emb.unset(z);
                emb.set(z, target).expect("target was free");
                open.remove(target);
                stats.repairs += 1;
                break;
            }
        }
    }
}

/// Smallest `l` with `2m/(d-1)^(l-1) < 1`.
pub fn stage_count(d: usize, m: usize) -> usize {
    let mut l = 1;
    let mut bound = 2.0 * m as f64;
    while bound >= 1.0 {
        bound /= (d - 1) as f64;
        l += 1;
    }
    l
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    pub embedding: Embedding,
    pub stages: Vec<StageStats>,
    pub attempts: usize,
    pub audit: Audit,
}

impl CoverReport {
    /// One JSON object per stage.
    pub fn telemetry_jsonl(&self) -> String {
        self.stages
            .iter()
            .map(|s| serde_json::to_string(s).expect("plain struct") + "\n")
            .collect()
    }
}

/// Copy of `T` covering all of `X` with `t ↦ v` and the excluded leaf outside `X`.
pub fn embed_covering(task: &CoverTask<'_>) -> Result<CoverReport> {
    let mut st = task.initial_state()?;
    let r = embed_covering_on(task, &mut st)?;
    Ok(r)
}

/// As [`embed_covering`], extending a state that already contains `I(X ∪ {v})`.
pub fn embed_covering_on<'g>(
    task: &CoverTask<'g>,
    state: &mut ExtendableEmbedding<'g>,
) -> Result<CoverReport> {
    let (tree, d, m) = (task.tree, task.d, task.m);
    let n = tree.n();
    let policy = task.cfg.policy;
    let mut audit = Audit::default();
    if !(task.gamma > 0.0 && task.gamma < 0.1) {
        return Err(Error::Parameter(format!("need 0 < γ < 1/10, got {}", task.gamma)));
    }
    if d < tree.max_degree() || d < 3 {
        return Err(Error::Parameter(format!(
            "need d >= max(3, Δ(T)), got d={d}, Δ={}",
            tree.max_degree()
        )));
    }
    if task.x.len() as f64 > (1.0 - task.gamma) * n as f64 {
        return Err(Error::Precondition(format!(
            "|X| = {} exceeds (1-γ)|T| = {:.1}",
            task.x.len(),
            (1.0 - task.gamma) * n as f64
        )));
    }
    audit.require(policy, d >= 20, "d >= 20")?;
    audit.require(policy, n >= 2 * d * d * m, "|T| >= 2d²m")?;
    audit.require(policy, task.host.n() >= n + 20 * d * m, "|G| >= |T| + 20dm")?;
    if n == 1 {
        if !task.x.is_empty() {
            return Err(Error::Precondition("a single vertex cannot cover X".into()));
        }
        return Ok(CoverReport {
            embedding: Embedding::from_pairs(1, task.host.n(), &[(task.t, task.v)])?,
            stages: vec![],
            attempts: 1,
            audit,
        });
    }
    let t_ex = match task.t_excluded {
        Some(l) if l != task.t && tree.is_leaf(l) => l,
        Some(l) => return Err(Error::InvalidInput(format!("{l} is not a leaf other than t"))),
        None => *tree
            .leaves()
            .iter()
            .rev()
            .find(|&&l| l != task.t)
            .expect("a tree with two vertices has two leaves"),
    };
    let rest: Vec<usize> = (0..n).filter(|&z| z != t_ex).collect();
    let t_rest = tree.induced(&rest)?;
    let root = rest.iter().position(|&z| z == task.t).expect("t kept");
    let mut last_err = None;
    for attempt in 0..=task.retries {
        let mut t2 = task.clone();
        if attempt > 0 {
            let s = task.seed.wrapping_add(attempt as u64);
            t2.cfg.order = OrderKind::Shuffled(s);
            t2.cfg.leaf_shuffle = Some(s);
        }
        let mut st = state.clone();
        st.cfg = t2.cfg;
        match covering_attempt(&t2, &mut st, &t_rest, root, &rest, t_ex, &mut audit) {
            Ok((embedding, stages)) => {
                audit.extend(st.audit());
                st.cfg = state.cfg;
                *state = st;
                return Ok(CoverReport {
                    embedding,
                    stages,
                    attempts: attempt + 1,
                    audit,
                });
            }
            Err(e) => {
                audit.extend(st.audit());
                last_err = Some(e);
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn covering_attempt<'g>(
    task: &CoverTask<'g>,
    state: &mut ExtendableEmbedding<'g>,
    t_rest: &Tree,
    root: usize,
    rest: &[usize],
    t_ex: usize,
    audit: &mut Audit,
) -> Result<(Embedding, Vec<StageStats>)> {
    let (d, m) = (task.d, task.m);
    let host = task.host;
    let ell = stage_count(d, m);
    let (dec, pieces) = decompose_for_cover(task, t_rest, root, ell, audit)?;
    let ell = pieces;
    let mut full = Embedding::new(t_rest.n(), host.n());
    let mut stages = Vec::new();
    let xs = task.x_set();
    // Stage 1 covers most of X.
    let first = t_rest.induced(&dec.subtrees[0])?;
    let first_root = dec.subtrees[0].iter().position(|&z| z == root).expect("root in T_1");
    let sub = CoverTask {
        tree: &first,
        t: first_root,
        ..task.clone()
    };
    let out = cover_most_on(&sub, state).map_err(|e| Error::StageFailure {
        stage: 1,
        detail: e.to_string(),
    })?;
    for (z, y) in out.embedding.pairs() {
        full.set(dec.subtrees[0][z], y)?;
    }
    stages.push(out.stats);
    for j in 2..=ell {
        let verts = &dec.subtrees[j - 1];
        let link = dec.links[j - 2];
        let piece = t_rest.induced(verts)?;
        let proot = verts.iter().position(|&z| z == link).expect("link in next piece");
        let r = full.get(link).expect("link placed in earlier piece");
        let remaining: Vec<usize> = xs.iter().filter(|&u| !full.used().contains(u)).collect();
        let out = cover_separated(state, &remaining, &piece, proot, r, j - 1).map_err(|e| {
            Error::StageFailure {
                stage: j,
                detail: e.to_string(),
            }
        })?;
        for (z, y) in out.embedding.pairs() {
            if z != proot {
                full.set(verts[z], y)?;
            }
        }
        let mut s = out.stats;
        s.piece = j;
        stages.push(s);
    }
    let missed = xs.iter().filter(|&u| !full.used().contains(u)).count();
    if missed > 0 {
        return Err(Error::Residual {
            stage: ell,
            residual: missed,
            bound: 0.0,
        });
    }
    // The excluded leaf goes outside X, which add_leaf guarantees as X ⊆ V(S).
    let tree = task.tree;
    let p = tree.neighbours(t_ex)[0];
    let p_rest = rest.iter().position(|&z| z == p).expect("parent kept");
    let sp = full.get(p_rest).expect("embedded");
    let y = state.add_leaf(sp).map_err(|e| Error::StageFailure {
        stage: ell + 1,
        detail: e.to_string(),
    })?;
    let mut out = Embedding::new(tree.n(), host.n());
    for (z, h) in full.pairs() {
        out.set(rest[z], h)?;
    }
    out.set(t_ex, y)?;
    Ok((out, stages))
}

/// Fixed-length decomposition into `ell` pieces; under audit the spread
/// parameter is raised, then the piece count lowered, until one exists.
fn decompose_for_cover(
    task: &CoverTask<'_>,
    t_rest: &Tree,
    root: usize,
    ell: usize,
    audit: &mut Audit,
) -> Result<(crate::tree::TreeDecomposition, usize)> {
    let base = task.gamma / 20.0;
    let policy = task.cfg.policy;
    let mut pieces = ell;
    loop {
        let mut g = base;
        loop {
            match fixed_length_decomposition(t_rest, g, pieces, root, policy) {
                Ok((dec, a)) => {
                    audit.extend(&a);
                    if g > base {
                        audit.note(format!("decomposition spread raised to {g:.4}"));
                    }
                    if pieces < ell {
                        audit.note(format!("decomposed into {pieces} < {ell} pieces"));
                    }
                    return Ok((dec, pieces));
                }
                Err(e) if policy == Policy::Enforce => return Err(e),
                Err(_) if g * 2.0 < 0.25 => g *= 2.0,
                Err(_) if g < 0.24 => g = 0.24,
                Err(e) if pieces == 1 => return Err(e),
                Err(_) => break,
            }
        }
        pieces -= 1;
    }
}
