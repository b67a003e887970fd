//! Nested random vertex sets, their cleaned partition, and the stage-wise
//! embedding of an almost spanning tree through them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cover::{embed_covering, grow, CoverTask, StageStats};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::extend::{ExtCheck, ExtendConfig, ExtendableEmbedding};
use crate::graph::{grow_waste, hall_matching, is_joined_within, prune_relative_expansion, HallOutcome};
use crate::graph::search::{self, Coverage, CoverageQuery, Weights};
use crate::graph::Graph;
use crate::params::{Audit, CheckMode, ParamSet, Policy, SearchConfig};
use crate::tree::{
    descending_decomposition, is_descending, traversal_order, OrderKind, Tree, TreeDecomposition,
};
use crate::vertex_set::VertexSet;

/// `U_0 ⊇ U_1 ⊇ … ⊇ U_ℓ` with `U_0 = V(G)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vortex {
    /// Sorted vertex lists.
    pub sets: Vec<Vec<usize>>,
    pub sizes: Vec<usize>,
    pub m: usize,
    pub lambda: f64,
    pub mode: CheckMode,
    pub attempts: usize,
    pub audit: Audit,
}

/// Knobs shared by the samplers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexConfig {
    pub m: usize,
    pub lambda: f64,
    /// `(γ1, γ2)` when the size tuple must be descending.
    pub descending: Option<(f64, f64)>,
    /// Expansion constant `D` for the extra check into `U_1 \ U_2`.
    pub big_d: Option<f64>,
    /// Extendability degree used for the partition check.
    pub d: usize,
    pub max_retries: usize,
    pub policy: Policy,
    pub search: SearchConfig,
}

impl VortexConfig {
    pub fn new(m: usize, lambda: f64) -> Self {
        VortexConfig {
            m,
            lambda,
            descending: None,
            big_d: None,
            d: 12,
            max_retries: 5,
            policy: Policy::Enforce,
            search: SearchConfig::default(),
        }
    }
}

/// A property that failed, with the offending set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fault {
    pub property: String,
    pub level: usize,
    pub witness: Vec<usize>,
}

impl std::fmt::Display for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at level {} (witness {:?})", self.property, self.level, self.witness)
    }
}

fn set_of(n: usize, v: &[usize]) -> VertexSet {
    VertexSet::from_iter(n, v.iter().copied())
}

fn check_tuple(g: &Graph, sizes: &[usize], cfg: &VortexConfig) -> Result<()> {
    if sizes.is_empty() || sizes[0] != g.n() {
        return Err(Error::Parameter(format!("need n_0 = |G| = {}", g.n())));
    }
    if sizes.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Parameter(format!("sizes {sizes:?} are not non-increasing")));
    }
    if let Some((g1, g2)) = cfg.descending {
        if !is_descending(sizes, g1, g2, 1.0) {
            return Err(Error::Parameter(format!("sizes {sizes:?} are not ({g1}, {g2})-descending")));
        }
    }
    if cfg.m == 0 || !(cfg.lambda > 0.0 && cfg.lambda < 1.0) {
        return Err(Error::Parameter("need m >= 1 and 0 < λ < 1".into()));
    }
    Ok(())
}

/// Every `m`-set `U ⊆ U_{i-1}` has `|N(U, U_i)| >= (1-λ)|U_i|`.
pub fn validate_vortex(g: &Graph, v: &Vortex, cfg: &SearchConfig) -> std::result::Result<CheckMode, Fault> {
    let n = g.n();
    if v.sets.first().map(Vec::len) != Some(n) {
        return Err(Fault {
            property: "U_0 = V(G)".into(),
            level: 0,
            witness: vec![],
        });
    }
    let mut mode = CheckMode::Exact;
    for i in 1..v.sets.len() {
        let prev = set_of(n, &v.sets[i - 1]);
        let cur = set_of(n, &v.sets[i]);
        if cur.len() != v.sizes[i] || !cur.is_subset(&prev) {
            return Err(Fault {
                property: format!("U_{i} is a {}-subset of U_{}", v.sizes[i], i - 1),
                level: i,
                witness: vec![],
            });
        }
        if v.m > prev.len() || cur.is_empty() {
            continue;
        }
        let q = CoverageQuery {
            graph: g,
            candidates: v.sets[i - 1].clone(),
            target: &cur,
            mode: Coverage::Open,
            base: (1.0 - v.lambda) * cur.len() as f64,
            weights: Weights::Uniform(0.0),
            strict: true,
            lo: v.m,
            hi: v.m,
            prefix: None,
        };
        let verdict = search::find(&q, cfg.budget_for(v.m, prev.len()), cfg);
        mode = mode.meet(verdict.mode);
        if let Some(u) = verdict.witness {
            return Err(Fault {
                property: "every m-set of U_{i-1} sees (1-λ)|U_i| vertices of U_i".into(),
                level: i,
                witness: u,
            });
        }
    }
    Ok(mode)
}

/// The extra properties: `G[U_{ℓ-1}]` is `λm`-joined, and `⌊m/4⌋`-sets see
/// at least `γ1 D m / 200` vertices of `U_1 \ U_2`.
fn extra_properties(
    g: &Graph,
    v: &Vortex,
    cfg: &VortexConfig,
    audit: &mut Audit,
) -> std::result::Result<CheckMode, Fault> {
    let n = g.n();
    let l = v.sets.len() - 1;
    let mut mode = CheckMode::Exact;
    let a = (cfg.lambda * cfg.m as f64).floor() as usize;
    let last = set_of(n, &v.sets[l - 1]);
    if a == 0 {
        audit.note("λm < 1: joinedness of G[U_{ℓ-1}] not checked");
    } else if 2 * a <= last.len() {
        match is_joined_within(g, &last, a, a, &cfg.search) {
            Ok(crate::graph::Joinedness::Joined { mode: jm }) => mode = mode.meet(jm),
            Ok(crate::graph::Joinedness::Witness { a: wa, .. }) => {
                return Err(Fault {
                    property: "G[U_{ℓ-1}] is λm-joined".into(),
                    level: l - 1,
                    witness: wa,
                })
            }
            Err(_) => {}
        }
    }
    if let (Some(big_d), Some(g1)) = (cfg.big_d, cfg.descending.map(|p| p.0)) {
        let q4 = cfg.m / 4;
        if q4 > 0 {
            let mut target = set_of(n, &v.sets[1]);
            if l >= 2 {
                target.difference_with(&set_of(n, &v.sets[2]));
            }
            let q = CoverageQuery {
                graph: g,
                candidates: (0..n).collect(),
                target: &target,
                mode: Coverage::Open,
                base: g1 * big_d * cfg.m as f64 / 200.0,
                weights: Weights::Uniform(0.0),
                strict: true,
                lo: q4,
                hi: q4,
                prefix: None,
            };
            let verdict = search::find(&q, cfg.search.budget_for(q4, n), &cfg.search);
            mode = mode.meet(verdict.mode);
            if let Some(u) = verdict.witness {
                return Err(Fault {
                    property: "every ⌊m/4⌋-set sees γ1Dm/200 vertices of U_1 \\ U_2".into(),
                    level: 1,
                    witness: u,
                });
            }
        }
    }
    Ok(mode)
}

/// Uniformly random nested chain with the given sizes, verified and resampled
/// up to `max_retries` times. Attempt `a` draws from seed `seed + a`.
///
/// Under [`Policy::Audit`] the last sample is returned with its fault noted
/// once the retries run out.
pub fn sample_vortex(g: &Graph, sizes: &[usize], cfg: &VortexConfig, seed: u64) -> Result<Vortex> {
    check_tuple(g, sizes, cfg)?;
    let n = g.n();
    let mut last = None;
    for attempt in 0..=cfg.max_retries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut sets = vec![(0..n).collect::<Vec<usize>>()];
        for &k in &sizes[1..] {
            let mut next: Vec<usize> = sets.last().expect("U_0").choose_multiple(&mut rng, k).copied().collect();
            next.sort_unstable();
            sets.push(next);
        }
        let mut v = Vortex {
            sets,
            sizes: sizes.to_vec(),
            m: cfg.m,
            lambda: cfg.lambda,
            mode: CheckMode::Exact,
            attempts: attempt + 1,
            audit: Audit::default(),
        };
        if sizes.len() == 1 {
            return Ok(v);
        }
        let mut audit = Audit::default();
        let checked = validate_vortex(g, &v, &cfg.search)
            .and_then(|m1| extra_properties(g, &v, cfg, &mut audit).map(|m2| m1.meet(m2)));
        match checked {
            Ok(mode) => {
                v.mode = mode;
                v.audit = audit;
                return Ok(v);
            }
            Err(f) => {
                if attempt == cfg.max_retries && cfg.policy == Policy::Audit {
                    v.audit = audit;
                    v.audit.note(f.to_string());
                    v.mode = CheckMode::Sampled { trials: 0 };
                    return Ok(v);
                }
                last = Some(f)
            }
        }
    }
    Err(Error::RetriesExhausted {
        property: last.map(|f| f.to_string()).unwrap_or_default(),
    })
}

/// Disjoint `V_0 … V_ℓ` (vertex ids of the cleaned graph).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VortexPartition {
    pub parts: Vec<Vec<usize>>,
    pub sizes: Vec<usize>,
    pub lambda: f64,
    pub d: usize,
}

impl VortexPartition {
    /// Joinedness and extendability size `max(1, ⌊λ n_{i-1}⌋)` for the pair `(i-1, i)`.
    pub fn pair_size(&self, i: usize) -> usize {
        ((self.lambda * self.sizes[i - 1] as f64).floor() as usize).max(1)
    }
}

/// Check C1 (sizes), C2 (joined pairs) and C3 (extendable pairs).
pub fn validate_partition(
    g: &Graph,
    p: &VortexPartition,
    cfg: &SearchConfig,
) -> std::result::Result<CheckMode, Fault> {
    let n = g.n();
    let mut seen = VertexSet::new(n);
    for (i, part) in p.parts.iter().enumerate() {
        for &u in part {
            if u >= n || !seen.insert(u) {
                return Err(Fault {
                    property: "parts are disjoint vertex sets".into(),
                    level: i,
                    witness: vec![u],
                });
            }
        }
        let target = p.sizes[i] as f64;
        let size = part.len() as f64;
        if size < (1.0 - p.lambda) * target - 1e-9 || size > (1.0 + p.lambda) * target + 1e-9 {
            return Err(Fault {
                property: format!("C1: |V_{i}| = {} is within (1±λ){}", part.len(), p.sizes[i]),
                level: i,
                witness: vec![],
            });
        }
    }
    let mut mode = CheckMode::Exact;
    for i in 1..p.parts.len() {
        let mut pair: Vec<usize> = p.parts[i - 1].iter().chain(&p.parts[i]).copied().collect();
        pair.sort_unstable();
        let a = p.pair_size(i);
        let mask = set_of(n, &pair);
        if 2 * a <= pair.len() {
            match is_joined_within(g, &mask, a, a, cfg) {
                Ok(crate::graph::Joinedness::Joined { mode: jm }) => mode = mode.meet(jm),
                Ok(crate::graph::Joinedness::Witness { a: wa, .. }) => {
                    return Err(Fault {
                        property: format!("C2: G[V_{} ∪ V_{i}] is {a}-joined", i - 1),
                        level: i,
                        witness: wa,
                    })
                }
                Err(_) => {}
            }
        }
        let h = g.induced(&pair);
        let local: Vec<usize> = p.parts[i - 1]
            .iter()
            .map(|u| pair.binary_search(u).expect("in pair"))
            .collect();
        let mut ecfg = ExtendConfig::audit();
        ecfg.search = *cfg;
        let st = match ExtendableEmbedding::isolated(&h, p.d.max(3), a, &local, ecfg) {
            Ok(s) => s,
            Err(_) => continue,
        };
        match st.check() {
            ExtCheck::Extendable { mode: em } => mode = mode.meet(em),
            ExtCheck::Violated { u } => {
                return Err(Fault {
                    property: format!("C3: I(V_{}) is ({}, {a})-extendable", i - 1, p.d),
                    level: i,
                    witness: u.iter().map(|&x| pair[x]).collect(),
                })
            }
            ExtCheck::DegreeExceeded { vertex } => {
                return Err(Fault {
                    property: "C3: degree bound".into(),
                    level: i,
                    witness: vec![pair[vertex]],
                })
            }
        }
    }
    Ok(mode)
}

/// A vortex partition of `G[kept]`, relabelled so `kept[i] ↦ i`.
#[derive(Clone, Debug, Serialize)]
pub struct CleanedVortex {
    #[serde(skip)]
    pub graph: Graph,
    pub kept: Vec<usize>,
    pub partition: VortexPartition,
    /// The sampled chain, in original vertex ids.
    pub vortex: Vortex,
    /// Waste sets `W_1 … W_ℓ`, original ids.
    pub waste: Vec<Vec<usize>>,
    pub discarded: Vec<usize>,
    pub mode: CheckMode,
    pub audit: Audit,
}

/// Sample a vortex on the suffix sums of `sizes`, disjointify it, remove
/// waste sets of poorly expanding vertices level by level and finally a small
/// set `W_0` of vertices with few neighbours in `V_1`.
///
/// `sizes` must sum to `|G|`. Under [`Policy::Audit`] a failed C-property is
/// recorded instead of triggering a resample.
pub fn vortex_partition(g: &Graph, sizes: &[usize], cfg: &VortexConfig, seed: u64) -> Result<CleanedVortex> {
    let n = g.n();
    if sizes.iter().sum::<usize>() != n {
        return Err(Error::Parameter(format!("sizes must sum to |G| = {n}")));
    }
    let l = sizes.len() - 1;
    let mut suffix = vec![0; l + 1];
    for i in (0..=l).rev() {
        suffix[i] = sizes[i] + suffix.get(i + 1).copied().unwrap_or(0);
    }
    let mut vcfg = *cfg;
    vcfg.descending = None;
    let mut last = None;
    for attempt in 0..=cfg.max_retries {
        let s = seed.wrapping_add((attempt as u64) << 20);
        let v = sample_vortex(g, &suffix, &vcfg, s)?;
        match clean(g, sizes, v, cfg) {
            Ok(c) => return Ok(c),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn clean(g: &Graph, sizes: &[usize], v: Vortex, cfg: &VortexConfig) -> Result<CleanedVortex> {
    let n = g.n();
    let l = sizes.len() - 1;
    let m = cfg.m;
    let mut audit = v.audit.clone();
    let mut mode = v.mode;
    // V'_i = U_i \ U_{i+1}
    let sets: Vec<VertexSet> = v.sets.iter().map(|s| set_of(n, s)).collect();
    let mut raw: Vec<VertexSet> = (0..=l)
        .map(|i| if i < l { sets[i].difference(&sets[i + 1]) } else { sets[l].clone() })
        .collect();
    let mut waste = vec![VertexSet::new(n); l + 2];
    for j in (1..=l).rev() {
        let into = raw[j].difference(&waste[j + 1]);
        let mut local: Vec<usize> = raw[j - 1].union(&into).to_vec();
        local.sort_unstable();
        let h = g.induced(&local);
        let into_local = VertexSet::from_iter(
            local.len(),
            into.iter().map(|u| local.binary_search(&u).expect("in local")),
        );
        let n0 = ((2.0 * cfg.lambda * sizes[j - 1] as f64).ceil() as usize).max(1);
        let pr = prune_relative_expansion(&h, &into_local, m, n0, cfg.d as f64, Policy::Audit, &cfg.search);
        match pr {
            Ok(r) => {
                audit.extend(&r.audit);
                mode = mode.meet(r.mode);
                waste[j] = VertexSet::from_iter(n, r.w.iter().map(|&x| local[x]));
            }
            Err(Error::Contract { what, .. }) => {
                if cfg.policy == Policy::Enforce {
                    return Err(Error::RetriesExhausted { property: what });
                }
                audit.note(format!("cleaning level {j}: {what}"));
            }
            Err(e) => return Err(e),
        }
    }
    for j in 1..=l {
        let w = waste[j].union(&waste[j + 1]);
        raw[j].difference_with(&w);
    }
    // W_0: greedily collect fewer than m/2 vertices with few neighbours in V_1.
    let mut others = VertexSet::new(n);
    for part in &raw[1..] {
        others.union_with(part);
    }
    let candidates = others.complement();
    let (w0, wm) = if l >= 1 {
        grow_waste(g, &candidates, &raw[1], m.div_ceil(2), 10.0 * cfg.d as f64, &cfg.search)
    } else {
        (VertexSet::new(n), CheckMode::Exact)
    };
    mode = mode.meet(wm);
    let discarded = w0.to_vec();
    if discarded.len() * 4 >= m && !discarded.is_empty() {
        audit.note(format!("discarded {} >= m/4 vertices", discarded.len()));
    }
    let mut kept_set = VertexSet::full(n);
    kept_set.difference_with(&w0);
    let kept = kept_set.to_vec();
    let index = |u: usize| kept.binary_search(&u).expect("kept");
    let mut parts = vec![candidates.difference(&w0).iter().map(index).collect::<Vec<usize>>()];
    for part in &raw[1..] {
        parts.push(part.iter().map(index).collect());
    }
    let graph = g.induced(&kept);
    let partition = VortexPartition {
        parts,
        sizes: sizes.to_vec(),
        lambda: cfg.lambda,
        d: cfg.d,
    };
    match validate_partition(&graph, &partition, &cfg.search) {
        Ok(pm) => mode = mode.meet(pm),
        Err(f) => match cfg.policy {
            Policy::Enforce => return Err(Error::RetriesExhausted { property: f.to_string() }),
            Policy::Audit => audit.note(f.to_string()),
        },
    }
    Ok(CleanedVortex {
        graph,
        kept,
        partition,
        waste: waste[1..=l].iter().map(VertexSet::to_vec).collect(),
        vortex: v,
        discarded,
        mode,
        audit,
    })
}

/// Settings for [`embed_via_vortex`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexEmbedConfig {
    /// Extendability degree inside the stages; `None` means `max(3, Δ(T) + 1)`.
    pub d: Option<usize>,
    pub lambda: f64,
    pub big_k: usize,
    /// Extendability size `m` used inside the stages.
    pub ext_m: usize,
    /// Whole-pipeline retries with fresh seeds.
    pub retries: usize,
    /// Retries of each covering stage.
    pub cover_retries: usize,
    pub policy: Policy,
    pub search: SearchConfig,
    /// Node budget of the final-stage backtracking fallback.
    pub backtrack_budget: u64,
}

impl Default for VortexEmbedConfig {
    fn default() -> Self {
        VortexEmbedConfig {
            d: None,
            lambda: 0.05,
            big_k: 12,
            ext_m: 1,
            retries: 3,
            cover_retries: 3,
            policy: Policy::Audit,
            search: SearchConfig::fast(),
            backtrack_budget: 2_000_000,
        }
    }
}

impl VortexEmbedConfig {
    pub fn from_params(p: &ParamSet) -> Self {
        VortexEmbedConfig {
            lambda: p.lambda,
            big_k: p.big_k,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub tree_size: usize,
    pub host_size: usize,
    pub to_cover: usize,
    /// `covering`, `extendable` or `backtracking`.
    pub method: &'static str,
    /// Vertices of `V_{j-1}` left unused after the stage.
    pub uncovered: usize,
    pub spare: usize,
    pub cover_stats: Vec<StageStats>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VortexEmbedding {
    pub embedding: Embedding,
    pub cleaned: CleanedVortex,
    pub stages: Vec<StageReport>,
    pub attempts: usize,
    pub audit: Audit,
}

/// Embed `T` with `|T| <= |G| - m + 1` into `G`: decompose `T` into a
/// descending sequence, build a vortex partition with matching sizes and
/// embed piece `j` into `V_{j-1} ∪ V_j` so that it covers what is left of
/// `V_{j-1}`.
pub fn embed_via_vortex(g: &Graph, t: &Tree, m: usize, cfg: &VortexEmbedConfig, seed: u64) -> Result<VortexEmbedding> {
    let n = g.n();
    if m == 0 || t.n() + m - 1 > n {
        return Err(Error::Precondition(format!(
            "need |T| <= |G| - m + 1, got |T|={}, |G|={n}, m={m}",
            t.n()
        )));
    }
    let mut audit = Audit::default();
    audit.require(cfg.policy, t.n() + m - 1 == n, "|T| = |G| - m + 1")?;
    // Shrink m so that the size arithmetic is exact.
    let m = n + 1 - t.n();
    let mut last = None;
    for attempt in 0..=cfg.retries {
        let s = seed.wrapping_add((attempt as u64) << 32);
        match vortex_attempt(g, t, m, cfg, s) {
            Ok(mut r) => {
                r.attempts = attempt + 1;
                let mut a = audit.clone();
                a.extend(&r.audit);
                r.audit = a;
                return Ok(r);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Piece sizes `n'_j` to vortex sizes `n_j` (they sum to `|T| + m - 1`).
pub fn vortex_sizes(piece_sizes: &[usize], gamma2: f64, m: usize) -> Vec<usize> {
    let l = piece_sizes.len();
    let hi = |x: usize| ((1.0 - gamma2) * x as f64 - 1e-9).ceil() as usize;
    let lo = |x: usize| x - hi(x);
    let mut out = vec![hi(piece_sizes[0])];
    for j in 1..l {
        out.push(lo(piece_sizes[j - 1]) + hi(piece_sizes[j]));
    }
    out.push(lo(piece_sizes[l - 1]) + m - 1);
    out
}

fn vortex_attempt(g: &Graph, t: &Tree, m: usize, cfg: &VortexEmbedConfig, seed: u64) -> Result<VortexEmbedding> {
    let delta = t.max_degree().max(1);
    let d = cfg.d.unwrap_or(delta + 1).max(delta).max(3);
    let mut audit = Audit::default();
    let (dec, gamma) = plan_pieces(t, m, d, cfg, &mut audit);
    let gamma2 = 2.0 * gamma;
    let l = dec.subtrees.len();
    let sizes = vortex_sizes(&dec.sizes, gamma2, m);
    let mut vcfg = VortexConfig::new(m, cfg.lambda);
    vcfg.d = d;
    vcfg.policy = cfg.policy;
    vcfg.search = cfg.search;
    vcfg.max_retries = 2;
    let cleaned = vortex_partition(g, &sizes, &vcfg, seed)?;
    audit.extend(&cleaned.audit);
    let h = &cleaned.graph;
    let hn = h.n();
    let parts = &cleaned.partition.parts;
    let mut emb = Embedding::new(t.n(), hn);
    let mut stages = Vec::new();
    // t_0: a leaf of T_1 other than the first link.
    let t1_leaf = {
        let first = &dec.subtrees[0];
        let sub = t.induced(first)?;
        let link = dec.links.first().copied();
        sub.leaves()
            .into_iter()
            .map(|z| first[z])
            .find(|&z| Some(z) != link)
            .unwrap_or(first[0])
    };
    let mut anchor_t = t1_leaf;
    let mut anchor_v = *parts[0].first().ok_or_else(|| Error::StageFailure {
        stage: 1,
        detail: "V_0 is empty".into(),
    })?;
    for j in 1..=l {
        let piece_vertices = &dec.subtrees[j - 1];
        let piece = t.induced(piece_vertices)?;
        let root = piece_vertices.iter().position(|&z| z == anchor_t).expect("anchor in piece");
        let used = emb.used().clone();
        let x: Vec<usize> = parts[j - 1].iter().copied().filter(|&u| !used.contains(u) && u != anchor_v).collect();
        let mut local: Vec<usize> = x.iter().copied().chain([anchor_v]).chain(parts[j].iter().copied()).collect();
        local.sort_unstable();
        let lh = h.induced(&local);
        let li = |u: usize| local.binary_search(&u).expect("local vertex");
        let lx: Vec<usize> = x.iter().map(|&u| li(u)).collect();
        let spare = local.len() - piece.n();
        let mut report = StageReport {
            stage: j,
            tree_size: piece.n(),
            host_size: local.len(),
            to_cover: x.len(),
            method: "covering",
            uncovered: 0,
            spare,
            cover_stats: vec![],
        };
        let stage_err = |detail: String| Error::StageFailure { stage: j, detail };
        let local_emb = if j < l {
            let next = dec.links[j - 1];
            let ex = piece_vertices.iter().position(|&z| z == next).expect("link in piece");
            let mut ecfg = ExtendConfig::audit();
            ecfg.search = cfg.search;
            ecfg.joined_m2 = cfg.ext_m;
            let mut task = CoverTask::new(&lh, lx.clone(), li(anchor_v), &piece, root, d, cfg.ext_m, gamma, ecfg)
                .map_err(|e| stage_err(e.to_string()))?;
            task.t_excluded = Some(ex);
            let rep = embed_covering(&task).map_err(|e| stage_err(e.to_string()))?;
            audit.extend(&rep.audit);
            report.cover_stats = rep.stages;
            rep.embedding
        } else {
            // |G'| - |T| = m - 1 - |W_0| vertices stay unused.
            let expect = (m - 1).saturating_sub(cleaned.discarded.len());
            if spare != expect {
                return Err(stage_err(format!("{spare} spare vertices before the final stage, expected {expect}")));
            }
            if 2 * spare < m {
                audit.note(format!("final stage has {spare} < m/2 spare vertices"));
            }
            let (e, method) = final_stage(&lh, &piece, root, li(anchor_v), &lx, d, cfg, seed)?;
            report.method = method;
            e
        };
        local_emb.validate_complete(&piece, &lh).map_err(|e| stage_err(format!("F4: {e}")))?;
        for (z, y) in local_emb.pairs() {
            let tz = piece_vertices[z];
            let hy = local[y];
            if tz == anchor_t {
                if hy != anchor_v {
                    return Err(stage_err("F1: anchor moved".into()));
                }
                continue;
            }
            emb.set(tz, hy).map_err(|e| stage_err(format!("F4: {e}")))?;
        }
        if j == 1 {
            emb.set(anchor_t, anchor_v).map_err(|e| stage_err(e.to_string()))?;
        }
        report.uncovered = parts[j - 1].iter().filter(|&&u| !emb.used().contains(u)).count();
        if j < l {
            // F2: V_{j-1} is used up; F1: the next anchor lies in V_j.
            if report.uncovered > 0 {
                return Err(stage_err(format!("F2: {} vertices of V_{} uncovered", report.uncovered, j - 1)));
            }
            let next = dec.links[j - 1];
            let v_next = emb.get(next).expect("link embedded");
            if parts[j].binary_search(&v_next).is_err() {
                return Err(stage_err(format!("F1: link image {v_next} outside V_{j}")));
            }
            anchor_t = next;
            anchor_v = v_next;
        }
        // F3: nothing beyond V_j is touched.
        if let Some(u) = parts[j + 1..].iter().flatten().find(|&&u| emb.used().contains(u)) {
            return Err(stage_err(format!("F3: later part vertex {u} used")));
        }
        stages.push(report);
    }
    emb.validate_complete(t, h).map_err(|e| Error::Contract {
        what: e,
        witness: vec![],
    })?;
    let embedding = emb.lift(&cleaned.kept, g.n())?;
    Ok(VortexEmbedding {
        embedding,
        cleaned,
        stages,
        attempts: 1,
        audit,
    })
}

/// Descending decomposition with `γ = 1/10Δ`, the root chosen to make the
/// last piece largest. The last piece becomes the reservoir of free vertices
/// during the stage before it; when it is too small for extendability, `γ`
/// is raised (up to just below `1/10`) and the change is noted.
fn plan_pieces(t: &Tree, m: usize, d: usize, cfg: &VortexEmbedConfig, audit: &mut Audit) -> (TreeDecomposition, f64) {
    let delta = t.max_degree().max(1);
    let base = 1.0 / (10.0 * delta as f64);
    let reservoir = 2 * (2 * d + 4) * cfg.ext_m;
    let step = (t.n() / 32).max(1);
    let mut best: Option<(TreeDecomposition, f64, usize)> = None;
    let mut gamma = base;
    while gamma < 0.1 {
        let floor_n = (delta as f64 / gamma).ceil() as usize;
        let big_n = (cfg.big_k * m).max(floor_n);
        let dec = (0..t.n())
            .step_by(step)
            .filter_map(|r| descending_decomposition(t, gamma, big_n, r).ok())
            .max_by_key(|d| *d.sizes.last().expect("non-empty"));
        if let Some(dec) = dec {
            let last = *dec.sizes.last().expect("non-empty");
            let free = ((1.0 - 2.0 * gamma) * last as f64) as usize;
            if best.as_ref().is_none_or(|b| free > b.2) {
                best = Some((dec, gamma, free));
            }
            if free >= reservoir {
                break;
            }
        }
        gamma = (gamma * 1.5).min(0.099).max(gamma + 1e-6);
        if gamma >= 0.099 && best.as_ref().is_some_and(|b| b.1 >= 0.099) {
            break;
        }
    }
    match best {
        Some((dec, g, _)) => {
            if g > base {
                audit.note(format!("decomposition γ raised to {g:.4} to keep a reservoir"));
            }
            (dec, g)
        }
        None => {
            audit.note("tree too small to decompose; single piece");
            let dec = TreeDecomposition {
                subtrees: vec![(0..t.n()).collect()],
                links: vec![],
                sizes: vec![t.n()],
            };
            (dec, base)
        }
    }
}

/// Last piece: an extendable embedding preferring `x`, falling back to
/// backtracking over non-leaves with a matching for the leaves.
fn final_stage(
    h: &Graph,
    tree: &Tree,
    root: usize,
    anchor: usize,
    x: &[usize],
    d: usize,
    cfg: &VortexEmbedConfig,
    seed: u64,
) -> Result<(Embedding, &'static str)> {
    let mut ecfg = ExtendConfig::audit();
    ecfg.search = cfg.search;
    ecfg.joined_m2 = cfg.ext_m;
    ecfg.order = OrderKind::Shuffled(seed);
    if let Ok(mut st) = ExtendableEmbedding::isolated(h, d, cfg.ext_m, &[anchor], ecfg) {
        let mut open = VertexSet::from_iter(h.n(), x.iter().copied());
        for u in open.iter() {
            let _ = st.pin(u);
        }
        let mut stats = StageStats {
            piece: 0,
            tree_size: tree.n(),
            residual: 0,
            bound: 0.0,
            good: 0,
            neutral: 0,
            repairs: 0,
        };
        if st.is_extendable() {
            if let Ok(e) = grow(&mut st, tree, root, anchor, &mut open, &mut stats) {
                return Ok((e, "extendable"));
            }
        }
    }
    let prefer = VertexSet::from_iter(h.n(), x.iter().copied());
    match backtrack_embed(h, tree, root, anchor, &prefer, cfg.backtrack_budget) {
        Some(e) => Ok((e, "backtracking")),
        None => Err(Error::StageFailure {
            stage: 0,
            detail: "final stage: backtracking found no embedding within budget".into(),
        }),
    }
}

/// Depth-first placement of the non-leaf vertices of `tree` (root at
/// `anchor`), then a bipartite matching for the leaves. Vertices in `prefer`
/// are tried first. `None` when the budget runs out or no embedding exists.
pub fn backtrack_embed(
    h: &Graph,
    tree: &Tree,
    root: usize,
    anchor: usize,
    prefer: &VertexSet,
    budget: u64,
) -> Option<Embedding> {
    let n = tree.n();
    if n == 1 {
        return Embedding::from_pairs(1, h.n(), &[(root, anchor)]).ok();
    }
    let order = traversal_order(tree, root, OrderKind::Bfs).ok()?;
    let parents = tree.parents_from(root);
    let is_leaf = |z: usize| z != root && tree.is_leaf(z);
    let inner: Vec<usize> = order.iter().copied().filter(|&z| !is_leaf(z)).collect();
    let leaves: Vec<usize> = order.iter().copied().filter(|&z| is_leaf(z)).collect();
    let mut emb = Embedding::new(n, h.n());
    emb.set(root, anchor).ok()?;
    let mut nodes = 0u64;
    let mut bt = Backtrack {
        h,
        parents: &parents,
        inner: &inner,
        leaves: &leaves,
        prefer,
        nodes: &mut nodes,
        budget,
    };
    if bt.place(1, &mut emb) {
        Some(emb)
    } else {
        None
    }
}

struct Backtrack<'a> {
    h: &'a Graph,
    parents: &'a [Option<usize>],
    inner: &'a [usize],
    leaves: &'a [usize],
    prefer: &'a VertexSet,
    nodes: &'a mut u64,
    budget: u64,
}

impl Backtrack<'_> {
    fn place(&mut self, i: usize, emb: &mut Embedding) -> bool {
        *self.nodes += 1;
        if *self.nodes > self.budget {
            return false;
        }
        if i == self.inner.len() {
            return self.match_leaves(emb);
        }
        let z = self.inner[i];
        let p = emb.get(self.parents[z].expect("non-root")).expect("parent placed");
        let free = self.h.row(p).difference(emb.used());
        let first = free.intersection(self.prefer);
        let rest = free.difference(self.prefer);
        for c in first.iter().chain(rest.iter()) {
            emb.set(z, c).expect("free vertex");
            if self.place(i + 1, emb) {
                return true;
            }
            emb.unset(z);
            if *self.nodes > self.budget {
                return false;
            }
        }
        false
    }

    fn match_leaves(&self, emb: &mut Embedding) -> bool {
        let k = self.leaves.len();
        if k == 0 {
            return true;
        }
        let free: Vec<usize> = emb.used().complement().to_vec();
        let total = k + free.len();
        let mut edges = Vec::new();
        for (a, &z) in self.leaves.iter().enumerate() {
            let p = emb.get(self.parents[z].expect("leaf has parent")).expect("placed");
            for (b, &y) in free.iter().enumerate() {
                if self.h.has_edge(p, y) {
                    edges.push((a, k + b));
                }
            }
        }
        let bg = Graph::from_edges(total, &edges).expect("bipartite graph");
        let a = VertexSet::from_iter(total, 0..k);
        let b = VertexSet::from_iter(total, k..total);
        match hall_matching(&a, &b, &bg) {
            Ok(HallOutcome::Matching { pairs }) => {
                for (x, y) in pairs {
                    emb.set(self.leaves[x], free[y - k]).expect("matched to a free vertex");
                }
                true
            }
            _ => false,
        }
    }
}

/// JSON for `--vortex-dump`: the nested sets and the partition.
pub fn dump_json(c: &CleanedVortex) -> String {
    serde_json::to_string_pretty(c).expect("plain data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gnp(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    e.push((a, b));
                }
            }
        }
        Graph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn tuple_checks() {
        let g = Graph::complete(10);
        let cfg = VortexConfig::new(2, 0.1);
        assert!(matches!(sample_vortex(&g, &[10, 4, 6], &cfg, 0), Err(Error::Parameter(_))));
        assert!(matches!(sample_vortex(&g, &[9, 4], &cfg, 0), Err(Error::Parameter(_))));
        let v = sample_vortex(&g, &[10], &cfg, 0).unwrap();
        assert_eq!(v.sets, vec![(0..10).collect::<Vec<_>>()]);
        let mut dcfg = cfg;
        dcfg.descending = Some((0.1, 0.5));
        assert!(matches!(sample_vortex(&g, &[10, 8], &dcfg, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn vortex_on_dense_host() {
        let g = gnp(3000, 0.5, 3);
        let mut cfg = VortexConfig::new(6, 0.15);
        cfg.search = SearchConfig::fast();
        let v = sample_vortex(&g, &[3000, 600, 150], &cfg, 0).unwrap();
        assert!(v.audit.failed.iter().any(|f| f.contains("λm < 1")));
        assert!(v.attempts <= 6);
        validate_vortex(&g, &v, &SearchConfig::fast()).unwrap();
        assert!(v.sets[2].iter().all(|u| v.sets[1].binary_search(u).is_ok()));
        // A star cannot capture anything with its leaves.
        let star = Graph::complete_bipartite(1, 30);
        let cfg = VortexConfig::new(2, 0.1);
        assert!(matches!(
            sample_vortex(&star, &[31, 10], &cfg, 0),
            Err(Error::RetriesExhausted { .. })
        ));
    }

    #[test]
    fn partition_validator() {
        let g = Graph::complete(30);
        let p = VortexPartition {
            parts: vec![(0..20).collect(), (20..30).collect()],
            sizes: vec![20, 10],
            lambda: 0.05,
            d: 3,
        };
        validate_partition(&g, &p, &SearchConfig::default()).unwrap();
        let bad = VortexPartition {
            sizes: vec![20, 14],
            ..p.clone()
        };
        assert!(validate_partition(&g, &bad, &SearchConfig::default()).unwrap_err().property.starts_with("C1"));
        let two = Graph::disjoint_cliques(&[15, 15]);
        let e = validate_partition(&two, &p, &SearchConfig::default()).unwrap_err();
        assert!(e.property.starts_with("C2"), "{e}");
    }

    #[test]
    fn cleaned_partition() {
        let g = gnp(400, 0.5, 5);
        let mut cfg = VortexConfig::new(4, 0.15);
        cfg.policy = Policy::Audit;
        cfg.search = SearchConfig::fast();
        let c = vortex_partition(&g, &[340, 50, 10], &cfg, 1).unwrap();
        assert!(2 * c.discarded.len() < 4);
        if !c.discarded.is_empty() {
            assert!(c.audit.failed.iter().any(|f| f.contains("discarded")));
        }
        assert_eq!(c.kept.len() + c.discarded.len(), 400);
        let parts = &c.partition.parts;
        assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), c.kept.len());
        // Waste sets never reappear in later parts.
        for (j, w) in c.waste.iter().enumerate() {
            for &u in w {
                let local = c.kept.binary_search(&u).unwrap();
                assert!(!parts[j + 1].contains(&local));
            }
        }
        let again = vortex_partition(&g, &[340, 50, 10], &cfg, 1).unwrap();
        assert_eq!(dump_json(&c), dump_json(&again));
    }

    #[test]
    fn sizes_arithmetic() {
        let s = vortex_sizes(&[100, 20, 5], 0.1, 4);
        assert_eq!(s.iter().sum::<usize>(), 125 + 3);
        assert_eq!(s[0], 90);
    }

    #[test]
    fn backtracking_fallback() {
        let g = Graph::complete(6);
        let t = Tree::star(5);
        let e = backtrack_embed(&g, &t, 0, 2, &VertexSet::new(6), 1000).unwrap();
        e.validate_complete(&t, &g).unwrap();
        let p = Graph::path(6);
        assert!(backtrack_embed(&p, &t, 0, 0, &VertexSet::new(6), 1000).is_none());
        let sp = Tree::spider(2, 2);
        let e = backtrack_embed(&p, &sp, 0, 2, &VertexSet::new(6), 1000).unwrap();
        e.validate_complete(&sp, &p).unwrap();
    }

    #[test]
    fn vortex_embedding_end_to_end() {
        let g = gnp(2000, 0.5, 11);
        let m = 8;
        let t = Tree::random(2000 - m + 1, 3, 2).unwrap();
        let cfg = VortexEmbedConfig::default();
        let r = embed_via_vortex(&g, &t, m, &cfg, 0).unwrap();
        r.embedding.validate_complete(&t, &g).unwrap();
        assert!(r.stages.len() >= 2);
        for s in &r.stages[..r.stages.len() - 1] {
            assert_eq!(s.uncovered, 0);
        }
        let one = Tree::random(2000, 3, 2).unwrap();
        let r = embed_via_vortex(&g, &one, 1, &cfg, 0).unwrap();
        r.embedding.validate_complete(&one, &g).unwrap();
        assert_eq!(r.stages.last().unwrap().spare, 0);
    }
}
