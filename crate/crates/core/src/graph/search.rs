//! Budgeted branch-and-bound over small vertex sets with a coverage deficit.
//!
//! Every set property used in the crate (joinedness, expansion, extendability,
//! relative expansion) has the shape "no set `U` of size in `lo..=hi` has
//! coverage below `base + sum of weights over U`", where coverage counts the
//! vertices of a target set hit by the neighbourhood of `U`. This module
//! searches for a violating `U` exactly within a node budget and falls back
//! to a seeded spot check when the budget runs out.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::params::{CheckMode, SearchConfig, EPS};
use crate::vertex_set::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// `N'(U)`, the union of neighbourhoods.
    Raw,
    /// `N'(U) \ U`.
    Open,
    /// `N'(U) ∪ U`.
    Closed,
}

#[derive(Clone, Copy, Debug)]
pub enum Weights<'a> {
    Uniform(f64),
    /// Indexed by host vertex.
    PerVertex(&'a [f64]),
}

impl Weights<'_> {
    fn get(&self, v: usize) -> f64 {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerVertex(ws) => ws[v],
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoverageQuery<'a> {
    pub graph: &'a Graph,
    /// Vertices `U` may be drawn from; sorted ascending.
    pub candidates: Vec<usize>,
    pub target: &'a VertexSet,
    pub mode: Coverage,
    pub base: f64,
    pub weights: Weights<'a>,
    /// Violation means `coverage < threshold` when strict, `<=` otherwise.
    pub strict: bool,
    pub lo: usize,
    pub hi: usize,
    /// Vertices that are always part of the set but are not reported.
    pub prefix: Option<&'a VertexSet>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Found(Vec<usize>),
    Absent,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub witness: Option<Vec<usize>>,
    pub mode: CheckMode,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

impl<'a> CoverageQuery<'a> {
    fn violates(&self, cov: f64, thr: f64) -> bool {
        if self.strict {
            cov + EPS < thr
        } else {
            cov <= thr + EPS
        }
    }

    /// Coverage and threshold of `prefix ∪ set`, computed from scratch.
    pub fn evaluate(&self, set: &[usize]) -> (f64, f64) {
        let n = self.graph.n();
        let mut all = self.prefix.cloned().unwrap_or_else(|| VertexSet::new(n));
        for &u in set {
            all.insert(u);
        }
        let mut uni = VertexSet::new(n);
        let mut thr = self.base;
        for u in all.iter() {
            uni.union_with(self.graph.row(u));
            thr += self.weights.get(u);
        }
        match self.mode {
            Coverage::Raw => {}
            Coverage::Open => uni.difference_with(&all),
            Coverage::Closed => uni.union_with(&all),
        }
        (uni.intersection_len(self.target) as f64, thr)
    }

    pub fn is_violating(&self, set: &[usize]) -> bool {
        let (c, t) = self.evaluate(set);
        self.violates(c, t)
    }
}

struct Dfs<'q, 'a> {
    q: &'q CoverageQuery<'a>,
    cand: Vec<usize>,
    w: Vec<f64>,
    suffix_wmax: Vec<f64>,
    layers: Vec<Vec<u64>>,
    members: Vec<u64>,
    chosen: Vec<usize>,
    thr: Vec<f64>,
    nodes: u64,
    budget: u64,
}

impl Dfs<'_, '_> {
    fn coverage(&self, depth: usize) -> f64 {
        let uni = &self.layers[depth];
        let t = self.q.target.words();
        let c: u32 = match self.q.mode {
            Coverage::Raw => uni.iter().zip(t).map(|(a, b)| (a & b).count_ones()).sum(),
            Coverage::Open => uni
                .iter()
                .zip(t)
                .zip(&self.members)
                .map(|((a, b), c)| (a & b & !c).count_ones())
                .sum(),
            Coverage::Closed => uni
                .iter()
                .zip(t)
                .zip(&self.members)
                .map(|((a, b), c)| ((a | c) & b).count_ones())
                .sum(),
        };
        c as f64
    }

    /// `Some(true)` when a violating set of exactly `size` extra vertices was found.
    fn run(&mut self, start: usize, size: usize) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        let depth = self.chosen.len();
        let cov = self.coverage(depth);
        let thr = self.thr[depth];
        if depth == size {
            return Some(self.q.violates(cov, thr));
        }
        let r = size - depth;
        if self.cand.len() - start < r {
            return Some(false);
        }
        let open = if self.q.mode == Coverage::Open { r as f64 } else { 0.0 };
        let cov_lb = cov - open;
        let thr_ub = thr + r as f64 * self.suffix_wmax[start];
        let hopeless = if self.q.strict {
            cov_lb + EPS >= thr_ub
        } else {
            cov_lb > thr_ub + EPS
        };
        if hopeless {
            return Some(false);
        }
        for i in start..=self.cand.len() - r {
            let u = self.cand[i];
            let (lower, upper) = self.layers.split_at_mut(depth + 1);
            let next = &mut upper[0];
            next.copy_from_slice(&lower[depth]);
            for (a, b) in next.iter_mut().zip(self.q.graph.row(u).words()) {
                *a |= b;
            }
            self.thr[depth + 1] = thr + self.w[i];
            self.members[u >> 6] |= 1 << (u & 63);
            self.chosen.push(u);
            let res = self.run(i + 1, size);
            if res != Some(false) {
                return res;
            }
            self.chosen.pop();
            self.members[u >> 6] &= !(1 << (u & 63));
        }
        Some(false)
    }
}

fn prefix_state(q: &CoverageQuery<'_>) -> (VertexSet, VertexSet, f64) {
    let n = q.graph.n();
    let pre = q.prefix.cloned().unwrap_or_else(|| VertexSet::new(n));
    let mut uni = VertexSet::new(n);
    let mut thr = q.base;
    for u in pre.iter() {
        uni.union_with(q.graph.row(u));
        thr += q.weights.get(u);
    }
    (pre, uni, thr)
}

/// Drop candidates that cannot belong to any violating set.
fn filtered_candidates(q: &CoverageQuery<'_>, pre_uni: &VertexSet, pre: &VertexSet) -> Vec<usize> {
    let hi = q.hi as f64;
    let wmax = q
        .candidates
        .iter()
        .map(|&u| q.weights.get(u))
        .fold(0.0f64, f64::max);
    let base = q.base
        + pre.iter().map(|u| q.weights.get(u)).sum::<f64>()
        + hi * wmax;
    q.candidates
        .iter()
        .copied()
        .filter(|&u| !pre.contains(u))
        .filter(|&u| {
            let mut r = q.graph.row(u).union(pre_uni);
            if q.mode == Coverage::Closed {
                r.insert(u);
            }
            let mut c = r.intersection_len(q.target) as f64;
            if q.mode == Coverage::Open {
                c -= hi + pre.len() as f64;
            }
            if q.strict {
                c + EPS < base
            } else {
                c <= base + EPS
            }
        })
        .collect()
}

/// Exact search for the (size, lexicographically) least violating set.
pub fn exact(q: &CoverageQuery<'_>, budget: u64) -> Outcome {
    let n = q.graph.n();
    if q.hi == 0 || q.lo > q.hi {
        return Outcome::Absent;
    }
    let (pre, pre_uni, pre_thr) = prefix_state(q);
    let cand = filtered_candidates(q, &pre_uni, &pre);
    let w: Vec<f64> = cand.iter().map(|&u| q.weights.get(u)).collect();
    let mut suffix_wmax = vec![0.0f64; cand.len() + 1];
    for i in (0..cand.len()).rev() {
        suffix_wmax[i] = suffix_wmax[i + 1].max(w[i]);
    }
    let words = n.div_ceil(64);
    let mut layers = vec![vec![0u64; words]; q.hi + 1];
    layers[0].copy_from_slice(pre_uni.words());
    let mut dfs = Dfs {
        q,
        cand,
        w,
        suffix_wmax,
        layers,
        members: pre.words().to_vec(),
        chosen: Vec::with_capacity(q.hi),
        thr: vec![pre_thr; q.hi + 1],
        nodes: 0,
        budget,
    };
    for size in q.lo.max(1)..=q.hi {
        if dfs.cand.len() < size {
            break;
        }
        match dfs.run(0, size) {
            Some(true) => {
                let mut s = dfs.chosen.clone();
                s.sort_unstable();
                return Outcome::Found(s);
            }
            Some(false) => {}
            None => return Outcome::Exhausted,
        }
    }
    Outcome::Absent
}

/// Seeded spot check: greedy adversarial growth plus uniformly random sets.
pub fn sampled(q: &CoverageQuery<'_>, trials: usize, seed: u64) -> Option<Vec<usize>> {
    if q.hi == 0 || q.candidates.is_empty() {
        return None;
    }
    let (pre, pre_uni, _) = prefix_state(q);
    let cand: Vec<usize> = q.candidates.iter().copied().filter(|&u| !pre.contains(u)).collect();
    if cand.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let lo = q.lo.max(1);
    let hi = q.hi.min(cand.len());
    if lo > hi {
        return None;
    }
    // Greedy starts at the vertices with the smallest own coverage.
    let mut by_cov: Vec<(usize, usize)> = cand
        .iter()
        .map(|&u| (q.graph.row(u).union(&pre_uni).intersection_len(q.target), u))
        .collect();
    by_cov.sort_unstable();
    let starts = (trials / 4).clamp(1, 16).min(by_cov.len());
    for &(_, s) in by_cov.iter().take(starts) {
        let mut set = vec![s];
        loop {
            if set.len() >= lo && q.is_violating(&set) {
                set.sort_unstable();
                return Some(set);
            }
            if set.len() >= hi {
                break;
            }
            let mut best: Option<(f64, usize)> = None;
            for &u in &cand {
                if set.contains(&u) {
                    continue;
                }
                set.push(u);
                let (c, t) = q.evaluate(&set);
                set.pop();
                let slack = c - t;
                if best.is_none_or(|(b, _)| slack < b) {
                    best = Some((slack, u));
                }
            }
            match best {
                Some((_, u)) => set.push(u),
                None => break,
            }
        }
    }
    for _ in 0..trials {
        let size = rng.gen_range(lo..=hi);
        let mut set: Vec<usize> = cand.choose_multiple(&mut rng, size).copied().collect();
        if q.is_violating(&set) {
            set.sort_unstable();
            return Some(set);
        }
    }
    None
}

/// Exact search within `budget`, then the spot check if the budget ran out.
pub fn find(q: &CoverageQuery<'_>, budget: u64, cfg: &SearchConfig) -> Verdict {
    match exact(q, budget) {
        Outcome::Found(w) => Verdict {
            witness: Some(w),
            mode: CheckMode::Exact,
        },
        Outcome::Absent => Verdict {
            witness: None,
            mode: CheckMode::Exact,
        },
        Outcome::Exhausted => Verdict {
            witness: sampled(q, cfg.sample_trials, cfg.seed),
            mode: CheckMode::Sampled {
                trials: cfg.sample_trials,
            },
        },
    }
}
