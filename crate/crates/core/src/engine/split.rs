//! Hosts with a sparse cut `V_0 ∪ V_1 ∪ V_2`: no edges between `V_1` and
//! `V_2`, both of size at least `m`, and a small separator `V_0`.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::CertificateKind;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::extend::{ExtendConfig, ExtendableEmbedding};
use crate::graph::{prune_to_expander, Graph};
use crate::params::{Audit, Policy, SearchConfig};
use crate::tree::{split_tree, Tree};
use crate::vertex_set::VertexSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SparseCut {
    pub v0: Vec<usize>,
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
}

impl SparseCut {
    pub fn validate(&self, g: &Graph, m: usize, cap: usize) -> std::result::Result<(), String> {
        let n = g.n();
        let mut seen = VertexSet::new(n);
        for &v in self.v0.iter().chain(&self.v1).chain(&self.v2) {
            if v >= n || !seen.insert(v) {
                return Err(format!("vertex {v} repeated or out of range"));
            }
        }
        if seen.len() != n {
            return Err("parts do not cover the host".into());
        }
        if self.v1.len() < m || self.v2.len() < m || self.v0.len() > cap {
            return Err(format!(
                "part sizes {}/{}/{} violate m={m}, cap={cap}",
                self.v0.len(),
                self.v1.len(),
                self.v2.len()
            ));
        }
        let s2 = VertexSet::from_iter(n, self.v2.iter().copied());
        for &u in &self.v1 {
            if let Some(w) = g.neighbours(u).iter().find(|&&w| s2.contains(w)) {
                return Err(format!("edge {u}-{w} crosses the cut"));
            }
        }
        Ok(())
    }
}

fn components(g: &Graph, within: &VertexSet) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut seen = VertexSet::new(n);
    let mut out = Vec::new();
    for s in within.iter() {
        if seen.contains(s) {
            continue;
        }
        seen.insert(s);
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in g.neighbours(u) {
                if within.contains(w) && seen.insert(w) {
                    comp.push(w);
                    q.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Group components into two sides of size at least `m`.
fn split_components(comps: &[Vec<usize>], m: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    if comps.len() < 2 {
        return None;
    }
    let total: usize = comps.iter().map(Vec::len).sum();
    let mut order: Vec<&Vec<usize>> = comps.iter().collect();
    order.sort_by_key(|c| (c.len(), c[0]));
    let mut a = Vec::new();
    let mut i = 0;
    while a.len() < m && i + 1 < order.len() {
        a.extend_from_slice(order[i]);
        i += 1;
    }
    if a.len() < m || total - a.len() < m {
        return None;
    }
    let mut b: Vec<usize> = order[i..].iter().flat_map(|c| c.iter().copied()).collect();
    a.sort_unstable();
    b.sort_unstable();
    Some((a, b))
}

/// Look for a sparse cut with `|V_0| <= cap`: components first, then
/// breadth-first layers around seeded starting sets, taking one layer as
/// the separator. `None` means none was found, not that none exists.
pub fn find_sparse_cut(g: &Graph, m: usize, cap: usize, seed: u64, probes: usize) -> Option<SparseCut> {
    let n = g.n();
    if m == 0 || 2 * m > n {
        return None;
    }
    let all = g.all_vertices();
    if let Some((v1, v2)) = split_components(&components(g, &all), m) {
        return Some(SparseCut { v0: vec![], v1, v2 });
    }
    if cap == 0 {
        return None;
    }
    let mut starts: Vec<Vec<usize>> = Vec::new();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (g.degree(v), v));
    starts.push(by_degree[..m].to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        starts.push(by_degree.choose_multiple(&mut rng, m).copied().collect());
    }
    // Single vertices: every one on small hosts, a sample otherwise.
    if n <= 64 {
        starts.extend(by_degree.iter().map(|&v| vec![v]));
    } else {
        starts.extend(by_degree.choose_multiple(&mut rng, probes).map(|&v| vec![v]));
    }
    for s in starts {
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        for &v in &s {
            dist[v] = 0;
            q.push_back(v);
        }
        while let Some(u) = q.pop_front() {
            for &w in g.neighbours(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        let far = dist.iter().filter(|&&d| d != usize::MAX).max().copied().unwrap_or(0);
        for r in 1..=far {
            let v0: Vec<usize> = (0..n).filter(|&v| dist[v] == r).collect();
            if v0.len() > cap {
                continue;
            }
            let v1: Vec<usize> = (0..n).filter(|&v| dist[v] < r).collect();
            let v2: Vec<usize> = (0..n).filter(|&v| dist[v] > r).collect();
            if v1.len() >= m && v2.len() >= m {
                return Some(SparseCut { v0, v1, v2 });
            }
        }
    }
    None
}

/// Recursive call into the solver on a vertex subset (ids of the current
/// host): `(scope, k, s, m)` to a certificate in those ids, or `None` when
/// the call was inconclusive.
pub type Induction<'a> = dyn FnMut(&[usize], usize, usize, usize) -> Result<Option<CertificateKind>> + 'a;

/// Case I: a bridge vertex with `Δ` neighbours on both pruned sides joins two
/// extendable embeddings. Case II: recursion on both sides, then the class
/// surgery that merges the two witnesses.
#[allow(clippy::too_many_arguments)]
pub fn split_disconnected(
    g: &Graph,
    t: &Tree,
    k: usize,
    s: usize,
    m: usize,
    cut: &SparseCut,
    induction: &mut Induction<'_>,
    cfg: &SearchConfig,
) -> Result<(CertificateKind, Audit)> {
    let n = t.n();
    let hn = g.n();
    let mut audit = Audit::default();
    let delta = t.max_degree().max(1);
    let d = (4 * delta).max(3);
    let mut sides = Vec::new();
    for part in [&cut.v1, &cut.v2] {
        let sub = g.induced(part);
        let n0 = sub.n().saturating_sub(n).max(1);
        let w = match prune_to_expander(&sub, m, n0, (2 * d) as f64, Policy::Audit, cfg) {
            Ok(p) => {
                audit.extend(&p.audit);
                p.w
            }
            Err(e) => {
                audit.note(format!("side pruning skipped: {e}"));
                Vec::new()
            }
        };
        let kept: Vec<usize> = (0..part.len()).filter(|i| w.binary_search(i).is_err()).map(|i| part[i]).collect();
        sides.push(kept);
    }
    let s1 = VertexSet::from_iter(hn, sides[0].iter().copied());
    let s2 = VertexSet::from_iter(hn, sides[1].iter().copied());
    let rest: Vec<usize> = (0..hn).filter(|&v| !s1.contains(v) && !s2.contains(v)).collect();
    let bridge = rest
        .iter()
        .copied()
        .find(|&v| g.row(v).intersection_len(&s1) >= delta && g.row(v).intersection_len(&s2) >= delta);
    if let Some(v) = bridge {
        match bridge_embed(g, t, v, &sides, d, m) {
            Ok(e) => {
                return Ok((CertificateKind::RedTree { map: e.pairs() }, audit));
            }
            Err(e) => audit.note(format!("bridge at {v} did not embed: {e}")),
        }
    }
    // Case II.
    let (mut u1, mut u2) = (Vec::new(), Vec::new());
    for &v in &rest {
        if g.row(v).intersection_len(&s2) < delta {
            u1.push(v);
        } else {
            u2.push(v);
        }
    }
    let mut side1: Vec<usize> = sides[0].iter().copied().chain(u1).collect();
    let mut side2: Vec<usize> = sides[1].iter().copied().chain(u2).collect();
    side1.sort_unstable();
    side2.sort_unstable();
    let step = n.saturating_sub(1).max(1);
    let (mut k1, mut m1) = (side1.len() / step, side1.len() % step);
    let (mut k2, mut m2) = (side2.len() / step, side2.len() % step);
    if m1 < m2 {
        std::mem::swap(&mut side1, &mut side2);
        std::mem::swap(&mut k1, &mut k2);
        std::mem::swap(&mut m1, &mut m2);
    }
    // Classes a little larger than `s` leave room for the trimming below.
    let s_big = s + delta * m;
    let calls: [(usize, usize); 2];
    let merged_m: bool;
    if k1 + k2 + 1 == k && m1 + m2 == m && m1 > 0 && m2 > 0 {
        calls = [(k1 + 1, m1), (k2 + 1, m2)];
        merged_m = true;
    } else if k1 + k2 + 2 == k && m2 >= m && m1 >= s_big {
        calls = [(k1 + 1, s_big), (k2 + 1, m)];
        merged_m = false;
    } else {
        return Err(Error::NoPartition(format!(
            "side sizes {}={k1}(n-1)+{m1} and {}={k2}(n-1)+{m2} fit neither case",
            side1.len(),
            side2.len()
        )));
    }
    if calls.iter().any(|&(kk, _)| kk >= k) {
        return Err(Error::NoPartition("a side would need as many classes as the whole".into()));
    }
    let mut found = Vec::new();
    for (side, &(kk, mm)) in [&side1, &side2].into_iter().zip(&calls) {
        match induction(side, kk, s_big, mm)? {
            Some(CertificateKind::RedTree { map }) => {
                return Ok((CertificateKind::RedTree { map }, audit));
            }
            Some(CertificateKind::BlueWitness { classes }) => found.push(classes),
            None => {
                return Err(Error::AllBranchesFailed(format!(
                    "recursion on a side of {} vertices was inconclusive",
                    side.len()
                )))
            }
        }
    }
    let (y, z) = (&found[0], &found[1]);
    // Fixed classes keep every vertex; the others are trimmed to `s`.
    let mut fixed: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut trim: Vec<(usize, Vec<usize>)> = Vec::new();
    if merged_m {
        trim.extend(y[..y.len() - 1].iter().cloned().map(|c| (0, c)));
        trim.extend(z[..z.len() - 1].iter().cloned().map(|c| (1, c)));
        let mut last = y[y.len() - 1].clone();
        last.extend_from_slice(&z[z.len() - 1]);
        fixed.push((2, last));
    } else {
        trim.extend(y.iter().cloned().map(|c| (0, c)));
        trim.extend(z[..z.len() - 1].iter().cloned().map(|c| (1, c)));
        fixed.push((1, z[z.len() - 1].clone()));
    }
    let mut chosen: Vec<(usize, Vec<usize>)> = Vec::new();
    for (side, class) in trim {
        let clash = |v: usize, other: &[usize]| other.iter().any(|&w| g.has_edge(v, w));
        let keep: Vec<usize> = class
            .into_iter()
            .filter(|&v| {
                fixed.iter().all(|(fs, c)| *fs == side || !clash(v, c))
                    && chosen.iter().all(|(cs, c)| *cs == side || !clash(v, c))
            })
            .take(s)
            .collect();
        if keep.len() < s {
            return Err(Error::AllBranchesFailed(format!(
                "class trimming left {} < s = {s} vertices",
                keep.len()
            )));
        }
        chosen.push((side, keep));
    }
    let mut classes: Vec<Vec<usize>> = chosen.into_iter().map(|(_, c)| c).collect();
    classes.push(fixed.pop().expect("one fixed class").1);
    let w = crate::graph::MultipartiteWitness { classes };
    w.validate(g, s, m)
        .map_err(|e| Error::Internal(format!("merged witness invalid: {e}")))?;
    if w.classes.len() != k {
        return Err(Error::Internal(format!("merged witness has {} classes, want {k}", w.classes.len())));
    }
    Ok((CertificateKind::BlueWitness { classes: w.classes }, audit))
}

/// Case I: `T_1 - t` on one side with `t_0 ↦ v_0`, the branches of `T_2 - t`
/// on the other, and `t ↦ v`.
fn bridge_embed(g: &Graph, t: &Tree, v: usize, sides: &[Vec<usize>], d: usize, m: usize) -> Result<Embedding> {
    let n = t.n();
    let hn = g.n();
    let sp = split_tree(t, 0.5, 0)?;
    let tc = sp.v;
    let in_t1: VertexSet = VertexSet::from_iter(n, sp.t1.iter().copied());
    let t0 = *t
        .neighbours(tc)
        .iter()
        .find(|&&x| in_t1.contains(x))
        .ok_or_else(|| Error::Internal("split vertex has no neighbour in T_1".into()))?;
    let branch_roots: Vec<usize> = t.neighbours(tc).iter().copied().filter(|&x| x != t0).collect();
    let mut emb = Embedding::new(n, hn);
    emb.set(tc, v)?;
    // Side one.
    let h1 = g.induced(&sides[0]);
    let nb1: Vec<usize> = (0..h1.n()).filter(|&i| g.has_edge(v, sides[0][i])).collect();
    let piece1: Vec<usize> = sp.t1.iter().copied().filter(|&x| x != tc).collect();
    let tree1 = t.induced(&piece1)?;
    let root1 = piece1.iter().position(|&x| x == t0).expect("t0 in T_1");
    let a1 = nb1[0];
    let mut st = ExtendableEmbedding::new(&h1, d, m, ExtendConfig::fast())?;
    st.pin(a1)?;
    let e1 = st.embed_tree(&tree1, root1, a1)?;
    for (i, &x) in piece1.iter().enumerate() {
        emb.set(x, sides[0][e1.get(i).expect("complete")])?;
    }
    // Side two, one branch at a time from a shared extendable state.
    let h2 = g.induced(&sides[1]);
    let nb2: Vec<usize> = (0..h2.n()).filter(|&i| g.has_edge(v, sides[1][i])).collect();
    if nb2.len() < branch_roots.len() {
        return Err(Error::Precondition("bridge has too few neighbours on side two".into()));
    }
    let mut st2 = ExtendableEmbedding::isolated(&h2, d, m, &nb2[..branch_roots.len()], ExtendConfig::fast())?;
    let parents = t.parents_from(tc);
    for (bi, &r) in branch_roots.iter().enumerate() {
        let mut branch = vec![r];
        let mut i = 0;
        while i < branch.len() {
            let x = branch[i];
            i += 1;
            for &y in t.neighbours(x) {
                if parents[y] == Some(x) {
                    branch.push(y);
                }
            }
        }
        let bt = t.induced(&branch)?;
        let eb = st2.embed_tree(&bt, 0, nb2[bi])?;
        for (j, &x) in branch.iter().enumerate() {
            emb.set(x, sides[1][eb.get(j).expect("complete")])?;
        }
    }
    emb.validate_complete(t, g)
        .map_err(|e| Error::Internal(format!("bridge embedding invalid: {e}")))?;
    Ok(emb)
}
