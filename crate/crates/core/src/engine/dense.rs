//! Dense hosts: embed a small piece of `T` at random into the high-degree
//! core, then extend greedily, swapping a reserved anchor out of the way when
//! the current parent has no free neighbour.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::params::{Audit, Policy};
use crate::tree::{split_tree, Tree};
use crate::vertex_set::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseConfig {
    /// `γ` handed to the split; the random piece has at most `γ|T|` vertices.
    pub piece_fraction: f64,
    pub retries: usize,
    pub policy: Policy,
}

impl Default for DenseConfig {
    fn default() -> Self {
        DenseConfig {
            piece_fraction: 0.2,
            retries: 6,
            policy: Policy::Audit,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DenseEmbedding {
    pub embedding: Embedding,
    pub core_size: usize,
    pub piece_size: usize,
    pub anchors: usize,
    /// Greedy steps that needed a swap.
    pub swaps: usize,
    pub attempts: usize,
    pub audit: Audit,
}

/// Vertices of degree at least `n / 2m`.
pub fn high_degree_core(g: &Graph, m: usize) -> VertexSet {
    let n = g.n();
    VertexSet::from_iter(n, (0..n).filter(|&v| 2 * m * g.degree(v) >= n))
}

/// The piece, its vertex order and the swap anchors.
struct Layout {
    order: Vec<usize>,
    parent: Vec<usize>,
    piece_len: usize,
    anchors: Vec<usize>,
}

fn layout(t: &Tree, gamma: f64) -> Result<Layout> {
    let n = t.n();
    let sp = split_tree(t, gamma, 0)?;
    let t1 = sp.v;
    let mut in_piece = vec![false; n];
    for &x in &sp.t2 {
        in_piece[x] = true;
    }
    let dist = t.distances_from(t1);
    // Anchors: piece vertices at depth >= 3, pairwise at distance >= 3.
    let mut blocked = vec![false; n];
    let mut is_anchor = vec![false; n];
    for &x in &sp.t2 {
        if x == t1 || dist[x] < 3 || blocked[x] {
            continue;
        }
        is_anchor[x] = true;
        for (y, &dy) in t.distances_from(x).iter().enumerate() {
            if dy <= 2 {
                blocked[y] = true;
            }
        }
    }
    // Preorder of the piece; an anchor's other neighbours follow it directly.
    let parents = t.parents_from(t1);
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut stack = vec![t1];
    while let Some(x) = stack.pop() {
        if !placed[x] {
            placed[x] = true;
            order.push(x);
        }
        let kids: Vec<usize> = t
            .neighbours(x)
            .iter()
            .copied()
            .filter(|&c| in_piece[c] && parents[c] == Some(x))
            .collect();
        if is_anchor[x] {
            for &c in &kids {
                placed[c] = true;
                order.push(c);
            }
        }
        for &c in kids.iter().rev() {
            stack.push(c);
        }
    }
    let piece_len = order.len();
    // Keep anchors preceded by the path to them.
    let mut pos = vec![usize::MAX; n];
    for (i, &x) in order.iter().enumerate() {
        pos[x] = i;
    }
    let anchors: Vec<usize> = (0..n)
        .filter(|&x| is_anchor[x])
        .filter(|&x| {
            let mut cur = x;
            (1..=3).all(|back| {
                let p = parents[cur].expect("depth >= 3");
                let ok = pos[x] >= back && order[pos[x] - back] == p;
                cur = p;
                ok
            })
        })
        .collect();
    // The rest breadth-first from the piece.
    let mut q: VecDeque<usize> = order.iter().copied().collect();
    while let Some(x) = q.pop_front() {
        for &y in t.neighbours(x) {
            if !placed[y] {
                placed[y] = true;
                order.push(y);
                q.push_back(y);
            }
        }
    }
    let parent = (0..n).map(|x| parents[x].unwrap_or(usize::MAX)).collect();
    Ok(Layout {
        order,
        parent,
        piece_len,
        anchors,
    })
}

/// Embed `T` with `|T| = |G| - m + 1` into a dense `(m, μn)`-joined host.
///
/// Step i places the next vertex on a free neighbour in the core; step ii
/// moves an anchor `t_j` onto an unused vertex adjacent to all images of its
/// neighbours and gives its old image to the next vertex; otherwise the
/// attempt stops with the failing step and frontier vertex.
pub fn embed_dense(g: &Graph, t: &Tree, m: usize, mu: f64, seed: u64, cfg: &DenseConfig) -> Result<DenseEmbedding> {
    let n = g.n();
    if m == 0 || t.n() + m > n + 1 {
        return Err(Error::Precondition(format!(
            "need |T| <= |G| - m + 1, got |T|={}, |G|={n}, m={m}",
            t.n()
        )));
    }
    let mut audit = Audit::default();
    audit.require(cfg.policy, t.n() + m == n + 1, "|T| = |G| - m + 1")?;
    audit.require(cfg.policy, m as f64 <= mu * n as f64, "m <= μn")?;
    let core = high_degree_core(g, m);
    audit.require(cfg.policy, core.len() + m > n, "fewer than m vertices outside the core")?;
    if t.n() == 1 {
        let v = core.first().unwrap_or(0);
        return Ok(DenseEmbedding {
            embedding: Embedding::from_pairs(1, n, &[(0, v)])?,
            core_size: core.len(),
            piece_size: 1,
            anchors: 0,
            swaps: 0,
            attempts: 1,
            audit,
        });
    }
    let lay = layout(t, cfg.piece_fraction)?;
    let mut last = None;
    for attempt in 0..=cfg.retries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        match dense_attempt(g, t, &core, &lay, &mut rng) {
            Ok((embedding, swaps)) => {
                embedding
                    .validate_complete(t, g)
                    .map_err(|e| Error::Internal(format!("dense embedding invalid: {e}")))?;
                return Ok(DenseEmbedding {
                    embedding,
                    core_size: core.len(),
                    piece_size: lay.piece_len,
                    anchors: lay.anchors.len(),
                    swaps,
                    attempts: attempt + 1,
                    audit,
                });
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn dense_attempt(
    g: &Graph,
    t: &Tree,
    core: &VertexSet,
    lay: &Layout,
    rng: &mut ChaCha8Rng,
) -> Result<(Embedding, usize)> {
    let n = g.n();
    let mut emb = Embedding::new(t.n(), n);
    let core_list = core.to_vec();
    let v1 = *core_list
        .choose(rng)
        .ok_or_else(|| Error::StepFailure { step: 1, detail: "empty core".into() })?;
    emb.set(lay.order[0], v1)?;
    for (i, &x) in lay.order.iter().enumerate().take(lay.piece_len).skip(1) {
        let w = emb.get(lay.parent[x]).expect("parent first");
        let free: Vec<usize> = g
            .neighbours(w)
            .iter()
            .copied()
            .filter(|&y| core.contains(y) && !emb.used().contains(y))
            .collect();
        let &y = free.choose(rng).ok_or_else(|| Error::StepFailure {
            step: i + 1,
            detail: format!("random piece: core vertex {w} has no free core neighbour"),
        })?;
        emb.set(x, y)?;
    }
    // Anchors whose image has not moved since the random phase.
    let mut fresh: Vec<bool> = vec![false; t.n()];
    for &a in &lay.anchors {
        fresh[a] = true;
    }
    let mut swaps = 0;
    for (i, &x) in lay.order.iter().enumerate().skip(lay.piece_len) {
        let w = emb.get(lay.parent[x]).expect("parent first");
        let free: Vec<usize> = g
            .neighbours(w)
            .iter()
            .copied()
            .filter(|&y| core.contains(y) && !emb.used().contains(y))
            .collect();
        if let Some(&y) = free.choose(rng) {
            emb.set(x, y)?;
            continue;
        }
        let mut done = false;
        for &a in &lay.anchors {
            if !fresh[a] {
                continue;
            }
            let va = emb.get(a).expect("anchors lie in the piece");
            if !g.has_edge(w, va) {
                continue;
            }
            let mut common = VertexSet::full(n);
            for &z in t.neighbours(a) {
                common.intersect_with(g.row(emb.get(z).expect("anchor neighbours lie in the piece")));
            }
            common.difference_with(emb.used());
            if let Some(v) = common.first() {
                emb.unset(a);
                emb.set(a, v)?;
                emb.set(x, va)?;
                fresh[a] = false;
                swaps += 1;
                let touched = t.neighbours(a).iter().map(|&z| (a, z)).chain([(x, lay.parent[x])]);
                for (p, q) in touched {
                    if !g.has_edge(emb.get(p).unwrap(), emb.get(q).unwrap()) {
                        return Err(Error::Internal(format!("swap at step {} broke edge {p}-{q}", i + 1)));
                    }
                }
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::StepFailure {
                step: i + 1,
                detail: format!("no free core neighbour and no swap at frontier vertex {w}"),
            });
        }
    }
    Ok((emb, swaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gnp(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    e.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn layout_anchors_are_spread() {
        let t = Tree::random(500, 3, 5).unwrap();
        let lay = layout(&t, 0.2).unwrap();
        assert!(!lay.anchors.is_empty());
        for (i, &a) in lay.anchors.iter().enumerate() {
            let d = t.distances_from(a);
            for &b in &lay.anchors[i + 1..] {
                assert!(d[b] >= 3);
            }
            // Every neighbour of an anchor lies in the piece.
            let pos = lay.order.iter().position(|&x| x == a).unwrap();
            assert!(pos < lay.piece_len);
            for &z in t.neighbours(a) {
                assert!(lay.order.iter().position(|&x| x == z).unwrap() < lay.piece_len);
            }
        }
        let mut seen = vec![false; t.n()];
        for (i, &x) in lay.order.iter().enumerate() {
            assert!(i == 0 || seen[lay.parent[x]] || t.neighbours(x).iter().any(|&y| seen[y]));
            seen[x] = true;
        }
    }

    #[test]
    fn low_degree_vertices_leave_the_core() {
        let mut g = gnp(120, 0.8, 3);
        let mut e: Vec<(usize, usize)> = g.edges().filter(|&(u, v)| u > 1 && v > 1).collect();
        e.push((0, 5));
        e.push((1, 6));
        g = Graph::from_edges(120, &e).unwrap();
        let core = high_degree_core(&g, 2);
        assert!(!core.contains(0) && !core.contains(1));
        assert_eq!(core.len(), 118);
    }

    #[test]
    fn forced_swaps_keep_the_map_consistent() {
        // A sparse enough host that step i runs dry and swaps happen.
        let g = gnp(300, 0.9, 8);
        let t = Tree::random(299, 3, 2).unwrap();
        let r = embed_dense(&g, &t, 2, 0.02, 1, &DenseConfig::default()).unwrap();
        r.embedding.validate_complete(&t, &g).unwrap();
    }
}
