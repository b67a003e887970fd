//! Trees with many leaves: embed the tree without a set of leaves, then hang
//! the leaves back on through a bipartite matching.

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::extend::{ExtendConfig, ExtendableEmbedding};
use crate::graph::{hall_matching, prune_to_expander, Graph, HallOutcome};
use crate::params::{Audit, Policy, SearchConfig};
use crate::tree::{independent_leaf_set, Tree};
use crate::vertex_set::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeavesConfig {
    pub extend: ExtendConfig,
    pub search: SearchConfig,
}

impl Default for LeavesConfig {
    fn default() -> Self {
        LeavesConfig {
            extend: ExtendConfig::fast(),
            search: SearchConfig::fast(),
        }
    }
}

/// Embed `T` into `G` when every `μn`-set has `|U ∪ N(U)| >= n` and `T` has
/// at least `10Δ²μn` leaves.
pub fn embed_many_leaves(g: &Graph, t: &Tree, mu: f64, cfg: &LeavesConfig) -> Result<(Embedding, Audit)> {
    let n = t.n();
    if g.n() < n {
        return Err(Error::Precondition(format!("host has {} < {n} vertices", g.n())));
    }
    let mut audit = Audit::default();
    if n <= 2 {
        let pairs: Vec<(usize, usize)> = match n {
            1 => vec![(0, 0)],
            _ => {
                let (u, v) = g
                    .edges()
                    .next()
                    .ok_or_else(|| Error::Precondition("host has no edge".into()))?;
                vec![(0, u), (1, v)]
            }
        };
        return Ok((Embedding::from_pairs(n, g.n(), &pairs)?, audit));
    }
    let delta = t.max_degree();
    let d = (2 * delta).max(3);
    let a = ((mu * n as f64).ceil() as usize).max(1);
    let want = (10.0 * delta as f64 * mu * n as f64).ceil() as usize;
    audit.require(
        Policy::Audit,
        t.leaves().len() as f64 >= 10.0 * (delta * delta) as f64 * mu * n as f64,
        "T has at least 10Δ²μn leaves",
    )?;
    let leaves = independent_leaf_set(t, want.max(1));
    let mut parent_of = vec![usize::MAX; n];
    let mut is_removed = vec![false; n];
    for &l in &leaves {
        let p = t.neighbours(l)[0];
        if parent_of[p] != usize::MAX {
            return Err(Error::Internal(format!("leaves {l} and {} share parent {p}", parent_of[p])));
        }
        parent_of[p] = l;
        is_removed[l] = true;
    }
    let n0 = g.n() + 1 - n;
    let removed = match prune_to_expander(g, a, n0, (2 * d) as f64, Policy::Audit, &cfg.search) {
        Ok(p) => {
            audit.extend(&p.audit);
            p.w
        }
        Err(e) => {
            audit.note(format!("pruning skipped: {e}"));
            Vec::new()
        }
    };
    let keep: Vec<usize> = (0..g.n()).filter(|v| removed.binary_search(v).is_err()).collect();
    let h = g.induced(&keep);
    let core: Vec<usize> = (0..n).filter(|&x| !is_removed[x]).collect();
    let tp = t.induced(&core)?;
    let anchor = (0..h.n()).max_by_key(|&v| (h.degree(v), std::cmp::Reverse(v))).unwrap_or(0);
    let mut state = ExtendableEmbedding::new(&h, d, a, cfg.extend)?;
    state.pin(anchor)?;
    let local = state.embed_tree(&tp, 0, anchor)?;
    audit.extend(state.audit());
    let mut emb = Embedding::new(n, g.n());
    for (i, &x) in core.iter().enumerate() {
        emb.set(x, keep[local.get(i).expect("complete")])?;
    }
    let mut image_to_leaf = vec![usize::MAX; g.n()];
    let mut aset = VertexSet::new(g.n());
    for &l in &leaves {
        let img = emb.get(t.neighbours(l)[0]).expect("parent embedded");
        aset.insert(img);
        image_to_leaf[img] = l;
    }
    let bset = emb.used().complement();
    match hall_matching(&aset, &bset, g)? {
        HallOutcome::Matching { pairs } => {
            for (x, y) in pairs {
                emb.set(image_to_leaf[x], y)?;
            }
        }
        HallOutcome::Violating { u } => return Err(Error::MatchingFailure { violating: u }),
    }
    emb.validate_complete(t, g)
        .map_err(|e| Error::Internal(format!("leaf embedding invalid: {e}")))?;
    Ok((emb, audit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spider_into_complete_host() {
        let t = Tree::spider(20, 2);
        let g = Graph::complete(t.n() + 5);
        let (e, _) = embed_many_leaves(&g, &t, 0.05, &LeavesConfig::default()).unwrap();
        e.validate_complete(&t, &g).unwrap();
    }

    #[test]
    fn hall_violation_is_reported() {
        // Star: the centre's image has too few neighbours for all leaves.
        let t = Tree::star(6);
        let mut e: Vec<(usize, usize)> = Vec::new();
        for u in 0..4 {
            for v in u + 1..4 {
                e.push((u, v));
            }
        }
        e.extend([(4, 5), (5, 6)]);
        let g = Graph::from_edges(7, &e).unwrap();
        assert!(embed_many_leaves(&g, &t, 0.2, &LeavesConfig::default()).is_err());
    }
}
