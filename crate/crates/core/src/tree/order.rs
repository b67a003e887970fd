use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tree;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Bfs,
    /// Continue from the last vertex whenever possible, so bare paths are laid down in one go.
    PathGreedy,
    /// Breadth-first with neighbour lists shuffled by the seed.
    Shuffled(u64),
}

/// Vertex order starting at `t1` in which every prefix induces a subtree.
pub fn traversal_order(t: &Tree, t1: usize, kind: OrderKind) -> Result<Vec<usize>> {
    t.validate_vertex(t1)?;
    let n = t.n();
    let mut seen = vec![false; n];
    seen[t1] = true;
    let mut out = Vec::with_capacity(n);
    match kind {
        OrderKind::Bfs | OrderKind::Shuffled(_) => {
            let mut rng = match kind {
                OrderKind::Shuffled(s) => Some(ChaCha8Rng::seed_from_u64(s)),
                _ => None,
            };
            let mut q = VecDeque::from([t1]);
            while let Some(u) = q.pop_front() {
                out.push(u);
                let mut nb = t.neighbours(u).to_vec();
                if let Some(r) = rng.as_mut() {
                    nb.shuffle(r);
                }
                for w in nb {
                    if !seen[w] {
                        seen[w] = true;
                        q.push_back(w);
                    }
                }
            }
        }
        OrderKind::PathGreedy => {
            let mut frontier = BTreeSet::new();
            let mut cur = t1;
            loop {
                out.push(cur);
                frontier.remove(&cur);
                for &w in t.neighbours(cur) {
                    if !seen[w] {
                        frontier.insert(w);
                    }
                }
                let next = t
                    .neighbours(cur)
                    .iter()
                    .copied()
                    .find(|&w| !seen[w])
                    .or_else(|| frontier.iter().next().copied());
                match next {
                    Some(v) => {
                        seen[v] = true;
                        cur = v;
                    }
                    None => break,
                }
            }
        }
    }
    Ok(out)
}

/// Up to `target` leaves, no two sharing a neighbour (ascending greedy).
pub fn independent_leaf_set(t: &Tree, target: usize) -> Vec<usize> {
    let n = t.n();
    let mut used_parent = vec![false; n];
    let mut chosen = vec![false; n];
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for l in t.leaves() {
        if out.len() >= target {
            break;
        }
        let p = t.neighbours(l)[0];
        if used_parent[p] || chosen[p] || used_parent[l] {
            continue;
        }
        used_parent[p] = true;
        chosen[l] = true;
        out.push(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefix_connected(t: &Tree, order: &[usize]) -> bool {
        let mut inside = vec![false; t.n()];
        for (i, &v) in order.iter().enumerate() {
            if i > 0 && !t.neighbours(v).iter().any(|&w| inside[w]) {
                return false;
            }
            inside[v] = true;
        }
        order.len() == t.n()
    }

    #[test]
    fn orders() {
        assert_eq!(traversal_order(&Tree::path(4), 0, OrderKind::Bfs).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(traversal_order(&Tree::star(3), 0, OrderKind::Bfs).unwrap(), vec![0, 1, 2, 3]);
        let t = Tree::random(300, 3, 9).unwrap();
        for kind in [OrderKind::Bfs, OrderKind::PathGreedy, OrderKind::Shuffled(4)] {
            assert!(prefix_connected(&t, &traversal_order(&t, 17, kind).unwrap()));
        }
        let sp = Tree::spider(3, 3);
        assert_eq!(
            traversal_order(&sp, 0, OrderKind::PathGreedy).unwrap(),
            vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
        );
    }

    #[test]
    fn leaf_sets() {
        assert_eq!(independent_leaf_set(&Tree::spider(3, 2), 10), vec![2, 4, 6]);
        assert_eq!(independent_leaf_set(&Tree::star(5), 3).len(), 1);
        assert_eq!(independent_leaf_set(&Tree::path(2), 3), vec![0]);
    }
}
