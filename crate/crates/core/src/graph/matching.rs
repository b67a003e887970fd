use serde::Serialize;

use super::Graph;
use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum HallOutcome {
    /// Pairs `(a, b)` saturating `A`, in ascending order of `a`.
    Matching { pairs: Vec<(usize, usize)> },
    /// `U ⊆ A` with `|N(U) ∩ B| < |U|`.
    Violating { u: Vec<usize> },
}

/// Saturate `A` into `B` by augmenting paths, or return a Hall violator.
pub fn hall_matching(a: &VertexSet, b: &VertexSet, g: &Graph) -> Result<HallOutcome> {
    g.validate_set(a)?;
    g.validate_set(b)?;
    if !a.is_disjoint(b) {
        return Err(Error::InvalidInput("A and B must be disjoint".into()));
    }
    let n = g.n();
    let avs = a.to_vec();
    let mut mate_b = vec![usize::MAX; n];
    let mut mate_a = vec![usize::MAX; n];
    let mut stamp = vec![0usize; n];
    let mut round = 0;
    for &x in &avs {
        round += 1;
        if !augment(x, g, b, &mut mate_a, &mut mate_b, &mut stamp, round) {
            // Vertices of A reachable from x by alternating paths form a violator.
            let mut u = Vec::new();
            let mut seen = VertexSet::new(n);
            let mut stack = vec![x];
            seen.insert(x);
            while let Some(p) = stack.pop() {
                u.push(p);
                for &y in g.neighbours(p) {
                    if b.contains(y) {
                        let q = mate_b[y];
                        if q != usize::MAX && seen.insert(q) {
                            stack.push(q);
                        }
                    }
                }
            }
            u.sort_unstable();
            return Ok(HallOutcome::Violating { u });
        }
    }
    Ok(HallOutcome::Matching {
        pairs: avs.iter().map(|&x| (x, mate_a[x])).collect(),
    })
}

fn augment(
    x: usize,
    g: &Graph,
    b: &VertexSet,
    mate_a: &mut [usize],
    mate_b: &mut [usize],
    stamp: &mut [usize],
    round: usize,
) -> bool {
    // Iterative DFS over alternating paths to avoid deep recursion on large instances.
    let mut stack: Vec<(usize, usize)> = vec![(x, 0)];
    let mut via: Vec<usize> = Vec::new();
    while let Some(top) = stack.last_mut() {
        let nb = g.neighbours(top.0);
        let mut step = None;
        while top.1 < nb.len() {
            let y = nb[top.1];
            top.1 += 1;
            if b.contains(y) && stamp[y] != round {
                stamp[y] = round;
                step = Some(y);
                break;
            }
        }
        match step {
            Some(y) if mate_b[y] == usize::MAX => {
                via.push(y);
                for (&(pa, _), &yb) in stack.iter().zip(&via) {
                    mate_a[pa] = yb;
                    mate_b[yb] = pa;
                }
                return true;
            }
            Some(y) => {
                via.push(y);
                stack.push((mate_b[y], 0));
            }
            None => {
                stack.pop();
                via.pop();
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let g = Graph::from_edges(4, &[(0, 2), (1, 3)]).unwrap();
        let a = VertexSet::from_iter(4, [0, 1]);
        let b = VertexSet::from_iter(4, [2, 3]);
        assert_eq!(
            hall_matching(&a, &b, &g).unwrap(),
            HallOutcome::Matching { pairs: vec![(0, 2), (1, 3)] }
        );
        let g = Graph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let a = VertexSet::from_iter(3, [0, 1]);
        let b = VertexSet::from_iter(3, [2]);
        assert_eq!(
            hall_matching(&a, &b, &g).unwrap(),
            HallOutcome::Violating { u: vec![0, 1] }
        );
    }

    #[test]
    fn needs_augmentation() {
        // 0-3, 0-4, 1-3: greedy 0->3 must be undone.
        let g = Graph::from_edges(5, &[(0, 3), (0, 4), (1, 3)]).unwrap();
        let a = VertexSet::from_iter(5, [0, 1]);
        let b = VertexSet::from_iter(5, [3, 4]);
        assert_eq!(
            hall_matching(&a, &b, &g).unwrap(),
            HallOutcome::Matching { pairs: vec![(0, 4), (1, 3)] }
        );
    }
}
