use serde::Serialize;

use super::{Graph, TwoColouring};
use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

/// Largest graph `chromatic_and_sigma` accepts.
pub const CHROMATIC_CAP: usize = 16;

/// `(χ(H), σ(H))`: chromatic number and the least smallest-class size over
/// all proper `χ(H)`-colourings.
pub fn chromatic_and_sigma(h: &Graph) -> Result<(usize, usize)> {
    let n = h.n();
    if n == 0 {
        return Err(Error::InvalidInput("H must have at least one vertex".into()));
    }
    if n > CHROMATIC_CAP {
        return Err(Error::TooLarge(format!(
            "chromatic search is capped at {CHROMATIC_CAP} vertices, got {n}"
        )));
    }
    for k in 1..=n {
        let mut colour = vec![usize::MAX; n];
        let mut sizes = vec![0usize; k];
        let mut best = usize::MAX;
        colourings(h, 0, k, 0, &mut colour, &mut sizes, &mut best);
        if best != usize::MAX {
            return Ok((k, best));
        }
    }
    unreachable!("n colours always suffice")
}

/// Enumerate proper colourings with colours introduced in order, recording the
/// smallest class of those that use all `k` colours.
fn colourings(
    h: &Graph,
    v: usize,
    k: usize,
    used: usize,
    colour: &mut [usize],
    sizes: &mut [usize],
    best: &mut usize,
) {
    let n = h.n();
    if n - v < k - used {
        return;
    }
    if v == n {
        let s = *sizes.iter().min().unwrap();
        *best = (*best).min(s);
        return;
    }
    for c in 0..(used + 1).min(k) {
        if h.neighbours(v).iter().any(|&u| u < v && colour[u] == c) {
            continue;
        }
        colour[v] = c;
        sizes[c] += 1;
        colourings(h, v + 1, k, used.max(c + 1), colour, sizes, best);
        sizes[c] -= 1;
        colour[v] = usize::MAX;
    }
}

/// `k − 1` red cliques of order `n − 1` and one of order `σ − 1`, blue in between.
pub fn burr_colouring(n: usize, k: usize, sigma: usize) -> Result<TwoColouring> {
    if k < 2 || sigma < 1 || sigma > n {
        return Err(Error::Parameter(format!(
            "need k >= 2 and 1 <= sigma <= n, got n={n}, k={k}, sigma={sigma}"
        )));
    }
    let mut sizes = vec![n - 1; k - 1];
    sizes.push(sigma - 1);
    Ok(TwoColouring::from_red(Graph::disjoint_cliques(&sizes)))
}

/// `classes` sets of size `s` then one set of size `m`; no host edge joins two classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultipartiteWitness {
    pub classes: Vec<Vec<usize>>,
}

impl MultipartiteWitness {
    /// Check disjointness, sizes and the absence of edges between classes.
    pub fn validate(&self, g: &Graph, s: usize, m: usize) -> std::result::Result<(), String> {
        let k = self.classes.len();
        if k == 0 {
            return Err("no classes".into());
        }
        for (i, c) in self.classes.iter().enumerate() {
            let want = if i + 1 == k { m } else { s };
            if c.len() != want {
                return Err(format!("class {i} has {} vertices, expected {want}", c.len()));
            }
        }
        let mut seen = VertexSet::new(g.n());
        for c in &self.classes {
            for &v in c {
                if v >= g.n() {
                    return Err(format!("vertex {v} out of range"));
                }
                if !seen.insert(v) {
                    return Err(format!("vertex {v} in two classes"));
                }
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                for &u in &self.classes[i] {
                    for &v in &self.classes[j] {
                        if g.has_edge(u, v) {
                            return Err(format!("edge {u}-{v} joins classes {i} and {j}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum MultipartiteSearch {
    Found(MultipartiteWitness),
    Absent,
    Exhausted,
}

struct Packer<'g> {
    g: &'g Graph,
    need: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// Vertices with no edge into any other class, per class.
    allowed: Vec<VertexSet>,
    nodes: u64,
    budget: u64,
    s_classes: usize,
}

impl Packer<'_> {
    fn run(&mut self, v: usize) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        let k = self.need.len();
        let left: usize = (0..k).map(|c| self.need[c] - self.members[c].len()).sum();
        if left == 0 {
            return Some(true);
        }
        let n = self.g.n();
        if n - v < left {
            return Some(false);
        }
        for c in 0..k {
            let r = self.need[c] - self.members[c].len();
            if r > 0 && self.allowed[c].iter().filter(|&u| u >= v).take(r).count() < r {
                return Some(false);
            }
        }
        for c in 0..k {
            if self.members[c].len() == self.need[c] || !self.allowed[c].contains(v) {
                continue;
            }
            // Interchangeable s-classes are opened in order.
            if c > 0 && c < self.s_classes && self.members[c - 1].is_empty() {
                continue;
            }
            let saved: Vec<VertexSet> = self.allowed.clone();
            for (c2, a) in self.allowed.iter_mut().enumerate() {
                a.remove(v);
                if c2 != c {
                    a.difference_with(self.g.row(v));
                }
            }
            self.members[c].push(v);
            let r = self.run(v + 1);
            if r != Some(false) {
                return r;
            }
            self.members[c].pop();
            self.allowed = saved;
        }
        self.run(v + 1)
    }
}

/// Search the complement of `G` for `K^{classes}_s x K_m` (as a complete multipartite graph).
pub fn find_multipartite_in_complement(
    g: &Graph,
    classes: usize,
    s: usize,
    m: usize,
    budget: u64,
) -> Result<MultipartiteSearch> {
    if s == 0 || m == 0 {
        return Err(Error::InvalidInput("class sizes must be positive".into()));
    }
    let n = g.n();
    let total = classes * s + m;
    if total > n {
        return Ok(MultipartiteSearch::Absent);
    }
    let mut need = vec![s; classes];
    need.push(m);
    // A vertex in a class of size c needs total − c non-neighbours.
    let allowed: Vec<VertexSet> = need
        .iter()
        .map(|&c| {
            VertexSet::from_iter(
                n,
                (0..n).filter(|&v| n - 1 - g.degree(v) >= total - c),
            )
        })
        .collect();
    let mut p = Packer {
        g,
        members: vec![Vec::new(); need.len()],
        need,
        allowed,
        nodes: 0,
        budget,
        s_classes: classes,
    };
    Ok(match p.run(0) {
        Some(true) => MultipartiteSearch::Found(MultipartiteWitness { classes: p.members }),
        Some(false) => MultipartiteSearch::Absent,
        None => MultipartiteSearch::Exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chromatic_examples() {
        assert_eq!(chromatic_and_sigma(&Graph::complete(3)).unwrap(), (3, 1));
        assert_eq!(chromatic_and_sigma(&Graph::complete_bipartite(2, 3)).unwrap(), (2, 2));
        assert_eq!(chromatic_and_sigma(&Graph::cycle(5)).unwrap(), (3, 1));
        assert_eq!(chromatic_and_sigma(&Graph::empty(4)).unwrap(), (1, 4));
        assert!(matches!(chromatic_and_sigma(&Graph::empty(17)), Err(Error::TooLarge(_))));
    }

    #[test]
    fn burr_sizes() {
        let c = burr_colouring(3, 2, 2).unwrap();
        assert_eq!(c.n(), 3);
        let c = burr_colouring(3, 3, 1).unwrap();
        assert_eq!(c.n(), 4);
        assert_eq!(c.red().edge_count(), 2);
        assert!(burr_colouring(3, 1, 1).is_err());
    }

    #[test]
    fn multipartite_examples() {
        let b = u64::MAX;
        match find_multipartite_in_complement(&Graph::empty(5), 2, 2, 1, b).unwrap() {
            MultipartiteSearch::Found(w) => w.validate(&Graph::empty(5), 2, 1).unwrap(),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            find_multipartite_in_complement(&Graph::complete(5), 1, 1, 1, b).unwrap(),
            MultipartiteSearch::Absent
        );
        assert_eq!(
            find_multipartite_in_complement(&Graph::cycle(4), 1, 2, 2, b).unwrap(),
            MultipartiteSearch::Absent
        );
    }
}
