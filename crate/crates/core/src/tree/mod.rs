//! Trees, their file format, random generation and structural decompositions.

mod decompose;
mod order;

pub use decompose::{
    bare_path_bound, descending_decomposition, find_bare_paths, fixed_length_decomposition, is_descending,
    separated_at_distance, separated_set, split_tree, validate_decomposition, BarePath, Split,
    TreeDecomposition,
};
pub use order::{independent_leaf_set, traversal_order, OrderKind};

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Unrooted tree on `0..n`; the parent array is kept for root 0.
#[derive(Clone, PartialEq, Eq)]
pub struct Tree {
    adj: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    max_degree: usize,
}

impl Tree {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a tree needs at least one vertex".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let g = Graph::from_edges(n, edges)?;
        if g.edge_count() != n - 1 {
            return Err(Error::InvalidInput("duplicate tree edge".into()));
        }
        let adj: Vec<Vec<usize>> = (0..n).map(|v| g.neighbours(v).to_vec()).collect();
        let parent = bfs_parents(&adj, 0);
        if parent.iter().skip(1).any(|p| p.is_none()) {
            return Err(Error::InvalidInput("tree is disconnected".into()));
        }
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Tree {
            adj,
            parent,
            max_degree,
        })
    }

    /// `parents[v]` is `None` exactly for the root.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let roots = parents.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::InvalidInput(format!("expected one root, found {roots}")));
        }
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
            .collect();
        Tree::from_edges(parents.len(), &edges)
    }

    pub fn single() -> Self {
        Tree::from_edges(1, &[]).unwrap()
    }

    pub fn path(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Tree::from_edges(n, &e).expect("path")
    }

    /// `K_{1,leaves}` with centre 0.
    pub fn star(leaves: usize) -> Self {
        let e: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Tree::from_edges(leaves + 1, &e).expect("star")
    }

    /// Centre 0 with `legs` paths of `len` edges each.
    pub fn spider(legs: usize, len: usize) -> Self {
        let mut e = Vec::new();
        let mut next = 1;
        for _ in 0..legs {
            let mut prev = 0;
            for _ in 0..len {
                e.push((prev, next));
                prev = next;
                next += 1;
            }
        }
        Tree::from_edges(next, &e).expect("spider")
    }

    /// A spine path `0..spine` with `legs` leaves hanging off each spine vertex.
    pub fn caterpillar(spine: usize, legs: usize) -> Self {
        let mut e: Vec<_> = (1..spine).map(|i| (i - 1, i)).collect();
        let mut next = spine;
        for s in 0..spine {
            for _ in 0..legs {
                e.push((s, next));
                next += 1;
            }
        }
        Tree::from_edges(next, &e).expect("caterpillar")
    }

    /// Heap-ordered complete binary tree on `n` vertices.
    pub fn binary(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| ((i - 1) / 2, i)).collect();
        Tree::from_edges(n, &e).expect("binary")
    }

    /// Each new vertex attaches to a uniformly random earlier vertex of degree below `max_degree`.
    pub fn random(n: usize, max_degree: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be positive".into()));
        }
        if max_degree < 2 && n > 2 || max_degree == 0 && n > 1 {
            return Err(Error::Parameter(format!(
                "no tree on {n} vertices has maximum degree {max_degree}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut deg = vec![0usize; n];
        let mut open: Vec<usize> = vec![0];
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        for v in 1..n {
            let i = rng.gen_range(0..open.len());
            let p = open[i];
            edges.push((v, p));
            deg[p] += 1;
            deg[v] = 1;
            if deg[p] >= max_degree {
                open.swap_remove(i);
            }
            if max_degree > 1 {
                open.push(v);
            }
        }
        Tree::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.adj[v].len() == 1
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, a)| a.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn to_graph(&self) -> Graph {
        let e: Vec<_> = self.edges().collect();
        Graph::from_edges(self.n(), &e).expect("tree is a graph")
    }

    /// Parent pointers when rooted at `root`.
    pub fn parents_from(&self, root: usize) -> Vec<Option<usize>> {
        bfs_parents(&self.adj, root)
    }

    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.n()];
        let mut q = VecDeque::from([v]);
        d[v] = 0;
        while let Some(u) = q.pop_front() {
            for &w in &self.adj[u] {
                if d[w] == usize::MAX {
                    d[w] = d[u] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    }

    /// Subtree on a connected vertex set, relabelled in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Result<Tree> {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            if v >= self.n() {
                return Err(Error::InvalidInput(format!("vertex {v} out of range")));
            }
            index[v] = i;
        }
        let mut e = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && i < j {
                    e.push((i, j));
                }
            }
        }
        Tree::from_edges(vertices.len(), &e)
    }

    pub fn validate_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::InvalidInput(format!(
                "tree vertex {v} outside 0..{}",
                self.n()
            )));
        }
        Ok(())
    }

    /// `t <n>` then `p <child> <parent>` for every vertex, with parent −1 at the root.
    pub fn to_text(&self) -> String {
        let mut s = format!("t {}\n", self.n());
        for v in 0..self.n() {
            match self.parent[v] {
                Some(p) => s.push_str(&format!("p {v} {p}\n")),
                None => s.push_str(&format!("p {v} -1\n")),
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Tree> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut n: Option<usize> = None;
        let mut parents: Vec<Option<Option<usize>>> = Vec::new();
        let mut last = 0;
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            last = no;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks.as_slice() {
                ["t", cnt] => {
                    if n.is_some() {
                        return Err(perr(no, "duplicate `t` line".into()));
                    }
                    let c: usize = cnt
                        .parse()
                        .map_err(|_| perr(no, format!("bad vertex count {cnt:?}")))?;
                    if c == 0 {
                        return Err(perr(no, "a tree needs at least one vertex".into()));
                    }
                    n = Some(c);
                    parents = vec![None; c];
                }
                ["p", c, p] => {
                    let nn = n.ok_or_else(|| perr(no, "`p` line before `t` line".into()))?;
                    let c: usize = c.parse().map_err(|_| perr(no, format!("bad child {c:?}")))?;
                    let p: i64 = p.parse().map_err(|_| perr(no, format!("bad parent {p:?}")))?;
                    if c >= nn || p >= nn as i64 || p < -1 {
                        return Err(perr(no, format!("vertex outside 0..{nn}")));
                    }
                    if parents[c].is_some() {
                        return Err(perr(no, format!("vertex {c} listed twice")));
                    }
                    parents[c] = Some(if p < 0 { None } else { Some(p as usize) });
                }
                _ => return Err(perr(no, format!("unrecognised line {l:?}"))),
            }
        }
        let nn = n.ok_or_else(|| perr(last.max(1), "missing `t` line".into()))?;
        let mut ps = Vec::with_capacity(nn);
        for (v, p) in parents.into_iter().enumerate() {
            match p {
                Some(p) => ps.push(p),
                None if nn == 1 => ps.push(None),
                None => return Err(perr(last.max(1), format!("vertex {v} has no `p` line"))),
            }
        }
        Tree::from_parents(&ps).map_err(|e| perr(last.max(1), e.to_string()))
    }
}

impl std::fmt::Debug for Tree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tree(n={}, edges={:?})", self.n(), self.edges().collect::<Vec<_>>())
    }
}

fn bfs_parents(adj: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = q.pop_front() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(u);
                q.push_back(w);
            }
        }
    }
    parent
}
