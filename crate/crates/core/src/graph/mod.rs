//! Graphs, colourings, neighbourhood algebra and the property checkers built on them.

mod expansion;
mod extremal;
mod io;
mod matching;
pub mod search;

pub use expansion::{
    closed_neighbourhood, external_neighbourhood, is_expander, is_joined, is_joined_within,
    neighbourhood_in, prune_relative_expansion, prune_to_expander, Expansion, Joinedness,
    PruneResult,
};
pub(crate) use expansion::grow_waste;
pub use extremal::{
    burr_colouring, chromatic_and_sigma, find_multipartite_in_complement, MultipartiteSearch,
    MultipartiteWitness, CHROMATIC_CAP,
};
pub use io::{parse_colouring, parse_graph, write_colouring, write_graph};
pub use matching::{hall_matching, HallOutcome};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

/// Simple undirected graph on `0..n` with sorted neighbour lists and bitset rows.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    rows: Vec<VertexSet>,
    edges: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            rows: vec![VertexSet::new(n); n],
            edges: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        g.finish();
        Ok(g)
    }

    /// Build from bitset rows; rows must be symmetric and loop-free.
    pub fn from_rows(rows: Vec<VertexSet>) -> Result<Self> {
        let n = rows.len();
        let mut adj = vec![Vec::new(); n];
        let mut twice = 0;
        for (u, r) in rows.iter().enumerate() {
            if r.universe() != n {
                return Err(Error::InvalidInput("row universe mismatch".into()));
            }
            if r.contains(u) {
                return Err(Error::InvalidInput(format!("self-loop at {u}")));
            }
            for v in r.iter() {
                if !rows[v].contains(u) {
                    return Err(Error::InvalidInput(format!("asymmetric pair {u},{v}")));
                }
                adj[u].push(v);
                twice += 1;
            }
        }
        Ok(Graph {
            adj,
            rows,
            edges: twice / 2,
        })
    }

    fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::InvalidInput(format!("edge {u}-{v} outside 0..{n}")));
        }
        if u == v {
            return Err(Error::InvalidInput(format!("self-loop at {u}")));
        }
        if self.rows[u].insert(v) {
            self.rows[v].insert(u);
            self.adj[u].push(v);
            self.adj[v].push(u);
            self.edges += 1;
        }
        Ok(())
    }

    fn finish(&mut self) {
        for a in self.adj.iter_mut() {
            a.sort_unstable();
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut rows = Vec::with_capacity(n);
        for u in 0..n {
            let mut r = VertexSet::full(n);
            r.remove(u);
            rows.push(r);
        }
        Graph::from_rows(rows).expect("complete graph")
    }

    pub fn path(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &e).expect("path")
    }

    pub fn cycle(n: usize) -> Self {
        let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n >= 3 {
            e.push((n - 1, 0));
        }
        Graph::from_edges(n, &e).expect("cycle")
    }

    /// `K_{a,b}` with parts `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let mut e = Vec::new();
        for u in 0..a {
            for v in a..a + b {
                e.push((u, v));
            }
        }
        Graph::from_edges(a + b, &e).expect("bipartite")
    }

    /// Disjoint union of cliques of the given sizes, in order.
    pub fn disjoint_cliques(sizes: &[usize]) -> Self {
        let n = sizes.iter().sum();
        let mut e = Vec::new();
        let mut base = 0;
        for &s in sizes {
            for u in base..base + s {
                for v in u + 1..base + s {
                    e.push((u, v));
                }
            }
            base += s;
        }
        Graph::from_edges(n, &e).expect("cliques")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    #[inline]
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn row(&self, v: usize) -> &VertexSet {
        &self.rows[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, a)| a.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet::full(self.n())
    }

    pub fn complement(&self) -> Graph {
        let n = self.n();
        let rows = (0..n)
            .map(|u| {
                let mut r = self.rows[u].complement();
                r.remove(u);
                r
            })
            .collect();
        Graph::from_rows(rows).expect("complement")
    }

    /// Subgraph induced on `keep`, relabelled `keep[i] -> i`.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let k = keep.len();
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in keep.iter().enumerate() {
            index[v] = i;
        }
        let mut adj = vec![Vec::new(); k];
        let mut rows = vec![VertexSet::new(k); k];
        let mut twice = 0;
        for (i, &v) in keep.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX {
                    adj[i].push(j);
                    rows[i].insert(j);
                    twice += 1;
                }
            }
            adj[i].sort_unstable();
        }
        Graph {
            adj,
            rows,
            edges: twice / 2,
        }
    }

    pub fn validate_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::InvalidInput(format!(
                "vertex {v} outside 0..{}",
                self.n()
            )));
        }
        Ok(())
    }

    pub fn validate_set(&self, s: &VertexSet) -> Result<()> {
        if s.universe() != self.n() {
            return Err(Error::InvalidInput(format!(
                "vertex set over {} vertices used with a {}-vertex graph",
                s.universe(),
                self.n()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n(), self.edges().collect::<Vec<_>>())
    }
}

/// Red/blue colouring of the edges of `K_N`, stored by its red graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoColouring {
    red: Graph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Colour {
    Red,
    Blue,
}

impl TwoColouring {
    pub fn from_red(red: Graph) -> Self {
        TwoColouring { red }
    }

    pub fn all_red(n: usize) -> Self {
        Self::from_red(Graph::complete(n))
    }

    pub fn all_blue(n: usize) -> Self {
        Self::from_red(Graph::empty(n))
    }

    pub fn n(&self) -> usize {
        self.red.n()
    }

    pub fn red(&self) -> &Graph {
        &self.red
    }

    pub fn blue(&self) -> Graph {
        self.red.complement()
    }

    pub fn colour(&self, u: usize, v: usize) -> Colour {
        if self.red.has_edge(u, v) {
            Colour::Red
        } else {
            Colour::Blue
        }
    }

    /// Colouring induced on `keep`, relabelled `keep[i] -> i`.
    pub fn induced(&self, keep: &[usize]) -> TwoColouring {
        TwoColouring {
            red: self.red.induced(keep),
        }
    }
}
