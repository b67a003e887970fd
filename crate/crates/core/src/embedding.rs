use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::Tree;
use crate::vertex_set::VertexSet;

/// Injective partial map from tree vertices to host vertices.
#[derive(Clone, PartialEq, Eq)]
pub struct Embedding {
    map: Vec<Option<usize>>,
    used: VertexSet,
}

impl Embedding {
    pub fn new(tree_n: usize, host_n: usize) -> Self {
        Embedding {
            map: vec![None; tree_n],
            used: VertexSet::new(host_n),
        }
    }

    pub fn from_pairs(tree_n: usize, host_n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut e = Embedding::new(tree_n, host_n);
        for &(t, v) in pairs {
            e.set(t, v)?;
        }
        Ok(e)
    }

    pub fn tree_n(&self) -> usize {
        self.map.len()
    }

    pub fn host_n(&self) -> usize {
        self.used.universe()
    }

    pub fn get(&self, t: usize) -> Option<usize> {
        self.map.get(t).copied().flatten()
    }

    pub fn set(&mut self, t: usize, v: usize) -> Result<()> {
        if t >= self.map.len() || v >= self.used.universe() {
            return Err(Error::InvalidInput(format!("pair ({t}, {v}) out of range")));
        }
        if self.map[t].is_some() {
            return Err(Error::InvalidInput(format!("tree vertex {t} already mapped")));
        }
        if !self.used.insert(v) {
            return Err(Error::InvalidInput(format!("host vertex {v} already used")));
        }
        self.map[t] = Some(v);
        Ok(())
    }

    pub fn unset(&mut self, t: usize) -> Option<usize> {
        let v = self.map.get_mut(t)?.take()?;
        self.used.remove(v);
        Some(v)
    }

    pub fn used(&self) -> &VertexSet {
        &self.used
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.map.iter().all(Option::is_some)
    }

    /// Mapped pairs in ascending tree-vertex order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.map
            .iter()
            .enumerate()
            .filter_map(|(t, v)| v.map(|v| (t, v)))
            .collect()
    }

    /// Injective, and every tree edge between mapped vertices lands on a host edge.
    pub fn validate(&self, t: &Tree, host: &Graph) -> std::result::Result<(), String> {
        if self.map.len() != t.n() {
            return Err(format!("map covers {} tree vertices, tree has {}", self.map.len(), t.n()));
        }
        let mut seen = VertexSet::new(host.n());
        for (x, v) in self.pairs() {
            if v >= host.n() {
                return Err(format!("image {v} of {x} outside host"));
            }
            if !seen.insert(v) {
                return Err(format!("host vertex {v} used twice"));
            }
        }
        for (a, b) in t.edges() {
            if let (Some(u), Some(v)) = (self.get(a), self.get(b)) {
                if !host.has_edge(u, v) {
                    return Err(format!("tree edge {a}-{b} maps to non-edge {u}-{v}"));
                }
            }
        }
        Ok(())
    }

    pub fn validate_complete(&self, t: &Tree, host: &Graph) -> std::result::Result<(), String> {
        if let Some(x) = self.map.iter().position(Option::is_none) {
            return Err(format!("tree vertex {x} is not mapped"));
        }
        self.validate(t, host)
    }

    /// Relabel host vertices through `to_host[local]`.
    pub fn lift(&self, to_host: &[usize], host_n: usize) -> Result<Embedding> {
        let mut e = Embedding::new(self.map.len(), host_n);
        for (t, v) in self.pairs() {
            e.set(t, to_host[v])?;
        }
        Ok(e)
    }
}

impl std::fmt::Debug for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.pairs()).finish()
    }
}

/// A JSON list of `[tree_vertex, host_vertex]` pairs.
impl Serialize for Embedding {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = self.pairs();
        let mut seq = s.serialize_seq(Some(pairs.len()))?;
        for p in pairs {
            seq.serialize_element(&p)?;
        }
        seq.end()
    }
}
