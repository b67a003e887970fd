//! The solver: a red copy of `T` or a blue `K^{k-1}_s x K_m`, with a
//! certificate and a trace of the case analysis that produced it.

mod connected;
mod dense;
mod k2;
mod leaves;
mod solve;
mod split;

pub use connected::{
    connect_through, embed_sparse_connected, find_long_path, ConnectedConfig, Ledger, LongPath,
    PathRecord, SparseConnected,
};
pub use dense::{embed_dense, high_degree_core, DenseConfig, DenseEmbedding};
pub use k2::{embed_k2, K2Config, K2Embedding};
pub use leaves::{embed_many_leaves, LeavesConfig};
pub use solve::{solve, SolveConfig};
pub use split::{find_sparse_cut, split_disconnected, Induction, SparseCut};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{write_colouring, Graph, TwoColouring};
use crate::params::ParamSet;
use crate::tree::Tree;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum CertificateKind {
    /// `[tree_vertex, host_vertex]` pairs covering every tree vertex.
    RedTree { map: Vec<(usize, usize)> },
    /// `k - 1` classes of size `s`, then one class of size `m`.
    BlueWitness { classes: Vec<Vec<usize>> },
}

/// Everything needed to rebuild the instance apart from the colouring itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub tree_n: usize,
    pub tree_edges: Vec<(usize, usize)>,
    pub colouring_n: usize,
    pub k: usize,
    pub s: usize,
    pub m: usize,
    pub seed: u64,
    pub params: ParamSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Hex SHA-256 of the colouring text, the tree text and `k s m`.
    pub input_digest: String,
    pub params: ParamRecord,
    pub status: Status,
}

impl Certificate {
    pub fn tree(&self) -> crate::Result<Tree> {
        Tree::from_edges(self.params.tree_n, &self.params.tree_edges)
    }
}

pub fn input_digest(c: &TwoColouring, t: &Tree, k: usize, s: usize, m: usize) -> String {
    let mut h = Sha256::new();
    h.update(write_colouring(c).as_bytes());
    h.update(t.to_text().as_bytes());
    h.update(format!("k {k} s {s} m {m}\n").as_bytes());
    hex::encode(h.finalize())
}

/// Which branch of the case analysis a record belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Trivial,
    SingleClass,
    Joinedness,
    /// An `m`-set with a small closed neighbourhood.
    SmallSetProbe,
    /// An `s`-set with a small closed neighbourhood.
    ClassProbe,
    ManyLeaves,
    Disconnected,
    WellConnected,
    Dense,
    Vortex,
    Exact,
}

/// One decision: `holds` is `measured <= threshold` or `measured >= threshold`
/// according to `rule`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub depth: usize,
    pub case: Case,
    /// Size of the sub-colouring the decision was taken on.
    pub scope_size: usize,
    /// Its vertices, in ids of the input colouring.
    pub scope: Vec<usize>,
    pub k: usize,
    pub m: usize,
    pub predicate: String,
    pub rule: Rule,
    pub measured: f64,
    pub threshold: f64,
    pub holds: bool,
    /// Sets backing the measurement, in input ids.
    pub witness: Vec<Vec<usize>>,
    pub outcome: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    AtLeast,
    AtMost,
    Below,
}

impl Rule {
    pub fn apply(self, measured: f64, threshold: f64) -> bool {
        match self {
            Rule::AtLeast => measured >= threshold,
            Rule::AtMost => measured <= threshold,
            Rule::Below => measured < threshold,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseTrace {
    pub records: Vec<TraceRecord>,
}

impl CaseTrace {
    /// Recompute every measurement that can be read off the input and check
    /// that it reproduces the recorded decision.
    pub fn replay(&self, c: &TwoColouring, t: &Tree, params: &ParamSet) -> Result<(), String> {
        for (i, r) in self.records.iter().enumerate() {
            if r.rule.apply(r.measured, r.threshold) != r.holds {
                return Err(format!("record {i}: {} {} vs {} does not give {}", r.predicate, r.measured, r.threshold, r.holds));
            }
            let fresh = remeasure(r, c, t, params)
                .map_err(|e| format!("record {i} ({}): {e}", r.predicate))?;
            if let Some((measured, threshold)) = fresh {
                if (measured - r.measured).abs() > 1e-9 || (threshold - r.threshold).abs() > 1e-9 {
                    return Err(format!(
                        "record {i} ({}): recorded {} vs {}, recomputed {measured} vs {threshold}",
                        r.predicate, r.measured, r.threshold
                    ));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn leaf_threshold(t: &Tree, params: &ParamSet) -> f64 {
    let delta = t.max_degree() as f64;
    10.0 * delta * delta * params.epsilon * t.n() as f64
}

fn closed_size(red: &Graph, scope: &[usize], u: &[usize]) -> usize {
    let inside = crate::VertexSet::from_iter(red.n(), scope.iter().copied());
    let mut cl = crate::VertexSet::from_iter(red.n(), u.iter().copied());
    for &x in u {
        cl.union_with(red.row(x));
    }
    cl.intersection_len(&inside)
}

fn red_between(red: &Graph, a: &[usize], b: &[usize]) -> usize {
    a.iter().map(|&x| b.iter().filter(|&&y| red.has_edge(x, y)).count()).sum()
}

pub(crate) const P_VERTEX: &str = "single-vertex tree fits";
pub(crate) const P_EDGE: &str = "red edge for a single-edge tree";
pub(crate) const P_CLASS: &str = "room for one class of size m";
pub(crate) const P_M_PROBE: &str = "closed neighbourhood of some m-set";
pub(crate) const P_S_PROBE: &str = "closed neighbourhood of some s-set";
pub(crate) const P_LEAVES: &str = "leaves >= 10Δ²εn";
pub(crate) const P_JOINED: &str = "red edges between an m-set and a disjoint s-set";
pub(crate) const P_CUT: &str = "red edges across the cut";

/// `Some((measured, threshold))` when the record can be recomputed from the input.
fn remeasure(
    r: &TraceRecord,
    c: &TwoColouring,
    t: &Tree,
    params: &ParamSet,
) -> Result<Option<(f64, f64)>, String> {
    let red = c.red();
    if r.scope.len() != r.scope_size || r.scope.iter().any(|&v| v >= c.n()) {
        return Err("scope does not match the colouring".into());
    }
    let pr = r.predicate.as_str();
    Ok(if pr == P_LEAVES {
        Some((t.leaves().len() as f64, leaf_threshold(t, params)))
    } else if (pr == P_M_PROBE || pr == P_S_PROBE) && r.holds {
        let u = r.witness.first().ok_or("probe without witness")?;
        let want = if pr == P_M_PROBE { r.m } else { u.len() };
        if u.len() != want {
            return Err("probe witness has the wrong size".into());
        }
        Some((closed_size(red, &r.scope, u) as f64, r.threshold))
    } else if pr == P_JOINED && !r.holds {
        if r.witness.len() != 2 {
            return Err("joinedness witness needs two sets".into());
        }
        Some((red_between(red, &r.witness[0], &r.witness[1]) as f64, r.threshold))
    } else if pr == P_CUT {
        if r.witness.len() != 3 {
            return Err("cut witness needs three parts".into());
        }
        let total: usize = r.witness.iter().map(Vec::len).sum();
        let mut all: Vec<usize> = r.witness.concat();
        all.sort_unstable();
        let mut sc = r.scope.clone();
        sc.sort_unstable();
        if total != r.scope_size || all != sc {
            return Err("cut parts do not partition the scope".into());
        }
        Some((red_between(red, &r.witness[1], &r.witness[2]) as f64, r.threshold))
    } else if pr == P_EDGE {
        let e = r.witness.first().filter(|e| e.len() == 2).ok_or("edge witness needs two vertices")?;
        Some((red_between(red, &e[..1], &e[1..]) as f64, r.threshold))
    } else if pr == P_VERTEX || pr == P_CLASS {
        Some((r.scope_size as f64, r.threshold))
    } else {
        None
    })
}

/// Outcome of [`solve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Outcome {
    Certificate(Certificate),
    /// Both the constructive cases and the budgeted exact searches gave up.
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub trace: CaseTrace,
    /// Pretty JSON of the cleaned vortex when that branch produced the answer.
    #[serde(skip)]
    pub vortex_dump: Option<String>,
}

impl SolveReport {
    pub fn certificate(&self) -> Option<&Certificate> {
        match &self.outcome {
            Outcome::Certificate(c) => Some(c),
            Outcome::Inconclusive { .. } => None,
        }
    }
}
