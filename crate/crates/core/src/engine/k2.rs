//! Two colours: prune to an expander, then the dense embedder for small `m`
//! and the vortex embedder otherwise.

use serde::Serialize;

use super::dense::{embed_dense, DenseConfig};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{prune_to_expander, Graph};
use crate::params::{Audit, ParamSet, Policy, SearchConfig};
use crate::tree::Tree;
use crate::vortex::{embed_via_vortex, CleanedVortex, VortexEmbedConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct K2Config {
    /// Pruned `m'` below this goes to the dense embedder first.
    pub dense_threshold: usize,
    pub dense: DenseConfig,
    pub vortex: VortexEmbedConfig,
    pub search: SearchConfig,
}

impl Default for K2Config {
    fn default() -> Self {
        K2Config {
            dense_threshold: 8,
            dense: DenseConfig::default(),
            vortex: VortexEmbedConfig::default(),
            search: SearchConfig::fast(),
        }
    }
}

impl K2Config {
    pub fn from_params(p: &ParamSet) -> Self {
        K2Config {
            vortex: VortexEmbedConfig::from_params(p),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct K2Embedding {
    pub embedding: Embedding,
    /// `dense` or `vortex`.
    pub branch: &'static str,
    pub removed: Vec<usize>,
    pub m_prime: usize,
    pub audit: Audit,
    #[serde(skip)]
    pub vortex: Option<CleanedVortex>,
}

/// Embed `T` into an `(m, μn)`-joined host with `|G| = |T| + m - 1`.
pub fn embed_k2(g: &Graph, t: &Tree, m: usize, params: &ParamSet, cfg: &K2Config, seed: u64) -> Result<K2Embedding> {
    let n = g.n();
    if m == 0 || t.n() + m > n + 1 {
        return Err(Error::Precondition(format!(
            "need |T| <= |G| - m + 1, got |T|={}, |G|={n}, m={m}",
            t.n()
        )));
    }
    let mut audit = Audit::default();
    audit.require(Policy::Audit, t.n() + m == n + 1, "|G| = |T| + m - 1")?;
    let n0 = ((params.mu * t.n() as f64).ceil() as usize).max(1);
    let removed = match prune_to_expander(g, m, n0, params.big_d as f64, Policy::Audit, &cfg.search) {
        Ok(p) => {
            audit.extend(&p.audit);
            p.w
        }
        Err(e) => {
            audit.note(format!("pruning skipped: {e}"));
            Vec::new()
        }
    };
    let keep: Vec<usize> = (0..n).filter(|v| removed.binary_search(v).is_err()).collect();
    let h = g.induced(&keep);
    if t.n() > h.n() {
        return Err(Error::Internal("pruning removed too much".into()));
    }
    let m_prime = h.n() + 1 - t.n();
    let dense_first = m_prime < cfg.dense_threshold;
    let run = |dense: bool| -> Result<(Embedding, Audit, Option<CleanedVortex>)> {
        if dense {
            let r = embed_dense(&h, t, m_prime, params.mu, seed, &cfg.dense)?;
            Ok((r.embedding, r.audit, None))
        } else {
            let r = embed_via_vortex(&h, t, m_prime, &cfg.vortex, seed)?;
            Ok((r.embedding, r.audit, Some(r.cleaned)))
        }
    };
    let name = |dense: bool| if dense { "dense" } else { "vortex" };
    let (branch, (local, a, vortex)) = match run(dense_first) {
        Ok(r) => (dense_first, r),
        Err(e1) => match run(!dense_first) {
            Ok(r) => {
                audit.note(format!("{} branch failed: {e1}", name(dense_first)));
                (!dense_first, r)
            }
            Err(e2) => {
                return Err(Error::AllBranchesFailed(format!(
                    "{}: {e1}; {}: {e2}",
                    name(dense_first),
                    name(!dense_first)
                )))
            }
        },
    };
    audit.extend(&a);
    let embedding = local.lift(&keep, n)?;
    embedding
        .validate_complete(t, g)
        .map_err(|e| Error::Internal(format!("lifted embedding invalid: {e}")))?;
    Ok(K2Embedding {
        embedding,
        branch: name(branch),
        removed,
        m_prime,
        audit,
        vortex,
    })
}
