use serde::Serialize;

use super::search::{self, Coverage, CoverageQuery, Weights};
use super::Graph;
use crate::error::{Error, Result};
use crate::params::{Audit, CheckMode, Policy, SearchConfig};
use crate::vertex_set::VertexSet;

/// `N(S) = ∪ N(s) \ S`.
pub fn external_neighbourhood(g: &Graph, s: &VertexSet) -> Result<VertexSet> {
    let mut n = closed_neighbourhood(g, s)?;
    n.difference_with(s);
    Ok(n)
}

/// `N'(S) = ∪ N(s)`, which may meet `S`.
pub fn closed_neighbourhood(g: &Graph, s: &VertexSet) -> Result<VertexSet> {
    g.validate_set(s)?;
    let mut n = VertexSet::new(g.n());
    for v in s.iter() {
        n.union_with(g.row(v));
    }
    Ok(n)
}

/// `N(S, U) = N(S) ∩ U`.
pub fn neighbourhood_in(g: &Graph, s: &VertexSet, within: &VertexSet) -> Result<VertexSet> {
    let mut n = external_neighbourhood(g, s)?;
    n.intersect_with(within);
    Ok(n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Joinedness {
    Joined { mode: CheckMode },
    /// Disjoint `|A| = m`, `|B| = m2` with no edge between them.
    Witness { a: Vec<usize>, b: Vec<usize> },
}

impl Joinedness {
    pub fn holds(&self) -> bool {
        matches!(self, Joinedness::Joined { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Expansion {
    Expander { mode: CheckMode },
    Witness { u: Vec<usize> },
}

impl Expansion {
    pub fn holds(&self) -> bool {
        matches!(self, Expansion::Expander { .. })
    }
}

/// Is `G` `(m, m2)`-joined?
pub fn is_joined(g: &Graph, m: usize, m2: usize, cfg: &SearchConfig) -> Result<Joinedness> {
    is_joined_within(g, &g.all_vertices(), m, m2, cfg)
}

/// Joinedness of the induced subgraph `G[mask]`, without relabelling.
pub fn is_joined_within(
    g: &Graph,
    mask: &VertexSet,
    m: usize,
    m2: usize,
    cfg: &SearchConfig,
) -> Result<Joinedness> {
    g.validate_set(mask)?;
    if m == 0 || m2 == 0 {
        return Err(Error::InvalidInput("joinedness sizes must be positive".into()));
    }
    let size = mask.len();
    if m + m2 > size {
        return Err(Error::InvalidInput(format!(
            "m + m2 = {} exceeds the {size} available vertices",
            m + m2
        )));
    }
    let (small, large) = (m.min(m2), m.max(m2));
    // A small-side set U works iff at least `large` vertices of the mask avoid U ∪ N(U).
    let q = CoverageQuery {
        graph: g,
        candidates: mask.to_vec(),
        target: mask,
        mode: Coverage::Closed,
        base: (size - large) as f64,
        weights: Weights::Uniform(0.0),
        strict: false,
        lo: small,
        hi: small,
        prefix: None,
    };
    let v = search::find(&q, cfg.budget_for(small, size), cfg);
    Ok(match v.witness {
        None => Joinedness::Joined { mode: v.mode },
        Some(u) => {
            let us = VertexSet::from_iter(g.n(), u.iter().copied());
            let mut far = mask.clone();
            far.difference_with(&us);
            for &x in &u {
                far.difference_with(g.row(x));
            }
            let other: Vec<usize> = far.iter().take(large).collect();
            if m <= m2 {
                Joinedness::Witness { a: u, b: other }
            } else {
                Joinedness::Witness { a: other, b: u }
            }
        }
    })
}

/// Is `G` a `(d, m)`-expander: `|N(U)| >= d|U|` for all nonempty `|U| <= m`?
pub fn is_expander(g: &Graph, d: f64, m: usize, cfg: &SearchConfig) -> Result<Expansion> {
    expander_within(g, &g.all_vertices(), d, m, cfg)
}

/// Expansion of `G[mask]` measured inside the mask.
pub(crate) fn expander_within(
    g: &Graph,
    mask: &VertexSet,
    d: f64,
    m: usize,
    cfg: &SearchConfig,
) -> Result<Expansion> {
    relative_expansion(g, mask, mask, d, m, cfg)
}

/// Does every nonempty `U ⊆ from` with `|U| <= m` satisfy `|N(U, into)| >= d|U|`?
pub(crate) fn relative_expansion(
    g: &Graph,
    from: &VertexSet,
    into: &VertexSet,
    d: f64,
    m: usize,
    cfg: &SearchConfig,
) -> Result<Expansion> {
    g.validate_set(from)?;
    g.validate_set(into)?;
    if m == 0 {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    let q = CoverageQuery {
        graph: g,
        candidates: from.to_vec(),
        target: into,
        mode: Coverage::Open,
        base: 0.0,
        weights: Weights::Uniform(d),
        strict: true,
        lo: 1,
        hi: m.min(from.len()),
        prefix: None,
    };
    let v = search::find(&q, cfg.budget_for(m, from.len()), cfg);
    Ok(match v.witness {
        None => Expansion::Expander { mode: v.mode },
        Some(u) => Expansion::Witness { u },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PruneResult {
    pub w: Vec<usize>,
    pub m_prime: usize,
    /// Weakest verification mode among the post-checks.
    pub mode: CheckMode,
    pub audit: Audit,
}

/// Grow `W` greedily: add the (size, lex)-least `Y` with `|W ∪ Y| < m` and
/// `|N(W ∪ Y, into)| <= d|W ∪ Y|` until none exists.
pub(crate) fn grow_waste(
    g: &Graph,
    candidates: &VertexSet,
    into: &VertexSet,
    m: usize,
    d: f64,
    cfg: &SearchConfig,
) -> (VertexSet, CheckMode) {
    let mut w = VertexSet::new(g.n());
    let mut mode = CheckMode::Exact;
    loop {
        let room = m.saturating_sub(1).saturating_sub(w.len());
        if room == 0 {
            break;
        }
        let mut cand = candidates.clone();
        cand.difference_with(&w);
        let q = CoverageQuery {
            graph: g,
            candidates: cand.to_vec(),
            target: into,
            mode: Coverage::Open,
            base: 0.0,
            weights: Weights::Uniform(d),
            strict: false,
            lo: 1,
            hi: room,
            prefix: Some(&w),
        };
        let v = search::find(&q, cfg.budget_for(m, g.n()), cfg);
        mode = mode.meet(v.mode);
        match v.witness {
            Some(y) => {
                for u in y {
                    w.insert(u);
                }
            }
            None => break,
        }
    }
    (w, mode)
}

fn check_joined_hypothesis(
    g: &Graph,
    mask: &VertexSet,
    m: usize,
    n0: usize,
    cfg: &SearchConfig,
) -> Result<CheckMode> {
    if m + n0 > mask.len() {
        return Err(Error::Size(format!(
            "m + n0 = {} exceeds {} vertices",
            m + n0,
            mask.len()
        )));
    }
    match is_joined_within(g, mask, m, n0, cfg)? {
        Joinedness::Joined { mode } => Ok(mode),
        Joinedness::Witness { a, b } => {
            let mut witness = a;
            witness.extend(b);
            Err(Error::Contract {
                what: format!("host is not ({m},{n0})-joined"),
                witness,
            })
        }
    }
}

/// Under `Audit`, a failed joinedness hypothesis is recorded and the
/// post-checks decide.
fn joined_hypothesis(
    g: &Graph,
    m: usize,
    n0: usize,
    policy: Policy,
    audit: &mut Audit,
    cfg: &SearchConfig,
) -> Result<CheckMode> {
    match check_joined_hypothesis(g, &g.all_vertices(), m, n0, cfg) {
        Ok(mode) => Ok(mode),
        Err(Error::Size(s)) if policy == Policy::Audit => {
            audit.note(s);
            Ok(CheckMode::Exact)
        }
        Err(Error::Contract { what, witness }) if policy == Policy::Audit => {
            audit.note(format!("{what} (witness {witness:?})"));
            Ok(CheckMode::Exact)
        }
        Err(e) => Err(e),
    }
}

/// Remove fewer than `m` vertices so that the rest is a `(d, m)`-expander
/// that is `(m', n0 + dm)`-joined.
pub fn prune_to_expander(
    g: &Graph,
    m: usize,
    n0: usize,
    d: f64,
    policy: Policy,
    cfg: &SearchConfig,
) -> Result<PruneResult> {
    if m == 0 || n0 == 0 || d <= 0.0 {
        return Err(Error::Parameter("m, n0 and d must be positive".into()));
    }
    let need = n0 as f64 + (2.0 * d + 2.0) * m as f64;
    let mut audit = Audit::default();
    audit.require(policy, g.n() as f64 >= need, format!("|G| >= n0 + (2d+2)m = {need}"))?;
    let all = g.all_vertices();
    let mut mode = joined_hypothesis(g, m, n0, policy, &mut audit, cfg)?;
    let (w, grow_mode) = grow_waste(g, &all, &all, m, d, cfg);
    mode = mode.meet(grow_mode);
    let m_prime = m - w.len();
    let rest = all.difference(&w);
    match expander_within(g, &rest, d, m, cfg)? {
        Expansion::Expander { mode: em } => mode = mode.meet(em),
        Expansion::Witness { u } => {
            return Err(Error::Contract {
                what: format!("G - W is not a ({d},{m})-expander"),
                witness: u,
            })
        }
    }
    let n1 = n0 + (d * m as f64).ceil() as usize;
    if m_prime + n1 <= rest.len() {
        match is_joined_within(g, &rest, m_prime, n1, cfg)? {
            Joinedness::Joined { mode: jm } => mode = mode.meet(jm),
            Joinedness::Witness { a, b } => {
                let mut witness = a;
                witness.extend(b);
                return Err(Error::Contract {
                    what: format!("G - W is not ({m_prime},{n1})-joined"),
                    witness,
                });
            }
        }
    } else {
        // Vacuous: no disjoint pair of those sizes fits.
        audit.note(format!("({m_prime},{n1})-joinedness is vacuous on {} vertices", rest.len()));
    }
    Ok(PruneResult {
        w: w.to_vec(),
        m_prime,
        mode,
        audit,
    })
}

/// Remove fewer than `m` vertices so that every `U` outside `W` with
/// `|U| <= m` has `|N(U, V \ W)| >= d|U|`.
pub fn prune_relative_expansion(
    g: &Graph,
    v: &VertexSet,
    m: usize,
    n0: usize,
    d: f64,
    policy: Policy,
    cfg: &SearchConfig,
) -> Result<PruneResult> {
    g.validate_set(v)?;
    if m == 0 || n0 == 0 || d <= 0.0 {
        return Err(Error::Parameter("m, n0 and d must be positive".into()));
    }
    let need = n0 as f64 + (2.0 * d + 2.0) * m as f64;
    let mut audit = Audit::default();
    audit.require(policy, v.len() as f64 >= need, format!("|V| >= n0 + (2d+2)m = {need}"))?;
    let all = g.all_vertices();
    let mut mode = joined_hypothesis(g, m, n0, policy, &mut audit, cfg)?;
    let (w, grow_mode) = grow_waste(g, &all, v, m, d, cfg);
    mode = mode.meet(grow_mode);
    let from = all.difference(&w);
    let into = v.difference(&w);
    match relative_expansion(g, &from, &into, d, m, cfg)? {
        Expansion::Expander { mode: em } => mode = mode.meet(em),
        Expansion::Witness { u } => {
            return Err(Error::Contract {
                what: format!("some U has fewer than {d}|U| neighbours in V \\ W"),
                witness: u,
            })
        }
    }
    Ok(PruneResult {
        m_prime: m - w.len(),
        w: w.to_vec(),
        mode,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, v: &[usize]) -> VertexSet {
        VertexSet::from_iter(n, v.iter().copied())
    }

    #[test]
    fn neighbourhoods() {
        let k3 = Graph::complete(3);
        assert_eq!(external_neighbourhood(&k3, &set(3, &[0])).unwrap().to_vec(), vec![1, 2]);
        let p = Graph::path(3);
        assert_eq!(external_neighbourhood(&p, &set(3, &[0, 2])).unwrap().to_vec(), vec![1]);
        let e = Graph::empty(3);
        assert!(external_neighbourhood(&e, &set(3, &[0])).unwrap().is_empty());
        assert!(external_neighbourhood(&e, &set(4, &[0])).is_err());
    }

    #[test]
    fn joined_examples() {
        let cfg = SearchConfig::default();
        assert!(is_joined(&Graph::complete(4), 1, 1, &cfg).unwrap().holds());
        assert_eq!(
            is_joined(&Graph::cycle(4), 1, 1, &cfg).unwrap(),
            Joinedness::Witness { a: vec![0], b: vec![2] }
        );
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(
            is_joined(&two, 2, 2, &cfg).unwrap(),
            Joinedness::Witness { a: vec![0, 1], b: vec![2, 3] }
        );
        assert!(is_joined(&two, 3, 2, &cfg).is_err());
    }

    #[test]
    fn expander_examples() {
        let cfg = SearchConfig::default();
        let k5 = Graph::complete(5);
        assert!(is_expander(&k5, 2.0, 1, &cfg).unwrap().holds());
        assert_eq!(
            is_expander(&k5, 2.0, 2, &cfg).unwrap(),
            Expansion::Witness { u: vec![0, 1] }
        );
        assert!(is_expander(&Graph::complete_bipartite(1, 4), 1.0, 1, &cfg).unwrap().holds());
    }

    fn k9_plus_isolated() -> Graph {
        let mut e = Vec::new();
        for u in 0..9 {
            for v in u + 1..9 {
                e.push((u, v));
            }
        }
        Graph::from_edges(10, &e).unwrap()
    }

    #[test]
    fn prune_examples() {
        let cfg = SearchConfig::default();
        let r = prune_to_expander(&Graph::complete(10), 2, 1, 2.0, Policy::Audit, &cfg).unwrap();
        assert!(r.w.is_empty());
        assert_eq!(r.m_prime, 2);
        let r = prune_to_expander(&k9_plus_isolated(), 2, 1, 3.0, Policy::Audit, &cfg).unwrap();
        assert_eq!(r.w, vec![9]);
        assert_eq!(r.m_prime, 1);
        assert!(matches!(
            prune_to_expander(&Graph::complete(10), 2, 1, 3.0, Policy::Enforce, &cfg),
            Err(Error::Size(_))
        ));
    }
}
