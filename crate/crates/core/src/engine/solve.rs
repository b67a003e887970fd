//! The induction on `k`: the two-colour base case, the expansion probes that
//! peel off a blue class, the three structural cases, and budgeted exact
//! searches as the last resort.

use super::connected::{embed_sparse_connected, ConnectedConfig};
use super::k2::{embed_k2, K2Config};
use super::leaves::{embed_many_leaves, LeavesConfig};
use super::split::{find_sparse_cut, split_disconnected};
use super::{
    input_digest, leaf_threshold, P_CLASS, P_CUT, P_EDGE, P_JOINED, P_LEAVES, P_M_PROBE, P_S_PROBE, P_VERTEX, Case, CaseTrace, Certificate, CertificateKind, Outcome, ParamRecord, Rule,
    SolveReport, Status, TraceRecord,
};
use crate::error::{Error, Result};
use crate::graph::search::{self, Coverage, CoverageQuery, Weights};
use crate::graph::{find_multipartite_in_complement, is_joined_within, Graph, Joinedness, MultipartiteSearch, TwoColouring};
use crate::oracle::{check_kind, tree_search, verify_certificate, TreeSearch};
use crate::params::{ParamSet, SearchConfig};
use crate::tree::Tree;
use crate::vertex_set::VertexSet;
use crate::vortex::dump_json;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    pub search: SearchConfig,
    pub k2: K2Config,
    pub leaves: LeavesConfig,
    pub connected: ConnectedConfig,
    /// Random starting sets tried by the sparse-cut search.
    pub cut_probes: usize,
    /// Node budget of each exact fallback search.
    pub exact_budget: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            search: SearchConfig::default(),
            k2: K2Config::default(),
            leaves: LeavesConfig::default(),
            connected: ConnectedConfig::default(),
            cut_probes: 8,
            exact_budget: 5_000_000,
        }
    }
}

impl SolveConfig {
    pub fn from_params(p: &ParamSet) -> Self {
        SolveConfig {
            k2: K2Config::from_params(p),
            ..Default::default()
        }
    }
}

/// Find a red `T` or a blue `K^{k-1}_s x K_m` in `colouring`.
#[allow(clippy::too_many_arguments)]
pub fn solve(
    colouring: &TwoColouring,
    t: &Tree,
    k: usize,
    s: usize,
    m: usize,
    params: &ParamSet,
    seed: u64,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    params.validate()?;
    if k == 0 || s == 0 || m == 0 {
        return Err(Error::Parameter("k, s and m must be positive".into()));
    }
    let mut sv = Solver {
        c: colouring,
        t,
        params,
        cfg,
        seed,
        trace: Vec::new(),
        vortex_dump: None,
    };
    let scope: Vec<usize> = (0..colouring.n()).collect();
    let found = sv.rec(&scope, k, s, m, 0)?;
    let outcome = match found {
        Some(kind) => {
            let cert = Certificate {
                kind,
                input_digest: input_digest(colouring, t, k, s, m),
                params: ParamRecord {
                    tree_n: t.n(),
                    tree_edges: t.edges().collect(),
                    colouring_n: colouring.n(),
                    k,
                    s,
                    m,
                    seed,
                    params: params.clone(),
                },
                status: Status::Verified,
            };
            verify_certificate(colouring, &cert).map_err(|e| Error::Internal(format!("certificate failed verification: {e}")))?;
            Outcome::Certificate(cert)
        }
        None => Outcome::Inconclusive {
            reason: "constructive cases failed and exact searches ran out of budget".into(),
        },
    };
    let vortex_dump = match &outcome {
        Outcome::Certificate(_) => sv.vortex_dump,
        Outcome::Inconclusive { .. } => None,
    };
    Ok(SolveReport {
        outcome,
        trace: CaseTrace { records: sv.trace },
        vortex_dump,
    })
}

struct Solver<'a> {
    c: &'a TwoColouring,
    t: &'a Tree,
    params: &'a ParamSet,
    cfg: &'a SolveConfig,
    seed: u64,
    trace: Vec<TraceRecord>,
    vortex_dump: Option<String>,
}

struct Rec<'r> {
    scope: &'r [usize],
    k: usize,
    m: usize,
    depth: usize,
}

fn lift(kind: CertificateKind, ids: &[usize]) -> CertificateKind {
    match kind {
        CertificateKind::RedTree { map } => CertificateKind::RedTree {
            map: map.into_iter().map(|(x, v)| (x, ids[v])).collect(),
        },
        CertificateKind::BlueWitness { classes } => CertificateKind::BlueWitness {
            classes: classes.into_iter().map(|c| c.into_iter().map(|v| ids[v]).collect()).collect(),
        },
    }
}

impl Solver<'_> {
    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        at: &Rec<'_>,
        case: Case,
        predicate: &str,
        rule: Rule,
        measured: f64,
        threshold: f64,
        witness: Vec<Vec<usize>>,
        outcome: impl Into<String>,
    ) -> bool {
        let holds = rule.apply(measured, threshold);
        self.trace.push(TraceRecord {
            depth: at.depth,
            case,
            scope_size: at.scope.len(),
            scope: at.scope.to_vec(),
            k: at.k,
            m: at.m,
            predicate: predicate.into(),
            rule,
            measured,
            threshold,
            holds,
            witness,
            outcome: outcome.into(),
        });
        holds
    }

    /// Accept a certificate (in input ids) only if it checks out on the input.
    fn accept(&mut self, at: &Rec<'_>, s: usize, kind: CertificateKind, case: Case) -> Option<CertificateKind> {
        match check_kind(self.c, self.t, at.k, s, at.m, &kind) {
            Ok(()) => Some(kind),
            Err(e) => {
                self.record(at, case, "certificate checks out", Rule::AtLeast, 0.0, 1.0, vec![], format!("rejected: {e}"));
                None
            }
        }
    }

    fn sub_seed(&self, depth: usize, salt: u64) -> u64 {
        self.seed ^ ((depth as u64) << 40) ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }

    /// Certificate in input ids for the colouring induced on `scope`.
    fn rec(&mut self, scope: &[usize], k: usize, s: usize, m: usize, depth: usize) -> Result<Option<CertificateKind>> {
        let t = self.t;
        let n = t.n();
        let nn = scope.len();
        let at = Rec { scope, k, m, depth };
        let g = self.c.red().induced(scope);
        // Trivial trees.
        if n == 1 {
            if self.record(&at, Case::Trivial, P_VERTEX, Rule::AtLeast, nn as f64, 1.0, vec![], "red tree") {
                return Ok(Some(CertificateKind::RedTree { map: vec![(0, scope[0])] }));
            }
        } else if n == 2 {
            if let Some((u, v)) = g.edges().next() {
                let w = vec![vec![scope[u], scope[v]]];
                self.record(&at, Case::Trivial, P_EDGE, Rule::AtLeast, 1.0, 1.0, w, "red tree");
                return Ok(Some(CertificateKind::RedTree {
                    map: vec![(0, scope[u]), (1, scope[v])],
                }));
            }
        }
        if k == 1 {
            if self.record(&at, Case::SingleClass, P_CLASS, Rule::AtLeast, nn as f64, m as f64, vec![], "blue witness") {
                return Ok(Some(CertificateKind::BlueWitness {
                    classes: vec![scope[..m].to_vec()],
                }));
            }
            return self.exact(&at, &g, s);
        }
        if k == 2 {
            return self.two_classes(&at, &g, s);
        }
        // Expansion probes: an m-set or s-set whose closed neighbourhood leaves
        // room for the induction on k - 1 in the rest.
        for (case, size, rest_m) in [(Case::SmallSetProbe, m, s), (Case::ClassProbe, s, m)] {
            let need = (k - 2) * (n - 1) + rest_m;
            if nn < need + size {
                continue;
            }
            if let Some(r) = self.probe(&at, &g, case, size, need, s, rest_m)? {
                return Ok(Some(r));
            }
        }
        // Many leaves.
        let leaves = t.leaves().len() as f64;
        let lt = leaf_threshold(t, self.params);
        if nn >= n && self.record(&at, Case::ManyLeaves, P_LEAVES, Rule::AtLeast, leaves, lt, vec![], "embed many leaves") {
            match embed_many_leaves(&g, t, self.params.mu, &self.cfg.leaves) {
                Ok((e, _)) => {
                    let kind = lift(CertificateKind::RedTree { map: e.pairs() }, scope);
                    if let Some(k) = self.accept(&at, s, kind, Case::ManyLeaves) {
                        return Ok(Some(k));
                    }
                }
                Err(e) => {
                    self.record(&at, Case::ManyLeaves, "many-leaves embedding succeeded", Rule::AtLeast, 0.0, 1.0, vec![], format!("failed: {e}"));
                }
            }
        }
        // Sparse cut.
        let cap = (self.params.lambda * n as f64).floor() as usize;
        if let Some(cut) = find_sparse_cut(&g, m, cap, self.sub_seed(depth, 1), self.cfg.cut_probes) {
            let ids = |v: &Vec<usize>| v.iter().map(|&x| scope[x]).collect::<Vec<_>>();
            let w = vec![ids(&cut.v0), ids(&cut.v1), ids(&cut.v2)];
            let red = cut.v1.iter().map(|&x| cut.v2.iter().filter(|&&y| g.has_edge(x, y)).count()).sum::<usize>();
            self.record(&at, Case::Disconnected, P_CUT, Rule::AtMost, red as f64, 0.0, w, "split");
            let search_cfg = self.cfg.search;
            let res = {
                let mut induction = |side: &[usize], kk: usize, ss: usize, mm: usize| -> Result<Option<CertificateKind>> {
                    let sub: Vec<usize> = side.iter().map(|&x| scope[x]).collect();
                    let back: std::collections::HashMap<usize, usize> = side.iter().map(|&x| (scope[x], x)).collect();
                    Ok(self.rec(&sub, kk, ss, mm, depth + 1)?.map(|kind| match kind {
                        CertificateKind::RedTree { map } => CertificateKind::RedTree {
                            map: map.into_iter().map(|(x, v)| (x, back[&v])).collect(),
                        },
                        CertificateKind::BlueWitness { classes } => CertificateKind::BlueWitness {
                            classes: classes.into_iter().map(|c| c.into_iter().map(|v| back[&v]).collect()).collect(),
                        },
                    }))
                };
                split_disconnected(&g, t, k, s, m, &cut, &mut induction, &search_cfg)
            };
            match res {
                Ok((kind, _)) => {
                    if let Some(k) = self.accept(&at, s, lift(kind, scope), Case::Disconnected) {
                        return Ok(Some(k));
                    }
                }
                Err(e) => {
                    self.record(&at, Case::Disconnected, "split produced a certificate", Rule::AtLeast, 0.0, 1.0, vec![], format!("failed: {e}"));
                }
            }
        } else {
            self.record(&at, Case::Disconnected, "sparse cut found", Rule::AtLeast, 0.0, 1.0, vec![], "no cut found");
        }
        // Well connected.
        if nn >= n {
            match embed_sparse_connected(&g, t, m, self.params, self.sub_seed(depth, 2), &self.cfg.connected) {
                Ok(r) => {
                    self.record(&at, Case::WellConnected, "sparse connected embedding succeeded", Rule::AtLeast, 1.0, 1.0, vec![], "red tree");
                    let kind = lift(CertificateKind::RedTree { map: r.embedding.pairs() }, scope);
                    if let Some(k) = self.accept(&at, s, kind, Case::WellConnected) {
                        return Ok(Some(k));
                    }
                }
                Err(e) => {
                    self.record(&at, Case::WellConnected, "sparse connected embedding succeeded", Rule::AtLeast, 0.0, 1.0, vec![], format!("failed: {e}"));
                }
            }
        }
        self.exact(&at, &g, s)
    }

    /// A `size`-set `U` with `|U ∪ N(U)| <= |scope| - need`; recurse on the rest.
    #[allow(clippy::too_many_arguments)]
    fn probe(
        &mut self,
        at: &Rec<'_>,
        g: &Graph,
        case: Case,
        size: usize,
        need: usize,
        s: usize,
        rest_m: usize,
    ) -> Result<Option<CertificateKind>> {
        let nn = g.n();
        let all = g.all_vertices();
        let threshold = (nn - need) as f64;
        let q = CoverageQuery {
            graph: g,
            candidates: (0..nn).collect(),
            target: &all,
            mode: Coverage::Closed,
            base: threshold,
            weights: Weights::Uniform(0.0),
            strict: false,
            lo: size,
            hi: size,
            prefix: None,
        };
        let v = search::find(&q, self.cfg.search.budget_for(size, nn), &self.cfg.search);
        let predicate = if case == Case::SmallSetProbe {
            P_M_PROBE
        } else {
            P_S_PROBE
        };
        let Some(u) = v.witness else {
            self.record(at, case, predicate, Rule::AtMost, threshold + 1.0, threshold, vec![], format!("none found ({:?})", v.mode));
            return Ok(None);
        };
        let us = VertexSet::from_iter(nn, u.iter().copied());
        let mut cl = us.clone();
        for &x in &u {
            cl.union_with(g.row(x));
        }
        let ids: Vec<usize> = u.iter().map(|&x| at.scope[x]).collect();
        self.record(at, case, predicate, Rule::AtMost, cl.len() as f64, threshold, vec![ids.clone()], "recurse on the rest");
        let rest: Vec<usize> = (0..nn).filter(|&x| !cl.contains(x)).map(|x| at.scope[x]).collect();
        match self.rec(&rest, at.k - 1, s, rest_m, at.depth + 1)? {
            Some(CertificateKind::RedTree { map }) => Ok(self.accept(at, s, CertificateKind::RedTree { map }, case)),
            Some(CertificateKind::BlueWitness { mut classes }) => {
                if case == Case::SmallSetProbe {
                    classes.push(ids);
                } else {
                    let last = classes.len() - 1;
                    classes.insert(last, ids);
                }
                Ok(self.accept(at, s, CertificateKind::BlueWitness { classes }, case))
            }
            None => Ok(None),
        }
    }

    fn two_classes(&mut self, at: &Rec<'_>, g: &Graph, s: usize) -> Result<Option<CertificateKind>> {
        let (n, nn, m) = (self.t.n(), g.n(), at.m);
        if m + s <= nn {
            match is_joined_within(g, &g.all_vertices(), m, s, &self.cfg.search)? {
                Joinedness::Witness { a, b } => {
                    let ids = |v: &[usize]| v.iter().map(|&x| at.scope[x]).collect::<Vec<_>>();
                    let w = vec![ids(&a), ids(&b)];
                    self.record(at, Case::Joinedness, P_JOINED, Rule::AtLeast, 0.0, 1.0, w.clone(), "blue witness");
                    let kind = CertificateKind::BlueWitness {
                        classes: vec![w[1].clone(), w[0].clone()],
                    };
                    if let Some(k) = self.accept(at, s, kind, Case::Joinedness) {
                        return Ok(Some(k));
                    }
                }
                Joinedness::Joined { mode } => {
                    self.record(at, Case::Joinedness, P_JOINED, Rule::AtLeast, 1.0, 1.0, vec![], format!("joined ({mode:?})"));
                }
            }
        } else {
            self.record(at, Case::Joinedness, "room for an m-set and a disjoint s-set", Rule::AtLeast, nn as f64, (m + s) as f64, vec![], "joined vacuously");
        }
        if nn >= n && n >= 2 {
            let m_eff = nn + 1 - n;
            match embed_k2(g, self.t, m_eff, self.params, &self.cfg.k2, self.sub_seed(at.depth, 3)) {
                Ok(r) => {
                    let case = if r.branch == "dense" { Case::Dense } else { Case::Vortex };
                    self.record(at, case, "two-colour embedding succeeded", Rule::AtLeast, 1.0, 1.0, vec![], r.branch);
                    let kind = lift(CertificateKind::RedTree { map: r.embedding.pairs() }, at.scope);
                    if let Some(k) = self.accept(at, s, kind, case) {
                        self.vortex_dump = r.vortex.as_ref().map(dump_json);
                        return Ok(Some(k));
                    }
                }
                Err(e) => {
                    self.record(at, Case::Dense, "two-colour embedding succeeded", Rule::AtLeast, 0.0, 1.0, vec![], format!("failed: {e}"));
                }
            }
        }
        self.exact(at, g, s)
    }

    /// Budgeted exact searches for either side of the dichotomy.
    fn exact(&mut self, at: &Rec<'_>, g: &Graph, s: usize) -> Result<Option<CertificateKind>> {
        let budget = self.cfg.exact_budget;
        let red = tree_search(g, self.t, budget);
        if let TreeSearch::Found(e) = &red {
            self.record(at, Case::Exact, "red copy of T found by search", Rule::AtLeast, 1.0, 1.0, vec![], "red tree");
            let kind = lift(CertificateKind::RedTree { map: e.pairs() }, at.scope);
            return Ok(self.accept(at, s, kind, Case::Exact));
        }
        let blue = find_multipartite_in_complement(g, at.k - 1, s, at.m, budget)?;
        if let MultipartiteSearch::Found(w) = blue {
            self.record(at, Case::Exact, "blue witness found by search", Rule::AtLeast, 1.0, 1.0, vec![], "blue witness");
            let kind = lift(CertificateKind::BlueWitness { classes: w.classes }, at.scope);
            return Ok(self.accept(at, s, kind, Case::Exact));
        }
        let status = |x: bool| if x { "absent" } else { "budget exhausted" };
        self.record(
            at,
            Case::Exact,
            "either object found by search",
            Rule::AtLeast,
            0.0,
            1.0,
            vec![],
            format!(
                "red tree {}, blue witness {}",
                status(red == TreeSearch::Absent),
                status(blue == MultipartiteSearch::Absent)
            ),
        );
        Ok(None)
    }
}
