//! Well-connected hosts and trees with few leaves: grow `T` extendably in a
//! random fifth `V_0` of the host and reroute long bare paths through the
//! rest, joining them back to `V_0` through a reserved anchor set `X`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::extend::{ExtendConfig, ExtendableEmbedding};
use crate::graph::search::{self, Coverage, CoverageQuery, Weights};
use crate::graph::{grow_waste, Graph};
use crate::params::{Audit, CheckMode, ParamSet, SearchConfig};
use crate::tree::{traversal_order, OrderKind, Tree};
use crate::vertex_set::VertexSet;

/// Internally vertex-disjoint `U`-`U2` paths with exactly `ell` edges whose
/// interior lies in `Z`, extracted greedily by a bounded depth-first search.
pub fn connect_through(g: &Graph, z: &VertexSet, u: &[usize], u2: &[usize], ell: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let target = VertexSet::from_iter(n, u2.iter().copied());
    let mut out = Vec::new();
    if ell == 0 {
        return out;
    }
    if ell == 1 {
        for &a in u {
            for &b in u2 {
                if a != b && g.has_edge(a, b) {
                    out.push(vec![a, b]);
                }
            }
        }
        return out;
    }
    let mut free = z.clone();
    for &x in u.iter().chain(u2) {
        free.remove(x);
    }
    for &a in u {
        loop {
            let mut path = vec![a];
            let mut budget = 20_000u64;
            if !extend_path(g, &free, &target, ell, &mut path, &mut budget) {
                break;
            }
            for &x in &path[1..path.len() - 1] {
                free.remove(x);
            }
            out.push(path);
        }
    }
    out
}

fn extend_path(g: &Graph, free: &VertexSet, target: &VertexSet, ell: usize, path: &mut Vec<usize>, budget: &mut u64) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let last = *path.last().expect("non-empty");
    if path.len() == ell {
        if let Some(&b) = g.neighbours(last).iter().find(|&&b| target.contains(b) && b != path[0]) {
            path.push(b);
            return true;
        }
        return false;
    }
    for &w in g.neighbours(last) {
        if free.contains(w) && !path.contains(&w) {
            path.push(w);
            if extend_path(g, free, target, ell, path, budget) {
                return true;
            }
            path.pop();
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum LongPath {
    Found { path: Vec<usize> },
    /// The exhaustive search finished without a path.
    Absent,
    Exhausted,
}

/// A path with `length` edges: greedy extension with rotations from a few
/// starts, then an exhaustive depth-first search within `budget` nodes.
pub fn find_long_path(g: &Graph, length: usize, budget: u64) -> LongPath {
    let n = g.n();
    if length + 1 > n {
        return LongPath::Absent;
    }
    if length == 0 {
        return LongPath::Found { path: vec![0] };
    }
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    for &s in starts.iter().take(8) {
        if let Some(p) = rotate_extend(g, s, length) {
            return LongPath::Found { path: p };
        }
    }
    let mut nodes = 0u64;
    let mut on = vec![false; n];
    for s in 0..n {
        let mut path = vec![s];
        on[s] = true;
        match dfs_path(g, length, &mut path, &mut on, &mut nodes, budget) {
            Some(true) => return LongPath::Found { path },
            Some(false) => on[s] = false,
            None => return LongPath::Exhausted,
        }
    }
    LongPath::Absent
}

fn rotate_extend(g: &Graph, s: usize, length: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let mut path = vec![s];
    let mut on = vec![false; n];
    on[s] = true;
    let mut rotations = 0;
    while path.len() <= length {
        let end = *path.last().unwrap();
        if let Some(&w) = g.neighbours(end).iter().find(|&&w| !on[w]) {
            on[w] = true;
            path.push(w);
            continue;
        }
        // Rotate: end ~ path[i] turns the path into path[..=i] + reverse(path[i+1..]).
        if rotations >= 4 * n {
            return None;
        }
        rotations += 1;
        let pos = g
            .neighbours(end)
            .iter()
            .filter_map(|&w| path.iter().position(|&x| x == w))
            .filter(|&i| i + 2 < path.len())
            .find(|&i| g.neighbours(path[i + 1]).iter().any(|&w| !on[w]))
            .or_else(|| {
                g.neighbours(end)
                    .iter()
                    .filter_map(|&w| path.iter().position(|&x| x == w))
                    .find(|&i| i + 2 < path.len())
            })?;
        path[pos + 1..].reverse();
    }
    Some(path)
}

fn dfs_path(g: &Graph, length: usize, path: &mut Vec<usize>, on: &mut [bool], nodes: &mut u64, budget: u64) -> Option<bool> {
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    if path.len() == length + 1 {
        return Some(true);
    }
    let end = *path.last().unwrap();
    for &w in g.neighbours(end) {
        if on[w] {
            continue;
        }
        on[w] = true;
        path.push(w);
        match dfs_path(g, length, path, on, nodes, budget)? {
            true => return Some(true),
            false => {
                path.pop();
                on[w] = false;
            }
        }
    }
    Some(false)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectedConfig {
    pub retries: usize,
    /// Random `m`-sets checked for `|N(U, V_0)| >= n/10` and for connectors.
    pub probe_trials: usize,
    pub path_budget: u64,
    pub extend: ExtendConfig,
    pub search: SearchConfig,
}

impl Default for ConnectedConfig {
    fn default() -> Self {
        ConnectedConfig {
            retries: 4,
            probe_trials: 8,
            path_budget: 50_000,
            extend: ExtendConfig::fast(),
            search: SearchConfig::fast(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathRecord {
    /// Order index of the first path vertex.
    pub step: usize,
    pub vertices: Vec<usize>,
    pub in_z: usize,
}

/// Bookkeeping of the growth process.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Ledger {
    /// Order indices ending a rerouted path (their image lies in `X`).
    pub i_a: Vec<usize>,
    /// Order indices grown inside `V_0'`.
    pub i_b: Vec<usize>,
    pub x_used: usize,
    pub z_used: usize,
    pub paths: Vec<PathRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseConnected {
    pub embedding: Embedding,
    pub ledger: Ledger,
    pub attempts: usize,
    pub mode: CheckMode,
    pub audit: Audit,
}

/// Embed a tree with few leaves into a well-connected host.
pub fn embed_sparse_connected(
    g: &Graph,
    t: &Tree,
    m: usize,
    params: &ParamSet,
    seed: u64,
    cfg: &ConnectedConfig,
) -> Result<SparseConnected> {
    let n = t.n();
    if g.n() < n || m == 0 {
        return Err(Error::Precondition(format!("host has {} < {n} vertices or m = 0", g.n())));
    }
    let mut last = None;
    for attempt in 0..=cfg.retries {
        let s = seed.wrapping_add((attempt as u64) << 24);
        match connected_attempt(g, t, m, params, s, cfg) {
            Ok(mut r) => {
                r.attempts = attempt + 1;
                return Ok(r);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn connected_attempt(g: &Graph, t: &Tree, m: usize, params: &ParamSet, seed: u64, cfg: &ConnectedConfig) -> Result<SparseConnected> {
    let n = t.n();
    let hn = g.n();
    let big_l = params.big_l.max(1);
    let ell = params.ell.max(1);
    let mut audit = Audit::default();
    let mut mode = CheckMode::Exact;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zs = VertexSet::new(hn);
    let mut v0 = VertexSet::new(hn);
    let mut v1 = VertexSet::new(hn);
    for v in 0..hn {
        match rng.gen_range(0..5) {
            0 => zs.insert(v),
            1 => v0.insert(v),
            _ => v1.insert(v),
        };
    }
    if 10 * v1.len() < 11 * n {
        audit.note(format!("|V_1| = {} < 11n/10", v1.len()));
    }
    // Every m-set should see n/10 vertices of V_0.
    if m <= hn {
        let q = CoverageQuery {
            graph: g,
            candidates: (0..hn).collect(),
            target: &v0,
            mode: Coverage::Raw,
            base: n as f64 / 10.0,
            weights: Weights::Uniform(0.0),
            strict: true,
            lo: m,
            hi: m,
            prefix: None,
        };
        let v = search::find(&q, cfg.search.budget_for(m, hn), &cfg.search);
        mode = mode.meet(v.mode);
        if let Some(u) = v.witness {
            audit.note(format!("m-set {u:?} sees fewer than n/10 vertices of V_0"));
        }
    }
    // Connectors through Z between random pairs of m-sets.
    let delta_n = (params.delta * n as f64).floor() as usize;
    let all: Vec<usize> = (0..hn).collect();
    for _ in 0..cfg.probe_trials {
        if 2 * m > hn {
            break;
        }
        let pick: Vec<usize> = all.choose_multiple(&mut rng, 2 * m).copied().collect();
        let paths = connect_through(g, &zs, &pick[..m], &pick[m..], ell);
        if paths.len() < delta_n.max(1) {
            audit.note(format!("fewer than δn connectors of length {ell} through Z"));
            break;
        }
    }
    let x_len = (n.div_ceil(20)).max((n - 1).div_ceil(big_l) + 2);
    let v0_list = v0.to_vec();
    if v0_list.len() < x_len + 1 {
        return Err(Error::StepFailure {
            step: 0,
            detail: format!("|V_0| = {} leaves no room for |X| = {x_len}", v0_list.len()),
        });
    }
    let x0 = VertexSet::from_iter(hn, v0_list.iter().copied().take(x_len));
    let d = (4 * t.max_degree()).max(3);
    let (w, wm) = grow_waste(g, &g.all_vertices(), &v0.difference(&x0), m, (3 * d) as f64, &cfg.search);
    mode = mode.meet(wm);
    let v0p = v0.difference(&w);
    let x = x0.difference(&w);
    let local: Vec<usize> = v0p.to_vec();
    let mut to_local = vec![usize::MAX; hn];
    for (i, &v) in local.iter().enumerate() {
        to_local[v] = i;
    }
    let h = g.induced(&local);
    let xl: Vec<usize> = x.iter().map(|v| to_local[v]).collect();
    let mut state = ExtendableEmbedding::isolated(&h, d, m, &xl, cfg.extend)?;
    // Vertex order: start at a leaf and keep going along paths.
    let t1 = (0..n).find(|&v| t.degree(v) <= 1).unwrap_or(0);
    let order = traversal_order(t, t1, OrderKind::PathGreedy)?;
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let parent_in_order: Vec<usize> = order
        .iter()
        .map(|&v| t.neighbours(v).iter().copied().find(|&w| pos[w] < pos[v]).unwrap_or(usize::MAX))
        .collect();
    let mut emb = Embedding::new(n, hn);
    let v_first = x.first().ok_or_else(|| Error::StepFailure { step: 0, detail: "X is empty".into() })?;
    emb.set(t1, v_first)?;
    let mut ledger = Ledger {
        i_a: vec![0],
        ..Default::default()
    };
    let mut x_used = 1;
    let mut j = 1;
    while j < n {
        let tj = order[j];
        let sj = parent_in_order[j];
        let ws = emb.get(sj).expect("parent first");
        // a) reroute a bare path of L+1 vertices outside V_0, ending in X.
        if j + big_l < n && (j..=j + big_l).all(|i| t.degree(order[i]) == 2) {
            if let Some(p) = reroute(g, ws, &zs, &v0, &x, emb.used(), big_l, ell, cfg.path_budget) {
                let in_z = p.iter().filter(|&&v| zs.contains(v)).count();
                let end = *p.last().unwrap();
                if p.len() != big_l + 1 || in_z > 2 * ell || !x.contains(end) {
                    return Err(Error::Internal(format!("rerouted path {p:?} breaks its shape")));
                }
                for (off, &v) in p.iter().enumerate() {
                    emb.set(order[j + off], v)?;
                }
                ledger.z_used += in_z;
                ledger.i_a.push(j + big_l);
                ledger.paths.push(PathRecord { step: j, vertices: p, in_z });
                x_used += 1;
                j += big_l + 1;
                continue;
            }
        }
        // b) extendable growth inside V_0'.
        if v0p.contains(ws) {
            let xs = &x;
            let lv = &local;
            if let Ok(y) = state.add_leaf_filtered(to_local[ws], |y| !xs.contains(lv[y])) {
                emb.set(tj, local[y])?;
                ledger.i_b.push(j);
                j += 1;
                continue;
            }
        }
        // c) stop.
        let mut rest = v1.clone();
        rest.difference_with(emb.used());
        let probe = find_long_path(&g.induced(&rest.to_vec()), 2 * big_l * m, cfg.path_budget);
        return Err(Error::StepFailure {
            step: j,
            detail: format!(
                "stopped at frontier vertex {ws}; ledger {}; long path in unused V_1: {}",
                serde_json::to_string(&ledger).expect("plain data"),
                match probe {
                    LongPath::Found { .. } => "found",
                    LongPath::Absent => "absent",
                    LongPath::Exhausted => "budget exhausted",
                }
            ),
        });
    }
    audit.extend(state.audit());
    ledger.x_used = x_used;
    // Counting checks on the ledger.
    if x_used > 1 + (n - 1) / big_l {
        return Err(Error::Internal(format!("{x_used} anchors used, bound {}", 1 + (n - 1) / big_l)));
    }
    if ledger.z_used > 2 * ell * ledger.paths.len() {
        return Err(Error::Internal("too many connector vertices used".into()));
    }
    if 50 * ledger.i_b.len() >= n {
        audit.note(format!("|I_b| = {} is not below n/50", ledger.i_b.len()));
    }
    emb.validate_complete(t, g)
        .map_err(|e| Error::Internal(format!("connected embedding invalid: {e}")))?;
    Ok(SparseConnected {
        embedding: emb,
        ledger,
        attempts: 1,
        mode,
        audit,
    })
}

/// `v_j .. v_{j+L}` after `start`: interior outside `V_0` and unused, at most
/// `2ℓ` vertices in `Z`, last vertex an unused anchor in `X`.
#[allow(clippy::too_many_arguments)]
fn reroute(
    g: &Graph,
    start: usize,
    z: &VertexSet,
    v0: &VertexSet,
    x: &VertexSet,
    used: &VertexSet,
    big_l: usize,
    ell: usize,
    budget: u64,
) -> Option<Vec<usize>> {
    struct S<'a> {
        g: &'a Graph,
        z: &'a VertexSet,
        v0: &'a VertexSet,
        x: &'a VertexSet,
        used: &'a VertexSet,
        len: usize,
        zcap: usize,
        nodes: u64,
        budget: u64,
    }
    impl S<'_> {
        fn go(&mut self, path: &mut Vec<usize>, from: usize, zc: usize) -> bool {
            self.nodes += 1;
            if self.nodes > self.budget {
                return false;
            }
            if path.len() == self.len - 1 {
                if let Some(&e) = self
                    .g
                    .neighbours(from)
                    .iter()
                    .find(|&&e| self.x.contains(e) && !self.used.contains(e))
                {
                    path.push(e);
                    return true;
                }
                return false;
            }
            // Outside V_0, preferring vertices outside Z.
            let mut nb: Vec<usize> = self
                .g
                .neighbours(from)
                .iter()
                .copied()
                .filter(|&w| !self.v0.contains(w) && !self.used.contains(w) && !path.contains(&w))
                .collect();
            nb.sort_by_key(|&w| self.z.contains(w));
            for w in nb {
                let nz = zc + self.z.contains(w) as usize;
                if nz > self.zcap {
                    continue;
                }
                path.push(w);
                if self.go(path, w, nz) {
                    return true;
                }
                path.pop();
                if self.nodes > self.budget {
                    return false;
                }
            }
            false
        }
    }
    let mut s = S {
        g,
        z,
        v0,
        x,
        used,
        len: big_l + 1,
        zcap: 2 * ell,
        nodes: 0,
        budget,
    };
    let mut path = Vec::with_capacity(big_l + 1);
    if s.go(&mut path, start, 0) {
        Some(path)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connector_examples() {
        // U = {0,1}, U2 = {2,3}, Z = {4,5,6} joined to everything.
        let mut e = Vec::new();
        for z in 4..7 {
            for u in 0..4 {
                e.push((u, z));
            }
        }
        let g = Graph::from_edges(7, &e).unwrap();
        let z = VertexSet::from_iter(7, 4..7);
        let p = connect_through(&g, &z, &[0, 1], &[2, 3], 2);
        assert!(p.len() >= 2);
        let empty = VertexSet::new(7);
        assert!(connect_through(&g, &empty, &[0, 1], &[2, 3], 2).is_empty());
        assert!(connect_through(&g, &empty, &[0, 1], &[2, 3], 3).is_empty());
    }

    #[test]
    fn long_path_examples() {
        match find_long_path(&Graph::complete(10), 9, 1_000_000) {
            LongPath::Found { path } => assert_eq!(path.len(), 10),
            other => panic!("{other:?}"),
        }
        assert_eq!(find_long_path(&Graph::empty(5), 1, 1_000_000), LongPath::Absent);
        assert_eq!(find_long_path(&Graph::complete_bipartite(2, 5), 5, 1_000_000), LongPath::Absent);
    }
}
