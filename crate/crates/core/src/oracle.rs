//! Exact checks at desk scale: containment tests, small Ramsey numbers,
//! certificate verification and a generator of joined test hosts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::engine::{input_digest, Certificate, CertificateKind};
use crate::error::{Error, Result};
use crate::graph::{find_multipartite_in_complement, is_joined, Graph, MultipartiteSearch, MultipartiteWitness, TwoColouring};
use crate::params::{CheckMode, SearchConfig};
use crate::tree::{traversal_order, OrderKind, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeSearch {
    Found(Embedding),
    Absent,
    Exhausted,
}

/// Backtracking search for a copy of `tree` in `host`, every root image tried.
pub fn tree_search(host: &Graph, tree: &Tree, budget: u64) -> TreeSearch {
    let n = tree.n();
    let hn = host.n();
    if n > hn {
        return TreeSearch::Absent;
    }
    let root = (0..n).max_by_key(|&v| (tree.degree(v), std::cmp::Reverse(v))).unwrap_or(0);
    let order = traversal_order(tree, root, OrderKind::Bfs).expect("root is a tree vertex");
    let parents = tree.parents_from(root);
    let mut emb = Embedding::new(n, hn);
    let mut nodes = 0u64;
    for r in 0..hn {
        if host.degree(r) < tree.degree(root) {
            continue;
        }
        emb.set(root, r).expect("fresh");
        match place(host, tree, &order, &parents, 1, &mut emb, &mut nodes, budget) {
            Some(true) => return TreeSearch::Found(emb),
            Some(false) => {
                emb.unset(root);
            }
            None => return TreeSearch::Exhausted,
        }
    }
    TreeSearch::Absent
}

#[allow(clippy::too_many_arguments)]
fn place(
    host: &Graph,
    tree: &Tree,
    order: &[usize],
    parents: &[Option<usize>],
    i: usize,
    emb: &mut Embedding,
    nodes: &mut u64,
    budget: u64,
) -> Option<bool> {
    if i == order.len() {
        return Some(true);
    }
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    let x = order[i];
    let w = emb.get(parents[x].expect("non-root")).expect("parent placed");
    for &y in host.neighbours(w) {
        if emb.used().contains(y) || host.degree(y) < tree.degree(x) {
            continue;
        }
        emb.set(x, y).expect("unused");
        if place(host, tree, order, parents, i + 1, emb, nodes, budget)? {
            return Some(true);
        }
        emb.unset(x);
    }
    Some(false)
}

/// A red copy of `t`; `None` is proven absence.
pub fn contains_red_tree(c: &TwoColouring, t: &Tree) -> Option<Embedding> {
    match tree_search(c.red(), t, u64::MAX) {
        TreeSearch::Found(e) => Some(e),
        _ => None,
    }
}

/// A blue `K^{k-1}_s x K_m`; `None` is proven absence.
pub fn contains_blue_witness(c: &TwoColouring, k_minus_1: usize, s: usize, m: usize) -> Result<Option<MultipartiteWitness>> {
    Ok(match find_multipartite_in_complement(c.red(), k_minus_1, s, m, u64::MAX)? {
        MultipartiteSearch::Found(w) => Some(w),
        _ => None,
    })
}

/// Complete multipartite graph with `k_minus_1` classes of size `s` and one of size `m`.
pub fn multipartite_graph(k_minus_1: usize, s: usize, m: usize) -> Graph {
    let mut class = Vec::new();
    for c in 0..k_minus_1 {
        class.extend(std::iter::repeat(c).take(s));
    }
    class.extend(std::iter::repeat(k_minus_1).take(m));
    let n = class.len();
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if class[u] != class[v] {
                e.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &e).expect("valid edges")
}

/// Check an emitted certificate against the colouring it claims to be about.
pub fn verify_certificate(c: &TwoColouring, cert: &Certificate) -> std::result::Result<(), String> {
    let p = &cert.params;
    if p.colouring_n != c.n() {
        return Err(format!("certificate is for {} vertices, colouring has {}", p.colouring_n, c.n()));
    }
    let t = cert.tree().map_err(|e| format!("tree in certificate: {e}"))?;
    let digest = input_digest(c, &t, p.k, p.s, p.m);
    if digest != cert.input_digest {
        return Err(format!("input digest mismatch: recorded {}, computed {digest}", cert.input_digest));
    }
    check_kind(c, &t, p.k, p.s, p.m, &cert.kind)
}

/// The certificate body alone: a red copy of `t` or a blue `K^{k-1}_s x K_m`.
pub fn check_kind(c: &TwoColouring, t: &Tree, k: usize, s: usize, m: usize, kind: &CertificateKind) -> std::result::Result<(), String> {
    let n = c.n();
    match kind {
        CertificateKind::RedTree { map } => {
            let mut img = vec![usize::MAX; t.n()];
            let mut used = vec![false; n];
            for &(x, v) in map {
                if x >= t.n() {
                    return Err(format!("tree vertex {x} out of range"));
                }
                if v >= n {
                    return Err(format!("host vertex {v} out of range"));
                }
                if img[x] != usize::MAX {
                    return Err(format!("tree vertex {x} mapped twice"));
                }
                if used[v] {
                    return Err(format!("host vertex {v} used twice"));
                }
                img[x] = v;
                used[v] = true;
            }
            if let Some(x) = img.iter().position(|&v| v == usize::MAX) {
                return Err(format!("tree vertex {x} unmapped"));
            }
            for (a, b) in t.edges() {
                if !c.red().has_edge(img[a], img[b]) {
                    return Err(format!("tree edge {a}-{b} maps to blue pair {}-{}", img[a], img[b]));
                }
            }
            Ok(())
        }
        CertificateKind::BlueWitness { classes } => {
            if classes.len() != k {
                return Err(format!("{} classes, expected {k}", classes.len()));
            }
            let mut owner = vec![usize::MAX; n];
            for (i, cl) in classes.iter().enumerate() {
                let want = if i + 1 == k { m } else { s };
                if cl.len() != want {
                    return Err(format!("class {i} has {} vertices, expected {want}", cl.len()));
                }
                for &v in cl {
                    if v >= n {
                        return Err(format!("vertex {v} out of range"));
                    }
                    if owner[v] != usize::MAX {
                        return Err(format!("vertex {v} in classes {} and {i}", owner[v]));
                    }
                    owner[v] = i;
                }
            }
            for (i, a) in classes.iter().enumerate() {
                for b in &classes[i + 1..] {
                    for &u in a {
                        for &v in b {
                            if c.red().has_edge(u, v) {
                                return Err(format!("red pair {}-{} between classes", u.min(v), u.max(v)));
                            }
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

/// Small pattern graph with bitmask rows.
#[derive(Clone, Debug)]
struct Pattern {
    n: usize,
    adj: Vec<u32>,
    edges: Vec<(usize, usize)>,
}

impl Pattern {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut adj = vec![0u32; n];
        let edges: Vec<(usize, usize)> = g.edges().collect();
        for &(u, v) in &edges {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        Pattern { n, adj, edges }
    }

    /// Does `host` (rows over `nh <= 32` vertices) contain a copy using the host edge `u`-`v`?
    fn through_edge(&self, host: &[u32], nh: usize, u: usize, v: usize) -> bool {
        self.edges.iter().any(|&(a, b)| {
            [(u, v), (v, u)].iter().any(|&(x, y)| {
                let mut map = vec![usize::MAX; self.n];
                map[a] = x;
                map[b] = y;
                self.extend(host, nh, &mut map, (1u32 << x) | (1u32 << y))
            })
        })
    }

    fn anywhere(&self, host: &[u32], nh: usize) -> bool {
        if self.n > nh {
            return false;
        }
        let mut map = vec![usize::MAX; self.n];
        self.extend(host, nh, &mut map, 0)
    }

    fn extend(&self, host: &[u32], nh: usize, map: &mut [usize], used: u32) -> bool {
        // Next: the unmapped vertex with most mapped neighbours.
        let mut best = None;
        let mut best_k = -1i32;
        for x in 0..self.n {
            if map[x] != usize::MAX {
                continue;
            }
            let k = (0..self.n).filter(|&y| map[y] != usize::MAX && self.adj[x] >> y & 1 == 1).count() as i32;
            if k > best_k {
                best_k = k;
                best = Some(x);
            }
        }
        let Some(x) = best else { return true };
        let full = if nh == 32 { u32::MAX } else { (1u32 << nh) - 1 };
        let mut cand = full & !used;
        for y in 0..self.n {
            if map[y] != usize::MAX && self.adj[x] >> y & 1 == 1 {
                cand &= host[map[y]];
            }
        }
        while cand != 0 {
            let h = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            map[x] = h;
            if self.extend(host, nh, map, used | 1 << h) {
                return true;
            }
        }
        map[x] = usize::MAX;
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RamseyValue {
    Exact { value: usize },
    /// `upper` is `None` when nothing was certified above the cap.
    Bounds { lower: usize, upper: Option<usize> },
}

/// A colouring of `K_n` avoiding both targets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AvoidingColouring {
    pub n: usize,
    pub red_edges: Vec<(usize, usize)>,
}

impl AvoidingColouring {
    pub fn colouring(&self) -> TwoColouring {
        TwoColouring::from_red(Graph::from_edges(self.n, &self.red_edges).expect("valid edges"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RamseyResult {
    pub value: RamseyValue,
    pub method: String,
    /// One avoiding colouring for every `N` below the value (or up to the cap).
    pub witnesses: Vec<AvoidingColouring>,
}

impl RamseyResult {
    pub fn exact(&self) -> Option<usize> {
        match self.value {
            RamseyValue::Exact { value } => Some(value),
            RamseyValue::Bounds { .. } => None,
        }
    }
}

pub const DEFAULT_RAMSEY_CAP: usize = 8;

/// Edges fixed per parallel work unit.
const PREFIX_EDGES: usize = 6;

/// `R(T, H)` by pruned backtracking over edge colourings of `K_N`, `N <= cap`.
pub fn brute_ramsey(t: &Tree, h: &Graph, cap: usize) -> Result<RamseyResult> {
    if cap > 12 {
        return Err(Error::TooLarge(format!("cap {cap} exceeds 12")));
    }
    let pt = Pattern::new(&t.to_graph());
    let ph = Pattern::new(h);
    let mut witnesses = Vec::new();
    for n in 1..=cap {
        match avoiding_colouring(&pt, &ph, n) {
            Some(red_edges) => witnesses.push(AvoidingColouring { n, red_edges }),
            None => {
                return Ok(RamseyResult {
                    value: RamseyValue::Exact { value: n },
                    method: "pruned-backtracking".into(),
                    witnesses,
                })
            }
        }
    }
    Ok(RamseyResult {
        value: RamseyValue::Bounds { lower: cap + 1, upper: None },
        method: "pruned-backtracking".into(),
        witnesses,
    })
}

/// Red edges of a colouring of `K_n` with neither a red `T` nor a blue `H`.
fn avoiding_colouring(pt: &Pattern, ph: &Pattern, n: usize) -> Option<Vec<(usize, usize)>> {
    // Edgeless patterns appear as soon as there is room.
    if (pt.edges.is_empty() && pt.n <= n) || (ph.edges.is_empty() && ph.n <= n) {
        return None;
    }
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    if edges.is_empty() {
        return Some(vec![]);
    }
    // All blue is the one colouring without a red edge; otherwise relabel so (0,1) is red.
    let blue_all: Vec<u32> = (0..n).map(|u| ((1u32 << n) - 1) & !(1 << u)).collect();
    if !ph.anywhere(&blue_all, n) && !pt.anywhere(&vec![0; n], n) {
        return Some(vec![]);
    }
    let mut red = vec![0u32; n];
    let blue = vec![0u32; n];
    red[0] |= 1 << 1;
    red[1] |= 1;
    if pt.through_edge(&red, n, 0, 1) {
        return None;
    }
    let b = PREFIX_EDGES.min(edges.len() - 1);
    let rest = &edges[1..];
    (0u32..1 << b).into_par_iter().find_map_first(|prefix| {
        let mut r = red.clone();
        let mut bl = blue.clone();
        for (i, &(u, v)) in rest[..b].iter().enumerate() {
            let (rows, pat) = if prefix >> i & 1 == 1 { (&mut r, pt) } else { (&mut bl, ph) };
            rows[u] |= 1 << v;
            rows[v] |= 1 << u;
            if pat.through_edge(rows, n, u, v) {
                return None;
            }
        }
        let mut chosen: Vec<bool> = (0..b).map(|i| prefix >> i & 1 == 1).collect();
        if colour_rest(pt, ph, n, &rest[b..], &mut r, &mut bl, &mut chosen) {
            let mut out = vec![edges[0]];
            out.extend(rest.iter().zip(&chosen).filter(|(_, &c)| c).map(|(&e, _)| e));
            Some(out)
        } else {
            None
        }
    })
}

fn colour_rest(
    pt: &Pattern,
    ph: &Pattern,
    n: usize,
    rest: &[(usize, usize)],
    red: &mut [u32],
    blue: &mut [u32],
    chosen: &mut Vec<bool>,
) -> bool {
    let Some((&(u, v), tail)) = rest.split_first() else {
        return true;
    };
    for is_red in [true, false] {
        let (rows, pat) = if is_red { (&mut *red, pt) } else { (&mut *blue, ph) };
        rows[u] |= 1 << v;
        rows[v] |= 1 << u;
        let ok = !pat.through_edge(rows, n, u, v);
        if ok {
            chosen.push(is_red);
            if colour_rest(pt, ph, n, tail, red, blue, chosen) {
                return true;
            }
            chosen.pop();
        }
        let rows = if is_red { &mut *red } else { &mut *blue };
        rows[u] &= !(1 << v);
        rows[v] &= !(1 << u);
    }
    false
}

/// A seeded `G(n, p)` host verified `(m, ⌈μn⌉)`-joined.
#[derive(Clone, Debug)]
pub struct JoinedGraph {
    pub graph: Graph,
    pub mode: CheckMode,
    pub attempts: usize,
    pub p: f64,
}

pub const JOINED_RETRIES: usize = 20;

/// Edge probability of [`random_joined_graph`]: the largest chance `x` that
/// a vertex misses a fixed `m`-set with `C(n, m)·P(Bin(n, x) >= ⌈μn⌉) <= 1/100`,
/// turned into `p = 1 - x^{1/m}`.
pub fn joined_edge_probability(n: usize, m: usize, mu: f64) -> f64 {
    let m = m.max(1);
    let m2 = ((mu * n as f64).ceil() as usize).max(1);
    let log_sets = ln_choose(n, m);
    let fails = |x: f64| log_sets + ln_binomial_tail(n, x, m2) > (0.01f64).ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if fails(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    1.0 - lo.powf(1.0 / m as f64)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n + 1 - i) as f64 / i as f64).ln()).sum()
}

/// `ln P(Bin(n, x) >= k)`.
fn ln_binomial_tail(n: usize, x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 || k == 0 {
        return 0.0;
    }
    let terms: Vec<f64> = (k..=n)
        .map(|j| ln_choose(n, j) + j as f64 * x.ln() + (n - j) as f64 * (1.0 - x).ln())
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Accepted edge counts: `p·C(n,2)` within five standard deviations.
pub fn density_band(n: usize, p: f64) -> (f64, f64) {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    let sd = (pairs * p * (1.0 - p)).sqrt();
    (pairs * p - 5.0 * sd, pairs * p + 5.0 * sd)
}

pub fn random_joined_graph(n: usize, m: usize, mu: f64, seed: u64) -> Result<JoinedGraph> {
    let m2 = ((mu * n as f64).ceil() as usize).max(1);
    if m == 0 || m + m2 > n {
        return Err(Error::Parameter(format!("cannot be ({m}, {m2})-joined on {n} vertices")));
    }
    let p = joined_edge_probability(n, m, mu);
    let (lo, hi) = density_band(n, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = String::new();
    for attempt in 1..=JOINED_RETRIES {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    e.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, &e)?;
        let ec = g.edge_count() as f64;
        if ec < lo || ec > hi {
            last = format!("edge count {ec} outside [{lo:.0}, {hi:.0}]");
            continue;
        }
        match is_joined(&g, m, m2, &SearchConfig::default())? {
            crate::graph::Joinedness::Joined { mode } => {
                return Ok(JoinedGraph { graph: g, mode, attempts: attempt, p })
            }
            crate::graph::Joinedness::Witness { .. } => last = format!("({m}, {m2})-joined"),
        }
    }
    Err(Error::RetriesExhausted { property: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::burr_colouring;

    #[test]
    fn containment_examples() {
        assert!(contains_red_tree(&TwoColouring::all_red(5), &Tree::path(4)).is_some());
        assert!(contains_red_tree(&TwoColouring::all_blue(5), &Tree::path(2)).is_none());
        let burr = burr_colouring(4, 2, 1).unwrap();
        assert!(contains_red_tree(&burr, &Tree::path(4)).is_none());
        assert!(contains_red_tree(&burr, &Tree::star(3)).is_none());
        assert!(contains_blue_witness(&TwoColouring::all_blue(6), 2, 2, 2).unwrap().is_some());
        assert!(contains_blue_witness(&TwoColouring::all_red(6), 2, 2, 2).unwrap().is_none());
        let burr = burr_colouring(3, 3, 1).unwrap();
        assert!(contains_blue_witness(&burr, 2, 2, 1).unwrap().is_none());
    }

    #[test]
    fn ramsey_small_values() {
        let k3 = Graph::complete(3);
        assert_eq!(brute_ramsey(&Tree::path(3), &k3, 8).unwrap().exact(), Some(5));
        assert_eq!(brute_ramsey(&Tree::path(2), &Graph::complete(2), 8).unwrap().exact(), Some(2));
        assert_eq!(brute_ramsey(&Tree::single(), &k3, 8).unwrap().exact(), Some(1));
    }

    #[test]
    fn witnesses_avoid_both_targets() {
        let t = Tree::path(3);
        let h = Graph::complete(3);
        let r = brute_ramsey(&t, &h, 8).unwrap();
        assert_eq!(r.witnesses.len(), 4);
        for w in &r.witnesses {
            let c = w.colouring();
            assert!(contains_red_tree(&c, &t).is_none());
            assert!(!Pattern::new(&h).anywhere(&rows(&c.blue()), c.n()));
        }
    }

    fn rows(g: &Graph) -> Vec<u32> {
        (0..g.n()).map(|u| g.neighbours(u).iter().fold(0, |a, &v| a | 1 << v)).collect()
    }

    #[test]
    fn multipartite_shape() {
        let g = multipartite_graph(2, 2, 1);
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 8);
    }
}
