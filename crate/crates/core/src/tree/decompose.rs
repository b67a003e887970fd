use std::collections::VecDeque;

use serde::Serialize;

use super::Tree;
use crate::error::{Error, Result};
use crate::params::{Audit, Policy, EPS};

/// Path whose internal vertices have degree 2 in the tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BarePath {
    pub vertices: Vec<usize>,
}

/// Two subtrees sharing the single vertex `v`, a leaf of `t1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Split {
    pub t1: Vec<usize>,
    pub t2: Vec<usize>,
    pub v: usize,
}

/// Edge-disjoint subtrees `T_1..T_l` (vertex lists of the parent tree),
/// consecutive ones sharing `links[i]`, a leaf of `subtrees[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeDecomposition {
    pub subtrees: Vec<Vec<usize>>,
    pub links: Vec<usize>,
    /// `n_1 = |T_1|` and `n_i = |T_i| - 1` after that.
    pub sizes: Vec<usize>,
}

/// Vertex-disjoint bare paths with exactly `k` edges.
///
/// Every maximal bare path is cut into consecutive blocks of `k + 1` vertices,
/// skipping branch vertices so that blocks from different paths cannot meet.
pub fn find_bare_paths(t: &Tree, k: usize) -> Result<Vec<BarePath>> {
    if k == 0 {
        return Err(Error::InvalidInput("path length k must be at least 1".into()));
    }
    let n = t.n();
    let mut out = Vec::new();
    if n < 2 {
        return Ok(out);
    }
    for u in 0..n {
        if t.degree(u) == 2 {
            continue;
        }
        for &w in t.neighbours(u) {
            let mut path = vec![u];
            let (mut prev, mut cur) = (u, w);
            while t.degree(cur) == 2 {
                path.push(cur);
                let next = t.neighbours(cur).iter().copied().find(|&x| x != prev).unwrap();
                prev = cur;
                cur = next;
            }
            path.push(cur);
            if cur < u {
                continue;
            }
            let usable: Vec<usize> = path
                .iter()
                .copied()
                .filter(|&x| t.degree(x) <= 2)
                .collect();
            for block in usable.chunks_exact(k + 1) {
                out.push(BarePath {
                    vertices: block.to_vec(),
                });
            }
        }
    }
    Ok(out)
}

/// Lower bound on the number of disjoint bare paths of length `k`.
pub fn bare_path_bound(t: &Tree, k: usize) -> i64 {
    let leaves = t.leaves().len() as f64;
    let b = t.n() as f64 / (k as f64 + 1.0) - 2.0 * leaves + 2.0;
    (b - EPS).ceil().max(0.0) as i64
}

struct Rooted {
    order: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    size: Vec<usize>,
}

/// Root the subtree induced on `inside` at `root`.
fn root_within(t: &Tree, inside: &[bool], root: usize) -> Rooted {
    let n = t.n();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut size = vec![0; n];
    let mut order = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        for &w in t.neighbours(u) {
            if inside[w] && !seen[w] {
                seen[w] = true;
                parent[w] = u;
                depth[w] = depth[u] + 1;
                order.push(w);
            }
        }
    }
    for &u in order.iter().rev() {
        size[u] += 1;
        if parent[u] != usize::MAX {
            size[parent[u]] += size[u];
        }
    }
    Rooted {
        order,
        parent,
        depth,
        size,
    }
}

/// Farthest-vertex split of the subtree on `inside`, using `delta` as the degree bound.
fn split_within(t: &Tree, inside: &[bool], root: usize, gamma: f64, delta: usize) -> Split {
    let r = root_within(t, inside, root);
    let count = r.order.len() as f64;
    let need = gamma * count / (2.0 * delta as f64);
    let v = r
        .order
        .iter()
        .copied()
        .filter(|&u| u != root && r.size[u] as f64 + EPS >= need)
        .min_by_key(|&u| (std::cmp::Reverse(r.depth[u]), u))
        .expect("a child of the root always qualifies");
    let mut in_t2 = vec![false; t.n()];
    let mut t2 = Vec::new();
    for &u in &r.order {
        if u == v || (r.parent[u] != usize::MAX && in_t2[r.parent[u]]) {
            in_t2[u] = true;
            t2.push(u);
        }
    }
    let mut t1: Vec<usize> = r.order.iter().copied().filter(|&u| !in_t2[u] || u == v).collect();
    t1.sort_unstable();
    t2.sort_unstable();
    Split { t1, t2, v }
}

/// Split `T` into `T_1 ∋ t` and `T_2` sharing one vertex, with
/// `γn/2Δ <= |T_2| <= γn`.
pub fn split_tree(t: &Tree, gamma: f64, root: usize) -> Result<Split> {
    t.validate_vertex(root)?;
    let n = t.n();
    if n < 2 {
        return Err(Error::Parameter("split needs at least 2 vertices".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0,1), got {gamma}")));
    }
    let delta = t.max_degree();
    if gamma * (n as f64) + EPS < delta as f64 {
        return Err(Error::Parameter(format!(
            "gamma * n = {} is below the maximum degree {delta}",
            gamma * n as f64
        )));
    }
    Ok(split_within(t, &vec![true; n], root, gamma, delta))
}

fn check_gamma(gamma: f64, below: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < below) {
        return Err(Error::Parameter(format!("gamma must lie in (0,{below}), got {gamma}")));
    }
    Ok(())
}

/// Repeatedly split off the far part until it has at most `N + 1` vertices.
pub fn descending_decomposition(
    t: &Tree,
    gamma: f64,
    big_n: usize,
    root: usize,
) -> Result<TreeDecomposition> {
    t.validate_vertex(root)?;
    check_gamma(gamma, 0.5)?;
    let n = t.n();
    let delta = t.max_degree().max(1);
    if big_n + 1 >= n {
        return Err(Error::Parameter(format!("need N < n - 1, got N={big_n}, n={n}")));
    }
    if (big_n as f64) + EPS < delta as f64 / gamma {
        return Err(Error::Parameter(format!(
            "need N >= Δ/γ = {}, got {big_n}",
            delta as f64 / gamma
        )));
    }
    Ok(descend(t, gamma, big_n, root, delta))
}

fn descend(t: &Tree, gamma: f64, big_n: usize, root: usize, delta: usize) -> TreeDecomposition {
    let n = t.n();
    let mut inside = vec![true; n];
    let mut count = n;
    let mut cur_root = root;
    let mut subtrees = Vec::new();
    let mut links = Vec::new();
    while count - 1 > big_n {
        let s = split_within(t, &inside, cur_root, gamma, delta);
        for &u in &s.t1 {
            if u != s.v {
                inside[u] = false;
            }
        }
        count = s.t2.len();
        subtrees.push(s.t1);
        links.push(s.v);
        cur_root = s.v;
    }
    let mut last: Vec<usize> = (0..n).filter(|&u| inside[u]).collect();
    last.sort_unstable();
    subtrees.push(last);
    let sizes = sizes_of(&subtrees);
    TreeDecomposition {
        subtrees,
        links,
        sizes,
    }
}

fn sizes_of(subtrees: &[Vec<usize>]) -> Vec<usize> {
    subtrees
        .iter()
        .enumerate()
        .map(|(i, s)| if i == 0 { s.len() } else { s.len() - 1 })
        .collect()
}

/// Exactly `k` parts, `(γ/8Δ, 2γ)`-descending, with `t` in the first.
///
/// Under [`Policy::Audit`] the size hypothesis is recorded instead of
/// enforced, and the target size of the last part is raised to `2Δ/γ` so the
/// underlying decomposition stays defined.
pub fn fixed_length_decomposition(
    t: &Tree,
    gamma: f64,
    k: usize,
    root: usize,
    policy: Policy,
) -> Result<(TreeDecomposition, Audit)> {
    t.validate_vertex(root)?;
    check_gamma(gamma, 0.25)?;
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let n = t.n();
    let delta = t.max_degree().max(1);
    let mut audit = Audit::default();
    let threshold = (8.0 * delta as f64 / gamma).powi(k as i32 + 1);
    if (n as f64) <= threshold {
        if policy == Policy::Enforce {
            return Err(Error::Parameter(format!(
                "need n > (8Δ/γ)^(k+1) = {threshold:.0}, got n={n}"
            )));
        }
        audit.note(format!("n > (8Δ/γ)^(k+1) = {threshold:.0}"));
    }
    if k == 1 {
        let all: Vec<usize> = (0..n).collect();
        return Ok((
            TreeDecomposition {
                subtrees: vec![all],
                links: vec![],
                sizes: vec![n],
            },
            audit,
        ));
    }
    let half = gamma / 2.0;
    let raw = 0.5 * (gamma / (8.0 * delta as f64)).powi(k as i32) * n as f64;
    let floor_n = (delta as f64 / half - EPS).ceil();
    let big_n = raw.max(floor_n).floor() as usize;
    if big_n + 1 >= n {
        return Err(Error::Parameter(format!(
            "tree with {n} vertices is too small for {k} parts at gamma={gamma}"
        )));
    }
    let dec = descend(t, half, big_n, root, delta);
    let l = dec.subtrees.len();
    if l < k {
        return Err(Error::Parameter(format!(
            "descending decomposition produced {l} < {k} parts"
        )));
    }
    let mut subtrees: Vec<Vec<usize>> = dec.subtrees[..k - 1].to_vec();
    let mut tail: Vec<usize> = dec.subtrees[k - 1..].iter().flatten().copied().collect();
    tail.sort_unstable();
    tail.dedup();
    subtrees.push(tail);
    let links = dec.links[..k - 1].to_vec();
    let sizes = sizes_of(&subtrees);
    Ok((
        TreeDecomposition {
            subtrees,
            links,
            sizes,
        },
        audit,
    ))
}

/// `γ1 n_i - slack <= n_{i+1} <= γ2 n_i + slack` for all consecutive entries.
pub fn is_descending(sizes: &[usize], g1: f64, g2: f64, slack: f64) -> bool {
    sizes.windows(2).all(|w| {
        let (a, b) = (w[0] as f64, w[1] as f64);
        g1 * a - slack - EPS <= b && b <= g2 * a + slack + EPS
    })
}

/// Check the three defining clauses of an `n`-decomposition.
pub fn validate_decomposition(t: &Tree, dec: &TreeDecomposition) -> std::result::Result<(), String> {
    let n = t.n();
    let l = dec.subtrees.len();
    if l == 0 {
        return Err("no parts".into());
    }
    if dec.links.len() + 1 != l || dec.sizes.len() != l {
        return Err("links/sizes do not match the number of parts".into());
    }
    let mut edge_owner = vec![usize::MAX; n];
    let mut members: Vec<Vec<bool>> = Vec::with_capacity(l);
    let mut total_edges = 0;
    for (i, s) in dec.subtrees.iter().enumerate() {
        let mut m = vec![false; n];
        for &v in s {
            if v >= n || m[v] {
                return Err(format!("part {i} has a bad or repeated vertex {v}"));
            }
            m[v] = true;
        }
        // Connected with |V| - 1 internal edges, i.e. a subtree.
        let internal: usize = s
            .iter()
            .map(|&v| t.neighbours(v).iter().filter(|&&w| m[w] && w > v).count())
            .sum();
        if internal + 1 != s.len() {
            return Err(format!("part {i} is not a subtree"));
        }
        for &v in s {
            if let Some(p) = t.parent(v) {
                if m[p] {
                    if edge_owner[v] != usize::MAX {
                        return Err(format!("edge {v}-{p} lies in parts {} and {i}", edge_owner[v]));
                    }
                    edge_owner[v] = i;
                }
            }
        }
        total_edges += internal;
        members.push(m);
        let want = if i == 0 { s.len() } else { s.len() - 1 };
        if dec.sizes[i] != want {
            return Err(format!("size of part {i} is {want}, tuple says {}", dec.sizes[i]));
        }
    }
    if total_edges != n - 1 {
        return Err(format!("parts cover {total_edges} of {} edges", n - 1));
    }
    for i in 0..l - 1 {
        let shared: Vec<usize> = dec.subtrees[i]
            .iter()
            .copied()
            .filter(|&v| members[i + 1][v])
            .collect();
        if shared != [dec.links[i]] {
            return Err(format!("parts {i} and {} share {shared:?}", i + 1));
        }
        let v = dec.links[i];
        let deg = t.neighbours(v).iter().filter(|&&w| members[i][w]).count();
        if deg != 1 && dec.subtrees[i].len() > 1 {
            return Err(format!("link {v} is not a leaf of part {i}"));
        }
        for j in i + 2..l {
            if dec.subtrees[i].iter().any(|&v| members[j][v]) {
                return Err(format!("parts {i} and {j} intersect"));
            }
        }
    }
    Ok(())
}

/// Greedy set with pairwise distance at least `dist`: take the deepest
/// remaining vertex (from root 0, smallest id on ties) and discard its
/// `(dist - 1)`-ball.
pub fn separated_at_distance(t: &Tree, dist: usize) -> Vec<usize> {
    let n = t.n();
    let depth = t.distances_from(0);
    let mut by_depth: Vec<usize> = (0..n).collect();
    by_depth.sort_by_key(|&v| (std::cmp::Reverse(depth[v]), v));
    let mut blocked = vec![false; n];
    let mut mark = vec![usize::MAX; n];
    let mut out = Vec::new();
    for v in by_depth {
        if blocked[v] {
            continue;
        }
        out.push(v);
        let mut q = VecDeque::from([(v, 0usize)]);
        mark[v] = v;
        blocked[v] = true;
        while let Some((u, d)) = q.pop_front() {
            if d + 1 >= dist {
                continue;
            }
            for &w in t.neighbours(u) {
                if mark[w] != v {
                    mark[w] = v;
                    blocked[w] = true;
                    q.push_back((w, d + 1));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// A `(2k+2)`-separated set of size at least `n / (4k+4)Δ^k`.
pub fn separated_set(t: &Tree, k: usize) -> Result<Vec<usize>> {
    let delta = t.max_degree().max(1) as f64;
    let need = 3.0 * delta.powi(k as i32);
    if (t.n() as f64) < need {
        return Err(Error::Size(format!("need |T| >= 3Δ^k = {need}, got {}", t.n())));
    }
    Ok(separated_at_distance(t, 2 * k + 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_path_examples() {
        assert!(find_bare_paths(&Tree::star(5), 2).unwrap().is_empty());
        assert_eq!(find_bare_paths(&Tree::path(7), 2).unwrap().len(), 2);
        assert_eq!(find_bare_paths(&Tree::path(10), 3).unwrap().len(), 2);
        assert_eq!(find_bare_paths(&Tree::single(), 1).unwrap().len(), 0);
    }

    #[test]
    fn split_examples() {
        let p = Tree::path(10);
        let s = split_tree(&p, 0.5, 0).unwrap();
        assert!(s.t2.len() as f64 >= 10.0 * 0.5 / 4.0 && s.t2.len() <= 5);
        assert!(!s.t2.contains(&0));
        assert_eq!(s.t1.len() + s.t2.len(), 11);
        let b = Tree::binary(15);
        let s = split_tree(&b, 0.4, 0).unwrap();
        assert!((1..=6).contains(&s.t2.len()));
        assert!(split_tree(&Tree::star(5), 0.1, 0).is_err());
    }

    #[test]
    fn descending_on_path() {
        let p = Tree::path(200);
        let d = descending_decomposition(&p, 0.25, 20, 0).unwrap();
        validate_decomposition(&p, &d).unwrap();
        assert!(is_descending(&d.sizes, 1.0 / 32.0, 0.5, 1.0));
        assert!(d.subtrees[0].contains(&0));
        assert!(descending_decomposition(&p, 0.25, 199, 0).is_err());
    }

    #[test]
    fn separated_examples() {
        assert_eq!(separated_set(&Tree::path(9), 1).unwrap(), vec![0, 4, 8]);
        assert!(separated_set(&Tree::path(9), 0).unwrap().len() >= 2);
        assert!(separated_set(&Tree::star(5), 1).is_err());
    }
}
