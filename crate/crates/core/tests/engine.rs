use rgl_core::engine::{
    connect_through, embed_dense, embed_k2, embed_many_leaves, embed_sparse_connected, find_long_path, find_sparse_cut,
    solve, split_disconnected, CertificateKind, ConnectedConfig, DenseConfig, K2Config, LeavesConfig, LongPath, Outcome,
    SolveConfig, SparseCut,
};
use rgl_core::graph::burr_colouring;
use rgl_core::oracle::{brute_ramsey, check_kind, contains_blue_witness, contains_red_tree, random_joined_graph, verify_certificate};
use rgl_core::{Graph, ParamSet, Tree, TwoColouring, VertexSet};

fn colouring_from_mask(n: usize, mask: u64) -> TwoColouring {
    let mut e = Vec::new();
    let mut i = 0;
    for u in 0..n {
        for v in u + 1..n {
            if mask >> i & 1 == 1 {
                e.push((u, v));
            }
            i += 1;
        }
    }
    TwoColouring::from_red(Graph::from_edges(n, &e).unwrap())
}

fn solve_ok(c: &TwoColouring, t: &Tree, k: usize, s: usize, m: usize) -> CertificateKind {
    let p = ParamSet::default();
    let r = solve(c, t, k, s, m, &p, 0, &SolveConfig::default()).unwrap();
    r.trace.replay(c, t, &p).unwrap();
    match r.outcome {
        Outcome::Certificate(cert) => {
            verify_certificate(c, &cert).unwrap();
            cert.kind
        }
        Outcome::Inconclusive { reason } => panic!("inconclusive: {reason}"),
    }
}

#[test]
fn every_colouring_of_k5_gives_a_path_or_a_triangle() {
    let t = Tree::path(3);
    for mask in 0..1u64 << 10 {
        let c = colouring_from_mask(5, mask);
        match solve_ok(&c, &t, 3, 1, 1) {
            CertificateKind::RedTree { .. } => assert!(contains_red_tree(&c, &t).is_some()),
            CertificateKind::BlueWitness { .. } => assert!(contains_blue_witness(&c, 2, 1, 1).unwrap().is_some()),
        }
    }
}

/// `(k, s, m)` with `K^{k-1}_s x K_m` equal to the named graph.
fn small_targets() -> Vec<(&'static str, Graph, usize, usize, usize)> {
    vec![
        ("K3", Graph::complete(3), 3, 1, 1),
        ("K12", Graph::complete_bipartite(1, 2), 2, 1, 2),
        ("C4", Graph::cycle(4), 2, 2, 2),
    ]
}

fn small_trees() -> Vec<Tree> {
    vec![
        Tree::path(2),
        Tree::path(3),
        Tree::path(4),
        Tree::star(3),
        Tree::path(5),
        Tree::star(4),
        Tree::from_edges(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap(),
    ]
}

#[test]
fn sweep_at_the_ramsey_number() {
    for t in small_trees() {
        for (name, h, k, s, m) in small_targets() {
            // R(T, K_3) = 9 for five-vertex trees, above the cap.
            let Some(n) = brute_ramsey(&t, &h, 8).unwrap().exact() else { continue };
            if n > 6 {
                continue;
            }
            let pairs = n * (n - 1) / 2;
            for mask in 0..1u64 << pairs {
                let c = colouring_from_mask(n, mask);
                let kind = solve_ok(&c, &t, k, s, m);
                check_kind(&c, &t, k, s, m, &kind).unwrap_or_else(|e| panic!("{name} n={n} mask={mask}: {e}"));
            }
        }
    }
}

#[test]
fn burr_colouring_below_threshold_gives_blue_witness() {
    for (n, k, sigma) in [(3, 2, 1), (4, 2, 2), (3, 3, 1), (4, 3, 2)] {
        let c = burr_colouring(n, k, sigma).unwrap();
        assert_eq!(c.n(), (k - 1) * (n - 1) + sigma - 1);
        let t = Tree::path(n);
        // With an m-class of size sigma - 1 the instance has a blue witness.
        if sigma > 1 {
            match solve_ok(&c, &t, k, sigma, sigma - 1) {
                CertificateKind::BlueWitness { .. } => {}
                other => panic!("expected a blue witness, got {other:?}"),
            }
        }
        assert!(contains_red_tree(&c, &t).is_none());
    }
}

#[test]
fn single_edge_tree_with_a_red_edge() {
    let c = colouring_from_mask(6, 1 << 7);
    let p = ParamSet::default();
    let r = solve(&c, &Tree::path(2), 4, 3, 3, &p, 0, &SolveConfig::default()).unwrap();
    assert_eq!(r.trace.records.len(), 1);
    assert!(matches!(r.certificate().unwrap().kind, CertificateKind::RedTree { .. }));
}

#[test]
fn burr_plus_blue_vertex_k2() {
    for n in 3..=5 {
        let base = burr_colouring(n, 2, 1).unwrap();
        let mut e: Vec<(usize, usize)> = base.red().edges().collect();
        let nn = base.n() + 1;
        e.retain(|&(u, v)| u < nn && v < nn);
        let c = TwoColouring::from_red(Graph::from_edges(nn, &e).unwrap());
        let t = Tree::path(n);
        let kind = solve_ok(&c, &t, 2, 1, 1);
        check_kind(&c, &t, 2, 1, 1, &kind).unwrap();
    }
}

#[test]
fn tampered_trace_fails_replay() {
    let c = burr_colouring(4, 3, 2).unwrap();
    let t = Tree::path(4);
    let p = ParamSet::default();
    let mut r = solve(&c, &t, 3, 2, 2, &p, 0, &SolveConfig::default()).unwrap();
    r.trace.replay(&c, &t, &p).unwrap();
    let rec = r.trace.records.iter_mut().find(|r| r.holds && !r.witness.is_empty());
    if let Some(rec) = rec {
        rec.measured += 1.0;
        assert!(r.trace.replay(&c, &t, &p).is_err());
    }
}

#[test]
fn tampered_certificate_fails_verification() {
    let c = burr_colouring(3, 3, 2).unwrap();
    let t = Tree::path(3);
    let p = ParamSet::default();
    let r = solve(&c, &t, 3, 2, 1, &p, 0, &SolveConfig::default()).unwrap();
    let mut cert = r.certificate().unwrap().clone();
    verify_certificate(&c, &cert).unwrap();
    cert.input_digest.replace_range(0..1, if cert.input_digest.starts_with('0') { "1" } else { "0" });
    assert!(verify_certificate(&c, &cert).is_err());
}

#[test]
fn dense_on_random_joined_host() {
    let n = 600;
    let m = 2;
    let h = random_joined_graph(n, m, 0.02, 0).unwrap();
    let t = Tree::random(n - m + 1, 3, 1).unwrap();
    let r = embed_dense(&h.graph, &t, m, 0.02, 0, &DenseConfig::default()).unwrap();
    r.embedding.validate_complete(&t, &h.graph).unwrap();
}

#[test]
fn k2_on_random_joined_host() {
    let n = 400;
    let m = 3;
    let p = ParamSet::default();
    let h = random_joined_graph(n, m, p.mu, 2).unwrap();
    let t = Tree::random(n - m + 1, 3, 3).unwrap();
    let r = embed_k2(&h.graph, &t, m, &p, &K2Config::from_params(&p), 0).unwrap();
    r.embedding.validate_complete(&t, &h.graph).unwrap();
    let h1 = random_joined_graph(200, 1, p.mu, 4).unwrap();
    let t1 = Tree::random(200, 3, 5).unwrap();
    let r1 = embed_k2(&h1.graph, &t1, 1, &p, &K2Config::from_params(&p), 0).unwrap();
    assert_eq!(r1.branch, "dense");
}

#[test]
fn caterpillar_into_random_joined_host() {
    // 30% leaves.
    let t = Tree::caterpillar(70, 30);
    let h = random_joined_graph(t.n() + 20, 2, 0.05, 6).unwrap();
    let (e, _) = embed_many_leaves(&h.graph, &t, 0.01, &LeavesConfig::default()).unwrap();
    e.validate_complete(&t, &h.graph).unwrap();
}

#[test]
fn long_paths_in_dense_random_graphs() {
    let h = random_joined_graph(200, 3, 0.05, 7).unwrap();
    match find_long_path(&h.graph, 2 * 10 * 3, 1_000_000) {
        LongPath::Found { path } => {
            assert_eq!(path.len(), 61);
            let set = VertexSet::from_iter(200, path.iter().copied());
            assert_eq!(set.len(), 61);
            assert!(path.windows(2).all(|w| h.graph.has_edge(w[0], w[1])));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn connectors_are_disjoint_and_exact() {
    let h = random_joined_graph(120, 2, 0.05, 9).unwrap();
    let g = &h.graph;
    let z = VertexSet::from_iter(120, 40..120);
    let u: Vec<usize> = (0..5).collect();
    let u2: Vec<usize> = (5..10).collect();
    for ell in 1..=4 {
        let paths = connect_through(g, &z, &u, &u2, ell);
        assert!(!paths.is_empty());
        let mut inner = VertexSet::new(120);
        for p in &paths {
            assert_eq!(p.len(), ell + 1);
            assert!(u.contains(&p[0]) && u2.contains(p.last().unwrap()));
            assert!(p.windows(2).all(|w| g.has_edge(w[0], w[1])));
            for &x in &p[1..ell] {
                assert!(z.contains(x));
                assert!(inner.insert(x));
            }
        }
    }
}

#[test]
fn sparse_connected_path_like_tree() {
    let p = ParamSet::default();
    // A host on (k-1)(n-1)+m vertices for k = 3.
    let n = 1000;
    let m = 2;
    let h = random_joined_graph(2 * (n - 1) + m, m, 0.05, 11).unwrap();
    let t = Tree::path(n);
    let r = embed_sparse_connected(&h.graph, &t, m, &p, 0, &ConnectedConfig::default()).unwrap();
    r.embedding.validate_complete(&t, &h.graph).unwrap();
    for path in &r.ledger.paths {
        assert_eq!(path.vertices.len(), p.big_l + 1);
        assert!(path.in_z <= 2 * p.ell);
    }
    assert!(50 * r.ledger.i_b.len() < n);
}

/// Two sides, each a red `K_{n-1}` plus one vertex, blue between the sides;
/// optionally a bridge vertex with three red neighbours on each side.
fn burr_blocks(n: usize, bridge: bool) -> (Graph, Vec<usize>, Vec<usize>) {
    let g0 = Graph::disjoint_cliques(&[n - 1, 1, n - 1, 1]);
    let total = 2 * n;
    let mut e: Vec<(usize, usize)> = g0.edges().collect();
    let side1: Vec<usize> = (0..n).collect();
    let side2: Vec<usize> = (n..total).collect();
    let mut hn = total;
    if bridge {
        for &x in side1.iter().take(3).chain(side2.iter().take(3)) {
            e.push((x, total));
        }
        hn += 1;
    }
    (Graph::from_edges(hn, &e).unwrap(), side1, side2)
}

#[test]
fn split_case_two_merges_witnesses() {
    // Classes of size s + Δm = 5 must fit inside a red K_7.
    let n = 8;
    let (g, v1, v2) = burr_blocks(n, false);
    let t = Tree::path(n);
    let c = TwoColouring::from_red(g.clone());
    let cut = SparseCut { v0: vec![], v1, v2 };
    let mut induction = |scope: &[usize], kk: usize, ss: usize, mm: usize| {
        let sub = c.induced(scope);
        let r = solve(&sub, &t, kk, ss, mm, &ParamSet::default(), 0, &SolveConfig::default())?;
        Ok(r.certificate().map(|cert| match &cert.kind {
            CertificateKind::RedTree { map } => CertificateKind::RedTree {
                map: map.iter().map(|&(x, v)| (x, scope[v])).collect(),
            },
            CertificateKind::BlueWitness { classes } => CertificateKind::BlueWitness {
                classes: classes.iter().map(|cl| cl.iter().map(|&v| scope[v]).collect()).collect(),
            },
        }))
    };
    let found = find_sparse_cut(&g, 2, 0, 0, 4).unwrap();
    found.validate(&g, 2, 0).unwrap();
    cut.validate(&g, 2, 0).unwrap();
    let (kind, _) = split_disconnected(&g, &t, 3, 1, 2, &cut, &mut induction, &Default::default()).unwrap();
    check_kind(&c, &t, 3, 1, 2, &kind).unwrap();
    assert!(matches!(kind, CertificateKind::BlueWitness { ref classes } if classes.len() == 3));
}

#[test]
fn split_case_one_uses_the_bridge() {
    let n = 8;
    let (g, v1, v2) = burr_blocks(n, true);
    let t = Tree::path(n);
    let c = TwoColouring::from_red(g.clone());
    let cut = SparseCut { v0: vec![g.n() - 1], v1, v2 };
    cut.validate(&g, 2, 1).unwrap();
    let mut induction = |_: &[usize], _: usize, _: usize, _: usize| Ok(None);
    let (kind, _) = split_disconnected(&g, &t, 3, 1, 2, &cut, &mut induction, &Default::default()).unwrap();
    assert!(matches!(kind, CertificateKind::RedTree { .. }));
    check_kind(&c, &t, 3, 1, 2, &kind).unwrap();
}
