//! `rgl`: command-line front end for rgl-core.
//!
//! Exit codes: 0 for a valid certificate or an exact result, 2 for an
//! inconclusive one, 1 for any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use rgl_core::engine::{solve, Certificate, Outcome, SolveConfig};
use rgl_core::graph::{burr_colouring, parse_colouring, parse_graph, write_colouring};
use rgl_core::oracle::{brute_ramsey, contains_blue_witness, contains_red_tree, multipartite_graph, verify_certificate, DEFAULT_RAMSEY_CAP};
use rgl_core::tree::{
    bare_path_bound, descending_decomposition, find_bare_paths, fixed_length_decomposition, is_descending, separated_set,
    split_tree, validate_decomposition, TreeDecomposition,
};
use rgl_core::{Graph, ParamSet, Policy, SearchConfig, Tree, TwoColouring};

#[derive(Parser)]
#[command(name = "rgl", version, about = "Red trees or blue multipartite witnesses in 2-coloured complete graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find a red copy of the tree or a blue K^{k-1}_s x K_m and print a certificate.
    Solve(SolveArgs),
    /// Exact small Ramsey number R(T, H) by exhaustive search.
    Ramsey(RamseyArgs),
    /// Check a certificate (and optionally its trace) against a colouring.
    Verify(VerifyArgs),
    /// Tree decompositions.
    Decompose(DecomposeArgs),
    /// The extremal colouring: k-1 red cliques of order n-1 plus a red clique of order sigma-1.
    Extremal(ExtremalArgs),
    /// Random tree with bounded maximum degree.
    GenTree(GenTreeArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    colouring: PathBuf,
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    m: usize,
    /// Overridden by RGL_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML file of ParamSet fields; missing fields keep their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Write the case trace here as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the cleaned vortex here when that branch produced the answer.
    #[arg(long)]
    vortex_dump: Option<PathBuf>,
    /// Node budget of exact set searches before falling back to sampling.
    #[arg(long)]
    node_budget: Option<u64>,
    /// Random trials of the sampled fallback.
    #[arg(long)]
    sample_trials: Option<usize>,
    /// Node budget of the exhaustive tree and witness searches.
    #[arg(long)]
    exact_budget: Option<u64>,
}

#[derive(Args)]
struct RamseyArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Graph file, or `k,s,m` for the complete multipartite graph K^{k-1}_s x K_m.
    #[arg(long)]
    h: String,
    #[arg(long, default_value_t = DEFAULT_RAMSEY_CAP)]
    cap: usize,
    /// Write one avoiding colouring per order into this directory.
    #[arg(long)]
    witness_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate JSON, either bare or as printed by `solve`.
    #[arg(long)]
    certificate: PathBuf,
    #[arg(long)]
    colouring: PathBuf,
    /// Also replay this case trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("op").required(true).args(["bare_paths", "split", "descending", "fixed_k", "separated"])))]
struct DecomposeArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    bare_paths: bool,
    #[arg(long)]
    split: bool,
    #[arg(long)]
    descending: bool,
    #[arg(long)]
    fixed_k: bool,
    #[arg(long)]
    separated: bool,
    /// Path length for --bare-paths and --fixed-k, separation radius for --separated.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Target piece size for --descending (default max(Δ/γ, n/10)).
    #[arg(long)]
    big_n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    root: usize,
    /// Re-run the validator on the output.
    #[arg(long)]
    validate: bool,
}

#[derive(Args)]
struct ExtremalArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    sigma: usize,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run both containment oracles on the result.
    #[arg(long)]
    check: bool,
    /// Extra trees for the red check, besides the path and the star on n vertices.
    #[arg(long)]
    tree: Vec<PathBuf>,
}

#[derive(Args)]
struct GenTreeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    max_degree: usize,
    /// Overridden by RGL_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

type Res<T> = std::result::Result<T, String>;

fn read(p: &Path) -> Res<String> {
    fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn write(p: &Path, text: &str) -> Res<()> {
    fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))
}

fn load_tree(p: &Path) -> Res<Tree> {
    Tree::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))
}

fn load_colouring(p: &Path) -> Res<TwoColouring> {
    parse_colouring(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))
}

fn seed_or_env(seed: u64) -> Res<u64> {
    match std::env::var("RGL_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| format!("RGL_SEED is not an unsigned integer: {v:?}")),
        Err(_) => Ok(seed),
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// How a run was configured; attached to every structured output.
#[derive(Serialize)]
struct RunRecord {
    seed: u64,
    params_file: Option<String>,
    params: ParamSet,
    /// Set searches run exactly up to the node budget, then fall back to sampling.
    verification: SearchConfig,
    exact_budget: u64,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    outcome: &'a Outcome,
    run: RunRecord,
}

fn cmd_solve(a: SolveArgs) -> Res<u8> {
    let c = load_colouring(&a.colouring)?;
    let t = load_tree(&a.tree)?;
    let seed = seed_or_env(a.seed)?;
    let params: ParamSet = match &a.params {
        Some(p) => toml::from_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => ParamSet::default(),
    };
    params.validate().map_err(|e| e.to_string())?;
    let mut cfg = SolveConfig::from_params(&params);
    if let Some(b) = a.node_budget {
        cfg.search.node_budget = b;
    }
    if let Some(t) = a.sample_trials {
        cfg.search.sample_trials = t;
    }
    if let Some(b) = a.exact_budget {
        cfg.exact_budget = b;
    }
    if cfg.search.node_budget == 0 || cfg.search.sample_trials == 0 || cfg.exact_budget == 0 {
        return Err("budgets must be positive".into());
    }
    let r = solve(&c, &t, a.k, a.s, a.m, &params, seed, &cfg).map_err(|e| e.to_string())?;
    if let Some(p) = &a.trace {
        write(p, &json(&r.trace))?;
    }
    if let Some(p) = &a.vortex_dump {
        match &r.vortex_dump {
            Some(d) => write(p, d)?,
            None => eprintln!("no vortex was used; {} not written", p.display()),
        }
    }
    let out = SolveOutput {
        outcome: &r.outcome,
        run: RunRecord {
            seed,
            params_file: a.params.as_ref().map(|p| p.display().to_string()),
            params,
            verification: cfg.search,
            exact_budget: cfg.exact_budget,
        },
    };
    print!("{}", json(&out));
    Ok(match r.outcome {
        Outcome::Certificate(_) => 0,
        Outcome::Inconclusive { reason } => {
            eprintln!("inconclusive: {reason}");
            2
        }
    })
}

fn parse_h(spec: &str) -> Res<Graph> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() == 3 {
        if let Ok(v) = parts.iter().map(|x| x.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>() {
            let (k, s, m) = (v[0], v[1], v[2]);
            if k == 0 || s == 0 || m == 0 {
                return Err("k, s and m must be positive".into());
            }
            return Ok(multipartite_graph(k - 1, s, m));
        }
    }
    let p = Path::new(spec);
    parse_graph(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))
}

fn cmd_ramsey(a: RamseyArgs) -> Res<u8> {
    let t = load_tree(&a.tree)?;
    let h = parse_h(&a.h)?;
    let r = brute_ramsey(&t, &h, a.cap).map_err(|e| e.to_string())?;
    if let Some(dir) = &a.witness_dir {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for w in &r.witnesses {
            write(&dir.join(format!("witness_{}.col", w.n)), &write_colouring(&w.colouring()))?;
        }
    }
    #[derive(Serialize)]
    struct Out<'a> {
        #[serde(flatten)]
        result: &'a rgl_core::oracle::RamseyResult,
        cap: usize,
    }
    print!("{}", json(&Out { result: &r, cap: a.cap }));
    Ok(if r.exact().is_some() { 0 } else { 2 })
}

fn cmd_verify(a: VerifyArgs) -> Res<u8> {
    let c = load_colouring(&a.colouring)?;
    let text = read(&a.certificate)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", a.certificate.display()))?;
    if v.get("result").and_then(Value::as_str) == Some("inconclusive") {
        eprintln!("inconclusive: {}", v.get("reason").and_then(Value::as_str).unwrap_or(""));
        return Ok(2);
    }
    let cert: Certificate = serde_json::from_value(v).map_err(|e| format!("{}: not a certificate: {e}", a.certificate.display()))?;
    if let Err(fault) = verify_certificate(&c, &cert) {
        return Err(format!("certificate invalid: {fault}"));
    }
    println!("certificate valid");
    if let Some(p) = &a.trace {
        let trace: rgl_core::engine::CaseTrace =
            serde_json::from_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
        let t = cert.tree().map_err(|e| e.to_string())?;
        trace
            .replay(&c, &t, &cert.params.params)
            .map_err(|e| format!("trace does not replay: {e}"))?;
        println!("trace replays ({} records)", trace.records.len());
    }
    Ok(0)
}

#[derive(Serialize)]
#[serde(tag = "operation", rename_all = "kebab-case")]
enum Decomposition {
    BarePaths { k: usize, bound: i64, paths: Vec<Vec<usize>> },
    Split { gamma: f64, root: usize, split: rgl_core::tree::Split },
    Descending { gamma: f64, big_n: usize, root: usize, decomposition: TreeDecomposition },
    FixedK { gamma: f64, k: usize, root: usize, decomposition: TreeDecomposition, audit: rgl_core::params::Audit },
    Separated { k: usize, vertices: Vec<usize> },
}

fn check_bare_paths(t: &Tree, k: usize, bound: i64, paths: &[Vec<usize>]) -> Res<()> {
    let mut seen = vec![false; t.n()];
    for p in paths {
        if p.len() != k + 1 {
            return Err(format!("path {p:?} does not have {k} edges"));
        }
        if p.windows(2).any(|w| !t.neighbours(w[0]).contains(&w[1])) {
            return Err(format!("path {p:?} is not a path of the tree"));
        }
        if p[1..k].iter().any(|&v| t.degree(v) != 2) {
            return Err(format!("path {p:?} has an internal vertex of degree other than 2"));
        }
        for &v in p {
            if std::mem::replace(&mut seen[v], true) {
                return Err(format!("vertex {v} lies on two paths"));
            }
        }
    }
    if (paths.len() as i64) < bound {
        return Err(format!("{} paths, fewer than the bound {bound}", paths.len()));
    }
    Ok(())
}

fn validate(t: &Tree, d: &Decomposition) -> Res<()> {
    let n = t.n();
    match d {
        Decomposition::BarePaths { k, bound, paths } => check_bare_paths(t, *k, *bound, paths),
        Decomposition::Split { gamma, root, split } => {
            if split.t1.len() + split.t2.len() != n + 1 {
                return Err("|T1| + |T2| != n + 1".into());
            }
            let shared: Vec<usize> = split.t1.iter().copied().filter(|v| split.t2.contains(v)).collect();
            if shared != [split.v] || !split.t1.contains(root) {
                return Err("the parts must share exactly the split vertex, with the root in T1".into());
            }
            let (lo, hi) = (gamma * n as f64 / (2.0 * t.max_degree() as f64), gamma * n as f64);
            let s2 = split.t2.len() as f64;
            if s2 < lo - 1e-9 || s2 > hi + 1e-9 {
                return Err(format!("|T2| = {s2} outside [{lo}, {hi}]"));
            }
            Ok(())
        }
        Decomposition::Descending { gamma, decomposition, .. } => {
            validate_decomposition(t, decomposition)?;
            let body = &decomposition.sizes[..decomposition.sizes.len().saturating_sub(1)];
            // One vertex of slack on each ratio for integer rounding.
            if !is_descending(body, gamma / (4.0 * t.max_degree() as f64), 2.0 * gamma, 1.0) {
                return Err("piece sizes violate the ratio bounds".into());
            }
            Ok(())
        }
        Decomposition::FixedK { decomposition, .. } => validate_decomposition(t, decomposition),
        Decomposition::Separated { k, vertices } => {
            for (i, &a) in vertices.iter().enumerate() {
                let dist = t.distances_from(a);
                if let Some(&b) = vertices[i + 1..].iter().find(|&&b| dist[b] < 2 * k + 2) {
                    return Err(format!("{a} and {b} are at distance {}", dist[b]));
                }
            }
            Ok(())
        }
    }
}

fn cmd_decompose(a: DecomposeArgs) -> Res<u8> {
    let t = load_tree(&a.tree)?;
    let need_k = || a.k.ok_or_else(|| "--k is required for this operation".to_string());
    let e = |e: rgl_core::Error| e.to_string();
    let d = if a.bare_paths {
        let k = need_k()?;
        let paths = find_bare_paths(&t, k).map_err(e)?.into_iter().map(|p| p.vertices).collect();
        Decomposition::BarePaths { k, bound: bare_path_bound(&t, k), paths }
    } else if a.split {
        Decomposition::Split { gamma: a.gamma, root: a.root, split: split_tree(&t, a.gamma, a.root).map_err(e)? }
    } else if a.descending {
        let lo = (t.max_degree() as f64 / a.gamma).ceil() as usize;
        let big_n = a.big_n.unwrap_or(lo.max(t.n() / 10));
        let dec = descending_decomposition(&t, a.gamma, big_n, a.root).map_err(e)?;
        Decomposition::Descending { gamma: a.gamma, big_n, root: a.root, decomposition: dec }
    } else if a.fixed_k {
        let k = need_k()?;
        let (dec, audit) = fixed_length_decomposition(&t, a.gamma, k, a.root, Policy::Audit).map_err(e)?;
        Decomposition::FixedK { gamma: a.gamma, k, root: a.root, decomposition: dec, audit }
    } else {
        let k = need_k()?;
        Decomposition::Separated { k, vertices: separated_set(&t, k).map_err(e)? }
    };
    if a.validate {
        validate(&t, &d).map_err(|f| format!("validation failed: {f}"))?;
        eprintln!("validation: pass");
    }
    print!("{}", json(&d));
    Ok(0)
}

fn cmd_extremal(a: ExtremalArgs) -> Res<u8> {
    let c = burr_colouring(a.n, a.k, a.sigma).map_err(|e| e.to_string())?;
    let text = write_colouring(&c);
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if !a.check {
        return Ok(0);
    }
    let back = parse_colouring(&text).map_err(|e| format!("round trip: {e}"))?;
    if back != c {
        return Err("round trip changed the colouring".into());
    }
    let mut trees = vec![("path".to_string(), Tree::path(a.n))];
    if a.n >= 2 {
        trees.push(("star".to_string(), Tree::star(a.n - 1)));
    }
    for p in &a.tree {
        trees.push((p.display().to_string(), load_tree(p)?));
    }
    let mut fail = false;
    for (name, t) in &trees {
        if t.n() != a.n {
            return Err(format!("{name} has {} vertices, expected {}", t.n(), a.n));
        }
        let found = contains_red_tree(&c, t).is_some();
        fail |= found;
        eprintln!("red {name}: {}", if found { "FOUND" } else { "absent" });
    }
    let blue = contains_blue_witness(&c, a.k - 1, a.sigma, a.sigma).map_err(|e| e.to_string())?;
    fail |= blue.is_some();
    eprintln!("blue K^{}_{} x K_{}: {}", a.k - 1, a.sigma, a.sigma, if blue.is_some() { "FOUND" } else { "absent" });
    if fail {
        return Err("check failed".into());
    }
    eprintln!("check: pass");
    Ok(0)
}

fn cmd_gen_tree(a: GenTreeArgs) -> Res<u8> {
    let seed = seed_or_env(a.seed)?;
    let t = Tree::random(a.n, a.max_degree, seed).map_err(|e| e.to_string())?;
    match &a.out {
        Some(p) => write(p, &t.to_text())?,
        None => print!("{}", t.to_text()),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Ramsey(a) => cmd_ramsey(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Decompose(a) => cmd_decompose(a),
        Cmd::Extremal(a) => cmd_extremal(a),
        Cmd::GenTree(a) => cmd_gen_tree(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
