use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rgl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgl")).args(args).env_remove("RGL_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn path_tree(n: usize) -> String {
    let mut t = format!("t {n}\np 0 -1\n");
    for v in 1..n {
        t.push_str(&format!("p {v} {}\n", v - 1));
    }
    t
}

#[test]
fn ramsey_p3_against_k3_is_five() {
    let d = TempDir::new().unwrap();
    let t = put(&d, "p3.tree", &path_tree(3));
    let wd = d.path().join("w");
    let o = rgl(&["ramsey", "--tree", s(&t), "--h", "3,1,1", "--witness-dir", s(&wd)]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["value"]["kind"], "exact");
    assert_eq!(v["value"]["value"], 5);
    assert!(wd.join("witness_4.col").exists());
}

#[test]
fn ramsey_graph_file_and_cap() {
    let d = TempDir::new().unwrap();
    let t = put(&d, "p3.tree", &path_tree(3));
    let h = put(&d, "k3.graph", "p 3 3\ne 0 1\ne 1 2\ne 0 2\n");
    let o = rgl(&["ramsey", "--tree", s(&t), "--h", s(&h), "--cap", "4"]);
    assert_eq!(code(&o), 2);
    let v = stdout_json(&o);
    assert_eq!(v["value"]["kind"], "bounds");
    assert_eq!(v["value"]["lower"], 5);
}

#[test]
fn extremal_files_pass_their_check() {
    let d = TempDir::new().unwrap();
    for (n, k, sigma, order) in [(3, 2, 2, 3), (3, 3, 1, 4)] {
        let out = d.path().join(format!("{n}{k}{sigma}.col"));
        let o = rgl(&["extremal", "--n", &n.to_string(), "--k", &k.to_string(), "--sigma", &sigma.to_string(), "--out", s(&out), "--check"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        let header = text.lines().find(|l| l.starts_with("p ")).unwrap();
        assert_eq!(header.split_whitespace().nth(1).unwrap(), order.to_string());
        assert!(String::from_utf8_lossy(&o.stderr).contains("check: pass"));
    }
    assert_eq!(code(&rgl(&["extremal", "--n", "3", "--k", "1", "--sigma", "1"])), 1);
}

fn below_threshold(d: &TempDir) -> (PathBuf, PathBuf) {
    let c = d.path().join("burr.col");
    assert_eq!(code(&rgl(&["extremal", "--n", "3", "--k", "3", "--sigma", "2", "--out", s(&c)])), 0);
    (c, put(d, "p3.tree", &path_tree(3)))
}

#[test]
fn solve_below_threshold_gives_a_verified_blue_witness() {
    let d = TempDir::new().unwrap();
    let (c, t) = below_threshold(&d);
    let trace = d.path().join("trace.json");
    let o = rgl(&["solve", "--colouring", s(&c), "--tree", s(&t), "--k", "3", "--s", "2", "--m", "1", "--trace", s(&trace)]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["result"], "certificate");
    assert_eq!(v["kind"]["variant"], "BlueWitness");
    assert_eq!(v["status"], "verified");
    assert_eq!(v["run"]["seed"], 0);
    let cert = put(&d, "cert.json", &String::from_utf8(o.stdout).unwrap());
    let o = rgl(&["verify", "--certificate", s(&cert), "--colouring", s(&c), "--trace", s(&trace)]);
    assert_eq!(code(&o), 0);
    let msg = String::from_utf8_lossy(&o.stdout);
    assert!(msg.contains("certificate valid") && msg.contains("trace replays"));
}

#[test]
fn tampered_certificate_is_rejected() {
    let d = TempDir::new().unwrap();
    let (c, t) = below_threshold(&d);
    let o = rgl(&["solve", "--colouring", s(&c), "--tree", s(&t), "--k", "3", "--s", "2", "--m", "1"]);
    let mut v = stdout_json(&o);
    // Move a vertex from the last class into the first, breaking the class sizes.
    let moved = v["kind"]["classes"][2].as_array_mut().unwrap().pop().unwrap();
    v["kind"]["classes"][0].as_array_mut().unwrap().push(moved);
    let cert = put(&d, "bad.json", &v.to_string());
    let o = rgl(&["verify", "--certificate", s(&cert), "--colouring", s(&c)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("certificate invalid"));

    let other = d.path().join("other.col");
    rgl(&["extremal", "--n", "3", "--k", "3", "--sigma", "3", "--out", s(&other)]);
    let good = put(&d, "good.json", &String::from_utf8(rgl(&["solve", "--colouring", s(&c), "--tree", s(&t), "--k", "3", "--s", "2", "--m", "1"]).stdout).unwrap());
    assert_eq!(code(&rgl(&["verify", "--certificate", s(&good), "--colouring", s(&other)])), 1);
}

#[test]
fn verify_reports_inconclusive_runs() {
    let d = TempDir::new().unwrap();
    let (c, _) = below_threshold(&d);
    let cert = put(&d, "inc.json", r#"{"result":"inconclusive","reason":"budget"}"#);
    assert_eq!(code(&rgl(&["verify", "--certificate", s(&cert), "--colouring", s(&c)])), 2);
}

#[test]
fn params_file_is_applied_and_checked() {
    let d = TempDir::new().unwrap();
    let (c, t) = below_threshold(&d);
    let good = put(&d, "p.toml", "L = 10\nmu = 0.1\n");
    let o = rgl(&["solve", "--colouring", s(&c), "--tree", s(&t), "--k", "3", "--s", "2", "--m", "1", "--params", s(&good)]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["run"]["params"]["L"], 10);
    assert_eq!(v["params"]["params"]["mu"], 0.1);
    let bad = put(&d, "bad.toml", "L = 10\nwidth = 3\n");
    let o = rgl(&["solve", "--colouring", s(&c), "--tree", s(&t), "--k", "3", "--s", "2", "--m", "1", "--params", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));
}

#[test]
fn decompose_operations_validate() {
    let d = TempDir::new().unwrap();
    let p10 = put(&d, "p10.tree", &path_tree(10));
    let o = rgl(&["decompose", "--tree", s(&p10), "--bare-paths", "--k", "3", "--validate"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["operation"], "bare-paths");
    assert!(!v["paths"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("validation: pass"));

    let big = d.path().join("big.tree");
    rgl(&["gen-tree", "--n", "400", "--max-degree", "3", "--seed", "9", "--out", s(&big)]);
    for op in [&["--split"][..], &["--descending"], &["--fixed-k", "--k", "2", "--gamma", "0.2"], &["--separated", "--k", "1"]] {
        let mut args = vec!["decompose", "--tree", s(&big), "--validate"];
        args.extend_from_slice(op);
        let o = rgl(&args);
        assert_eq!(code(&o), 0, "{op:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&rgl(&["decompose", "--tree", s(&big)])), 2, "an operation is required");
}

#[test]
fn malformed_tree_reports_its_line() {
    let d = TempDir::new().unwrap();
    let t = put(&d, "bad.tree", "t 3\np 0 -1\np 1 0\np 2 x\n");
    let o = rgl(&["decompose", "--tree", s(&t), "--split"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn environment_seed_overrides_the_flag() {
    let a = rgl(&["gen-tree", "--n", "30", "--max-degree", "3", "--seed", "2"]);
    let b = Command::new(env!("CARGO_BIN_EXE_rgl"))
        .args(["gen-tree", "--n", "30", "--max-degree", "3", "--seed", "1"])
        .env("RGL_SEED", "2")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, rgl(&["gen-tree", "--n", "30", "--max-degree", "3", "--seed", "1"]).stdout);
}

#[test]
fn every_command_is_deterministic() {
    let d = TempDir::new().unwrap();
    let (c, t) = below_threshold(&d);
    let big = d.path().join("big.tree");
    rgl(&["gen-tree", "--n", "200", "--max-degree", "3", "--seed", "3", "--out", s(&big)]);
    let trace = d.path().join("trace.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["solve", "--colouring", s(&c), "--tree", s(&t), "--k", "3", "--s", "2", "--m", "1", "--seed", "5", "--trace", s(&trace)],
        vec!["ramsey", "--tree", s(&t), "--h", "2,2,1"],
        vec!["decompose", "--tree", s(&big), "--descending", "--gamma", "0.2"],
        vec!["decompose", "--tree", s(&big), "--bare-paths", "--k", "2"],
        vec!["extremal", "--n", "4", "--k", "3", "--sigma", "2"],
        vec!["gen-tree", "--n", "500", "--max-degree", "5", "--seed", "11"],
    ];
    for args in runs {
        let a = rgl(&args);
        let first_trace = std::fs::read(&trace).ok();
        let b = rgl(&args);
        assert_eq!(a.status, b.status, "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(first_trace, std::fs::read(&trace).ok(), "{args:?}");
    }
}
