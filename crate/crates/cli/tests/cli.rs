use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const GRAPH: &str = r#"{"n": 6, "edges": [[1,2,1],[1,3,1],[2,3,4],[3,4,1],[4,5,4],[4,6,1],[5,6,1]]}"#;
const PARTITION: &str = r#"{"cluster_of": [1,1,1,2,2,2]}"#;
const SAMPLES: &str = r#"{"nodes": [2, 5]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netlasso")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let f = Self { dir: tempfile::tempdir().unwrap() };
        f.put("g.json", GRAPH);
        f.put("p.json", PARTITION);
        f.put("s.json", SAMPLES);
        f
    }

    fn put(&self, name: &str, text: &str) -> String {
        let path = self.path(name);
        std::fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

fn certify(f: &Files, extra: &[&str]) -> Value {
    let (g, p, s) = (f.arg("g.json"), f.arg("p.json"), f.arg("s.json"));
    let mut args = vec!["certify", "--graph", &g, "--partition", &p, "--samples", &s];
    args.extend_from_slice(extra);
    serde_json::from_str(&stdout(&run(&args))).unwrap()
}

#[test]
fn certify_reports_verdicts_and_witnesses() {
    let f = Files::new();
    let yes = certify(&f, &["--K", "4", "--L", "4"]);
    assert_eq!(yes["verdict"], "resolved");
    assert_eq!(yes["boundary_size"], 1);
    let flows = yes["witness_flows"].as_array().unwrap();
    assert_eq!(flows.len(), 2);
    // the boundary edge 3-4 carries L * W = 4 in the pattern direction
    let row = flows[1]["flows"].as_array().unwrap().iter().find(|r| r[0] == 3 && r[1] == 4).unwrap().clone();
    assert_eq!(flows[1]["pattern"], serde_json::json!([1]));
    assert!((row[2].as_f64().unwrap() - 4.0).abs() < 1e-9 && row[3].as_f64().unwrap().abs() < 1e-9);

    let no = certify(&f, &["--k", "3.9", "--l", "4"]);
    assert_eq!(no["verdict"], "not_resolved");
    assert_eq!(no["failing_pattern"].as_array().unwrap().len(), 1);

    let found = certify(&f, &["--find-k", "--l", "4"]);
    assert!((found["K"].as_f64().unwrap() - 4.0).abs() < 1e-3);
    assert_eq!(found["verdict"], "resolved");
}

#[test]
fn certify_needs_k_or_search() {
    let f = Files::new();
    let (g, p, s) = (f.arg("g.json"), f.arg("p.json"), f.arg("s.json"));
    let out = run(&["certify", "--graph", &g, "--partition", &p, "--samples", &s, "--l", "4"]);
    assert!(!out.status.success());
}

#[test]
fn solve_admm_and_oracle_agree() {
    let f = Files::new();
    f.put("o.json", r#"{"samples": [[2, 1.0], [5, -1.0]]}"#);
    let (g, o, t) = (f.arg("g.json"), f.arg("o.json"), f.arg("trace.csv"));
    let admm = stdout(&run(&["solve", "--graph", &g, "--observation", &o, "--lambda", "0.25", "--iters", "400", "--trace", &t]));
    let trace = std::fs::read_to_string(&t).unwrap();
    assert!(trace.starts_with("iteration,objective\n"));
    assert_eq!(trace.lines().count(), 401);
    let exact = stdout(&run(&["solve", "--graph", &g, "--observation", &o, "--lambda", "0.25", "--oracle"]));
    let values = |s: &str| -> Vec<f64> {
        let v: Value = serde_json::from_str(s).unwrap();
        v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    for (a, b) in values(&admm).iter().zip(values(&exact)) {
        assert!((a - b).abs() < 1e-3, "{admm} vs {exact}");
    }
}

#[test]
fn solve_rejects_bad_input() {
    let f = Files::new();
    f.put("o.json", r#"{"samples": [[9, 1.0]]}"#);
    let out = run(&["solve", "--graph", &f.arg("g.json"), "--observation", &f.arg("o.json")]);
    assert!(!out.status.success());
    let out = run(&["solve", "--graph", &f.arg("missing.json"), "--observation", &f.arg("o.json")]);
    assert!(!out.status.success());
}

#[test]
fn spectral_writes_one_row_per_frequency() {
    let f = Files::new();
    f.put("x.json", r#"{"values": [1, 1, 1, -1, -1, -1]}"#);
    let out = f.arg("spec.csv");
    stdout(&run(&["spectral", "--graph", &f.arg("g.json"), "--signal", &f.arg("x.json"), "--out", &out]));
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "l,eigenvalue,coefficient");
    assert_eq!(rows.len(), 7);
    let eig: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(eig.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    assert!(eig[0].abs() < 1e-9);
}

fn tiny_spec(dir: &Path) -> String {
    let text = r#"{
        "name": "tiny",
        "family": {"kind": "chain", "n": 200, "cluster_size": 10,
                   "intra": {"kind": "abs_normal", "mean": 2.0, "std": 0.5},
                   "inter": {"kind": "abs_normal", "mean": 1.0, "std": 0.5}},
        "coefficients": {"kind": "alternating", "low": 1.0, "high": 5.0},
        "noise_sigma": 0.0,
        "sample_budget": 60,
        "sampler": {"mode": "lemma1", "l": 2.0},
        "certificate_l": 2.0,
        "lambda_from_certificate": true,
        "solver": {"lambda": 0.2, "rho": 0.01, "max_iterations": 50},
        "label_propagation": true,
        "seed": 3
    }"#;
    let path = dir.join("spec.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn experiment_from_spec_file() {
    let f = Files::new();
    let spec = tiny_spec(f.dir.path());
    let out = f.arg("run");
    let text = stdout(&run(&["experiment", "--spec", &spec, "--out", &out]));
    assert!(text.starts_with("tiny: 200 nodes"));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(f.path("run/result.json")).unwrap()).unwrap();
    assert_eq!(result["node_count"], 200);
    assert_eq!(result["runs"].as_array().unwrap().len(), 4);
    let trace = std::fs::read_to_string(f.path("run/nmse_trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iteration,method,sampler,nmse"));
    assert_eq!(trace.lines().count(), 1 + 4 * 50);
    let head = std::fs::read_to_string(f.path("run/signal_head.csv")).unwrap();
    assert_eq!(head.lines().count(), 101);
}

#[test]
fn experiment_argument_errors() {
    let f = Files::new();
    let out = f.arg("run");
    assert!(!run(&["experiment", "--out", &out]).status.success());
    assert!(!run(&["experiment", "--preset", "nope", "--out", &out]).status.success());
    let spec = tiny_spec(f.dir.path());
    assert!(!run(&["experiment", "--preset", "chain-noisy", "--spec", &spec, "--out", &out]).status.success());
}
