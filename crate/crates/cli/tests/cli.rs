use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cmperc_core::cmp::compute_cmp;
use cmperc_core::generators::{generate, GraphKind, Model, ModelSpec, Weights};
use cmperc_core::{wgraph, CmpConfig, Exponent, WeightedGraph};
use serde_json::Value;

fn cmperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmperc"))
        .args(args)
        .env_remove("CMPERC_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cmperc(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// `11 0 11` on a path.
const A2: &str = "5 4\n0 1\n1 2\n2 3\n3 4\n1\n1\n0\n1\n1\n";

#[test]
fn a2_is_one_cluster_of_weight_four() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    let v = json(&["cmp", &f, "--alpha", "1"]);
    let heavy: Vec<&Value> = v["clusters"].as_array().unwrap().iter().filter(|c| c["weight"] != 0).collect();
    assert_eq!(heavy.len(), 1);
    assert_eq!(heavy[0]["weight"], 4);
    assert_eq!(heavy[0]["members"], serde_json::json!([0, 1, 3, 4]));
}

#[test]
fn explore_from_weightless_vertex_is_that_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    let v = json(&["explore", &f, "--vertex", "2"]);
    assert_eq!(v["outcome"], "stable");
    assert_eq!(v["stabiliser"], serde_json::json!([2]));
    let v = json(&["explore", &f, "--vertex", "0"]);
    assert_eq!(v["stabiliser"], serde_json::json!([0, 1, 2, 3, 4]));
}

#[test]
fn explore_over_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    let out = cmperc(&["explore", &f, "--vertex", "0", "--budget", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    for args in [
        vec!["cmp", "/nonexistent/file.wg"],
        vec!["explore", f.as_str(), "--vertex", "9"],
        vec!["gen", "--model", "bernoulli", "--p", "1.5"],
        vec!["contact", f.as_str(), "--lambda", "-1"],
        vec!["cmp", f.as_str(), "--alpha", "0"],
        vec!["no-such-command"],
    ] {
        let out = cmperc(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    let bad = write(dir.path(), "bad.wg", "2 1\n0 0\n1\n1\n");
    assert_eq!(cmperc(&["cmp", &bad]).status.code(), Some(1));
}

#[test]
fn stable_check_reports_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    assert_eq!(json(&["stable-check", &f, "--set", "0,1,2,3,4"])["stable"], true);
    assert_eq!(json(&["stable-check", &f, "--set", "0,1"])["stable"], false);
    assert_eq!(json(&["stable-check", &f, "--set", "2"])["stable"], true);
    assert_eq!(json(&["stable-check", &f, "--set", "0,1", "--ambient-partition"])["stable"], false);
}

#[test]
fn gen_then_cmp_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.wg");
    let out = out.to_str().unwrap();
    ok(&["--seed", "11", "--out", out, "gen", "--model", "bernoulli", "--graph", "z2", "--size", "9", "--p", "0.6"]);
    let spec = ModelSpec { model: Model::Bernoulli { p: 0.6 }, graph: GraphKind::Lattice { dim: 2, side: 9 }, seed: 11 };
    let (bx, w) = generate(&spec).unwrap();
    let Weights::Int(w) = w else { panic!("bernoulli weights are integers") };
    let wg = WeightedGraph::new(bx.graph, w).unwrap();
    assert_eq!(fs::read_to_string(out).unwrap(), wgraph::write(&wg));

    let cli = ok(&["cmp", out, "--alpha", "5/2"]);
    let direct = compute_cmp(&wg, &CmpConfig::new(Exponent::new(5, 2).unwrap())).to_json();
    assert_eq!(cli, format!("{}\n", serde_json::to_string_pretty(&direct).unwrap()));
    // Every arithmetic gives the same partition on integer weights.
    for arith in ["exact", "float"] {
        let v = json(&["cmp", out, "--alpha", "5/2", "--arith", arith]);
        assert_eq!(v["clusters"].as_array().unwrap().len(), direct["clusters"].as_array().unwrap().len());
    }
}

#[test]
fn continuum_gen_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = ok(&["--seed", "5", "gen", "--model", "continuum", "--graph", "rgg2", "--size", "6", "--lambda", "0.7", "--z", "pareto:1.5"]);
    let f = write(dir.path(), "c.wg", &a);
    let parsed: WeightedGraph<f64> = wgraph::parse(&a).unwrap();
    assert_eq!(wgraph::write(&parsed), a);
    json(&["cmp", &f, "--alpha", "2"]);
}

#[test]
fn contact_is_deterministic_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    let args = |t: &'static str| {
        vec!["--seed", "9", "--threads", t, "contact", f.as_str(), "--lambda", "1.5", "--horizon", "20", "--trials", "50", "--initial", "2"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let run = |t| {
        let a = args(t);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
    let mut lines = one.lines();
    assert_eq!(lines.next(), Some("seed,extinction_time,censored,total_infections,exit_count"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn contact_blow_up_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    let out = cmperc(&["contact", &f, "--lambda", "50", "--horizon", "1000", "--budget", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn duality_test_emits_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a2.wg", A2);
    let v = json(&["duality-test", &f, "--a", "0", "--b", "4", "--t", "0.5", "--lambda", "2", "--trials", "2000"]);
    assert_eq!(v["consistent"], true);
    assert_eq!(v["forward"]["trials"], 2000);
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let out = out.to_str().unwrap();
    ok(&["--out", out, "sweep", "--model", "bernoulli", "--graph", "z1"]);
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("model,"));
}

#[test]
fn sweep_resume_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"model": "bernoulli", "graph": "z1", "alpha": ["1", "2"], "values": [0.3, 0.9], "sizes": [50], "trials": 20}"#,
    );
    let full = dir.path().join("full.csv");
    let full = full.to_str().unwrap();
    ok(&["--seed", "4", "--out", full, "--config", &cfg, "sweep"]);
    let expected = fs::read_to_string(full).unwrap();
    assert_eq!(expected.lines().count(), 1 + 4);

    // Cut the file and its manifest after two points, then resume.
    let part = dir.path().join("part.csv");
    let part = part.to_str().unwrap();
    fs::copy(full, part).unwrap();
    let manifest = fs::read_to_string(format!("{full}.manifest")).unwrap();
    let kept: Vec<&str> = manifest.lines().take(3).collect();
    fs::write(format!("{part}.manifest"), kept.join("\n") + "\n").unwrap();
    let len: u64 = kept[2].split(' ').nth(1).unwrap().parse().unwrap();
    fs::OpenOptions::new().write(true).open(part).unwrap().set_len(len).unwrap();
    ok(&["--seed", "4", "--out", part, "--config", &cfg, "sweep", "--resume"]);
    assert_eq!(fs::read_to_string(part).unwrap(), expected);

    // A manifest from another configuration is refused.
    let out = cmperc(&["--seed", "5", "--out", part, "--config", &cfg, "sweep", "--resume"]);
    assert_eq!(out.status.code(), Some(1));

    // Flags on the command line override the file.
    let other = dir.path().join("other.csv");
    let other = other.to_str().unwrap();
    ok(&["--seed", "4", "--out", other, "--config", &cfg, "sweep", "--sizes", "30"]);
    assert!(fs::read_to_string(other).unwrap().lines().skip(1).all(|l| l.contains(",30,")));
}

#[test]
fn sweep_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for t in ["1", "3", "8"] {
        let out = dir.path().join(format!("t{t}.csv"));
        let out = out.to_str().unwrap().to_string();
        ok(&[
            "--seed", "21", "--threads", t, "--out", &out, "sweep", "--model", "continuum", "--graph", "rgg2",
            "--alpha", "2", "--values", "0.5,1", "--sizes", "6,9", "--trials", "12", "--spanning",
        ]);
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn estimate_pc_on_small_sizes() {
    let v = json(&[
        "--seed", "3", "estimate-pc", "--model", "bernoulli", "--graph", "z1", "--alpha", "1", "--sizes", "200",
        "--trials", "60", "--tol", "0.1",
    ]);
    let (lo, hi) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!(lo < hi && hi - lo <= 0.1 && lo >= 0.5 && hi <= 1.0, "{v}");
}

#[test]
fn verify_runs_battery_and_duality() {
    let v = json(&["--seed", "2", "verify", "--instances", "6", "--duality-length", "8"]);
    assert_eq!(v["passed"], true, "{v}");
    assert!(v["duality"]["applicable_words"].as_u64().unwrap() > 0);
}
