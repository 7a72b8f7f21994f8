use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gml_core::io::read_field_csv;
use gml_core::proximal::residual_norm;
use gml_core::{build_cartesian_grid, CartesianDomain, ProblemSpec};
use serde_json::Value;

fn gml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gml"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field(summary: &str, key: &str) -> f64 {
    let tok = summary
        .split_whitespace()
        .find_map(|t| t.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {summary:?}"));
    tok.parse().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cartesian_plateau() {
    let out = gml(&[
        "solve",
        "--mode",
        "cartesian",
        "--eps",
        "0.001",
        "--K",
        "50",
        "--N",
        "100",
        "--M",
        "100",
        "--f",
        "const:1",
    ]);
    assert!(out.status.success(), "{out:?}");
    let s = stdout(&out);
    assert_eq!(s.lines().count(), 1);
    assert!((field(&s, "center") - 1.3247).abs() < 5e-3, "{s}");
}

#[test]
fn polar_symbolic_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lines.json");
    let out = gml(&[
        "solve",
        "--mode",
        "polar-symbolic",
        "--eps",
        "0.01",
        "--K",
        "10",
        "--iters",
        "149",
        "--out-expr",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let doc = read_json(&path);
    let lines = doc["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 99);
    let l60 = &lines[59];
    assert_eq!(l60["line"], 60);
    let constant = l60["terms"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["exp"].as_array().unwrap().iter().all(|e| e == 0))
        .unwrap()["coeff"]
        .as_f64()
        .unwrap();
    assert!((constant - 1.32449).abs() < 2e-3, "{constant}");
    assert!(l60["text"].as_str().unwrap().starts_with("1.3244"));
    assert!((field(&stdout(&out), "u60") - 1.32449).abs() < 2e-3);
}

#[test]
fn compare_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = gml(&[
        "solve",
        "--mode",
        "compare",
        "--eps",
        "0.1",
        "--N",
        "20",
        "--M",
        "20",
        "--out-report",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report = read_json(&path);
    assert!(report["sup_diff"].as_f64().unwrap() <= 1e-2);
    assert!(report["l2_diff"].as_f64().unwrap() <= 5e-3);
    assert!(field(&stdout(&out), "sup_diff") <= 1e-2);
}

#[test]
fn field_csv_round_trips_residual() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("u.csv");
    let report = dir.path().join("r.json");
    let out = gml(&[
        "solve",
        "--mode",
        "cartesian",
        "--eps",
        "0.05",
        "--N",
        "24",
        "--M",
        "18",
        "--out-field",
        csv.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let spec = ProblemSpec::unit_square(0.05, 50.0).unwrap();
    let grid = build_cartesian_grid(&CartesianDomain::unit_square(), 24, 18).unwrap();
    let u = read_field_csv(fs::File::open(&csv).unwrap(), &grid).unwrap();
    let recomputed = residual_norm(&spec, &grid, &u);
    let stored = read_json(&report)["gml"]["residual_sup"].as_f64().unwrap();
    assert!(
        (recomputed - stored).abs() <= 1e-12,
        "{recomputed} vs {stored}"
    );
}

#[test]
fn oracle_mode_writes_field() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("u.csv");
    let out = gml(&[
        "solve",
        "--mode",
        "oracle",
        "--eps",
        "0.1",
        "--N",
        "10",
        "--out-field",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,u"));
    assert_eq!(text.lines().count(), 1 + 11 * 11);
    assert!(field(&stdout(&out), "residual") <= 1e-10);
}

#[test]
fn expression_source_and_curved_domain() {
    let out = gml(&[
        "solve",
        "--mode",
        "cartesian",
        "--eps",
        "0.05",
        "--N",
        "30",
        "--f",
        "sin(pi*x)*exp(y)",
        "--y1",
        "-0.2*x",
        "--y2",
        "1 + 0.5*x^2",
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(field(&stdout(&out), "center") > 0.0);
}

#[test]
fn exit_codes() {
    let usage = [
        vec!["solve", "--mode", "nope", "--eps", "0.1"],
        vec!["solve", "--mode", "cartesian"],
        vec!["solve", "--mode", "cartesian", "--eps", "-1"],
        vec!["solve", "--mode", "cartesian", "--eps", "0.1", "--N", "1"],
        vec!["solve", "--mode", "cartesian", "--eps", "0.1", "--f", "2*"],
        vec![
            "solve",
            "--mode",
            "polar-symbolic",
            "--eps",
            "0.1",
            "--f",
            "x",
        ],
    ];
    for args in usage {
        assert_eq!(gml(&args).status.code(), Some(2), "{args:?}");
    }
    let stalled = gml(&[
        "solve",
        "--mode",
        "cartesian",
        "--eps",
        "0.1",
        "--N",
        "10",
        "--max-iter",
        "3",
    ]);
    assert_eq!(stalled.status.code(), Some(3));
    assert!(stdout(&stalled).starts_with("cartesian iterations=3"));
    let io = gml(&[
        "solve",
        "--mode",
        "cartesian",
        "--eps",
        "0.1",
        "--N",
        "10",
        "--out-field",
        "/nonexistent-dir/u.csv",
    ]);
    assert_eq!(io.status.code(), Some(4));
}
