//! End-to-end runs of the `branchpath` binary on the files in data/.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchpath")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_reports_the_counterexample_optimum() {
    let out = run(&["solve", data("counterexample_n4.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let energy = json(&out)["energy"].as_f64().unwrap();
    assert!((energy - 17f64.sqrt() / 4.0).abs() <= 1e-9);
}

#[test]
fn counterexample_lab_fails_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "lab",
        "counterexample",
        data("counterexample.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "FAIL verdict exits with 2");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], false);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "header plus one row per n");
}

#[test]
fn threshold_lab_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["lab", "threshold", data("threshold.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn slice_connect_decompose_and_flatnorm_run() {
    let out = run(&["slice", data("y_current.json").to_str().unwrap(), "--center", "0,0", "--radius", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["mass"].as_f64().unwrap() > 0.0);

    let out = run(&[
        "connect",
        data("mu.json").to_str().unwrap(),
        data("nu.json").to_str().unwrap(),
        "--k",
        "3",
        "--alpha",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["energy"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());

    let out = run(&["decompose", data("y_current.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!json(&out)["paths"].as_array().unwrap().is_empty());

    let out = run(&[
        "flatnorm",
        data("segment.json").to_str().unwrap(),
        data("bent.json").to_str().unwrap(),
        "--mesh",
        "0.0625",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["value"].as_f64().unwrap() <= v["mass"].as_f64().unwrap() + 1e-9);
}

#[test]
fn missing_input_is_an_error() {
    let out = run(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
