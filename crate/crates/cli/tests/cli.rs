use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cmab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn bundled(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn error_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr holds one JSON object")
}

const SMALL: &str = r#"
seed = 3
replications = 2
algorithms = ["cetc:greedy"]
[environment]
kind = "modular"
weights = [0.4, 0.3, 0.2, 0.1]
[constraint]
kind = "cardinality"
k = 2
[horizons]
values = [2000, 8000, 32000]
"#;

#[test]
fn validate_accepts_bundled_configs() {
    for name in ["toy_coverage.toml", "toy_bim.toml"] {
        let out = cmab(&["validate", &bundled(name)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), r#"{"valid":true}"#);
    }
}

#[test]
fn validate_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, SMALL.replace("replications = 2", "replications = 0")).unwrap();
    let err = error_json(&cmab(&["validate", cfg.to_str().unwrap()]));
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("replications"));

    let err = error_json(&cmab(&["validate", "/nonexistent/config.toml"]));
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("/nonexistent/config.toml"));
}

#[test]
fn run_then_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let out = cmab(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["cells"], 6);
    for f in ["summary.csv", "cells.csv", "slopes.csv", "reference.csv"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("algorithm,label,horizon,replications,reference,"));

    let out = cmab(&["slope", out_dir.join("summary.csv").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "group,slope");
    assert!(lines[1].starts_with("cetc:greedy,"));
    let slope: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(Some(slope), report["slopes"]["cetc:greedy"].as_f64());

    let err = error_json(&cmab(&[
        "slope",
        out_dir.join("summary.csv").to_str().unwrap(),
        "--regret-column",
        "nope",
    ]));
    assert_eq!(err["error"], "config");
}

#[test]
fn robustness_writes_margins() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("margins.csv");
    let out = cmab(&[
        "robustness",
        "--instances",
        "6",
        "--randomized-runs",
        "50",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("algorithm,instance_id,epsilon,f_opt,f_s,bound,margin,pass\n"));
    assert!(text.lines().count() > 6);
}
