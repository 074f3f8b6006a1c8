//! End-to-end checks of the `egren` binary: report round-trips, exit codes,
//! and byte-for-byte reproducibility of seeded runs.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_egren")
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("egren-cli-{name}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn egren")
}

fn write_spec(dir: &PathBuf, name: &str, spec: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(spec).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn classify_round_trip() {
    let dir = workdir("classify");
    let spec = json!({
        "version": 1,
        "command": "classify",
        "payload": {"d": 4, "powers": [4], "n_max": 6}
    });
    let spec_path = write_spec(&dir, "classify.json", &spec);
    let out_path = dir.join("report.json");

    let out = run(&["classify", "--spec", &spec_path, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["version"], 1);
    assert_eq!(report["command"], "classify");
    assert_eq!(report["outcome"]["verdict"], "renormalizable");
    assert_eq!(report["spec"]["payload"]["d"], 4);

    // the echoed spec must itself be a runnable spec producing the same report
    let echo_path = write_spec(&dir, "echo.json", &report["spec"]);
    let out2_path = dir.join("report2.json");
    let out2 = run(&["classify", "--spec", &echo_path, "--out", out2_path.to_str().unwrap()]);
    assert!(out2.status.success());
    assert_eq!(
        fs::read(&out_path).unwrap(),
        fs::read(&out2_path).unwrap(),
        "echoed spec must reproduce the report byte for byte"
    );
}

#[test]
fn sd_job_reports_exact_delta_degree() {
    let dir = workdir("sd");
    let spec = json!({
        "version": 1,
        "command": "sd",
        "payload": {"d": 3, "delta": [[[0, 0, 0], 1.0]]}
    });
    let spec_path = write_spec(&dir, "sd.json", &spec);
    let out = run(&["sd", "--spec", &spec_path]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["outcome"]["sd_estimate"], 3.0);
    assert_eq!(report["outcome"]["exact"], true);
}

#[test]
fn seeded_extend_is_bitwise_reproducible() {
    let dir = workdir("extend");
    let spec = json!({
        "version": 1,
        "command": "extend",
        "payload": {
            "d": 1,
            "kernel": "pow(abs(x1), -0.5)",
            "declared_sd": 0.5,
            "series_terms": 40,
            "probes": 3
        },
        "seed": 7
    });
    let spec_path = write_spec(&dir, "extend.json", &spec);
    let a = run(&["extend", "--spec", &spec_path]);
    let b = run(&["extend", "--spec", &spec_path]);
    assert!(a.status.success(), "stderr: {}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "seeded runs must agree bitwise");
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["outcome"]["mode"], "unique");
}

#[test]
fn plot_emits_lambda_pairing_csv() {
    let dir = workdir("plot");
    let spec = json!({
        "version": 1,
        "command": "sd",
        "payload": {"d": 1, "kernel": "pow(abs(x1), -0.5)", "locus": "origin", "n_dyadic": 10}
    });
    let spec_path = write_spec(&dir, "sd.json", &spec);
    let csv_path = dir.join("samples.csv");
    let out = run(&["sd", "--spec", &spec_path, "--plot", csv_path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("probe,lambda,pairing"));
    let first = lines.next().expect("at least one sample row");
    assert_eq!(first.split(',').count(), 3);
}

#[test]
fn schema_violations_exit_2() {
    let dir = workdir("schema");
    // unknown field
    let spec = json!({
        "version": 1,
        "command": "classify",
        "payload": {"d": 4, "powers": [4], "bogus": true}
    });
    let spec_path = write_spec(&dir, "unknown.json", &spec);
    let out = run(&["classify", "--spec", &spec_path]);
    assert_eq!(out.status.code(), Some(2));

    // version mismatch
    let spec = json!({
        "version": 99,
        "command": "classify",
        "payload": {"d": 4, "powers": [4]}
    });
    let spec_path = write_spec(&dir, "version.json", &spec);
    let out = run(&["classify", "--spec", &spec_path]);
    assert_eq!(out.status.code(), Some(2));

    // CLI subcommand disagreeing with the spec's command
    let spec = json!({
        "version": 1,
        "command": "classify",
        "payload": {"d": 4, "powers": [4]}
    });
    let spec_path = write_spec(&dir, "mismatch.json", &spec);
    let out = run(&["sd", "--spec", &spec_path]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = workdir("numerical");
    // far too few series terms for the declared degree: the tail bound
    // cannot close and the run must fail numerically, not structurally
    let spec = json!({
        "version": 1,
        "command": "extend",
        "payload": {
            "d": 1,
            "kernel": "pow(abs(x1), -0.99)",
            "declared_sd": 0.99,
            "series_terms": 2,
            "probes": 1
        }
    });
    let spec_path = write_spec(&dir, "extend.json", &spec);
    let out = run(&["extend", "--spec", &spec_path]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
