//! End-to-end tests of the `expsumlab` binary: exit codes, report layout,
//! override plumbing, and determinism across worker counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Output;

use serde_json::Value;
use tempfile::TempDir;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_expsumlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

/// Data rows of `rows.csv` (header stripped), split into columns.
fn csv_rows(out_dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(out_dir.join("rows.csv")).expect("rows.csv written");
    let mut lines = text.lines();
    let header = lines.next().expect("header line");
    assert!(header.starts_with("experiment,curve_family,"));
    lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn col(row: &[String], idx: usize) -> f64 {
    row[idx].parse().expect("numeric column")
}

// Column indices in the fixed schema.
const VALUE: usize = 10;
const BOUND: usize = 11;
const RATIO: usize = 12;
const STDERR: usize = 13;
const SAMPLES_X1: usize = 14;

#[test]
fn conditions_row_reports_window_constants() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "{}");
    let out = run_in(tmp.path(), &["conditions", "--config", "config.json", "--out", "r"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rows = csv_rows(&tmp.path().join("r"));
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[0], "conditions");
    assert_eq!(row[1], "moment");
    // (value, bound, ratio, stderr) carry (A4, A2, A3, A1).
    assert_eq!(col(row, VALUE), 6.0);
    assert_eq!(col(row, BOUND), 144.0);
    assert_eq!(col(row, RATIO), 144.0);
    assert_eq!(col(row, STDERR), 64.0);
}

#[test]
fn oracle_count_reproduces_the_hand_count() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), r#"{"n_list": [4], "interval": [2, 4], "k": 1}"#);
    let out = run_in(
        tmp.path(),
        &["oracle-count", "--config", "config.json", "--out", "r"],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&tmp.path().join("r"));
    assert_eq!(rows.len(), 1);
    assert_eq!(col(&rows[0], VALUE), 3.0);
}

#[test]
fn invalid_config_exits_two_without_reports() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), r#"{"method": "bogus"}"#);
    let out = run_in(tmp.path(), &["moment", "--config", "config.json", "--out", "r"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("r").exists(), "no partial output on config error");

    // A missing config file is the same class of failure.
    let out = run_in(tmp.path(), &["moment", "--config", "absent.json", "--out", "r2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("r2").exists());
}

#[test]
fn failed_assertion_exits_one_but_still_writes_reports() {
    let tmp = TempDir::new().unwrap();
    // t^2 and t have identically vanishing third derivatives, so the
    // nondegeneracy constant is exactly zero and the check must fail.
    write_config(
        tmp.path(),
        r#"{"curve": {"family": "power", "a": 2.0, "b": 1.0}}"#,
    );
    let out = run_in(tmp.path(), &["conditions", "--config", "config.json", "--out", "r"]);
    assert_eq!(out.status.code(), Some(1));

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pass"], Value::Bool(false));
    let failed: Vec<&str> = summary["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["pass"] == Value::Bool(false))
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["nondegenerate"]);
    assert_eq!(csv_rows(&tmp.path().join("r")).len(), 1);
}

#[test]
fn set_overrides_reach_the_run_and_the_summary() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "{}");
    let out = run_in(
        tmp.path(),
        &[
            "conditions",
            "--config",
            "config.json",
            "--set",
            "grid=129",
            "--out",
            "r",
        ],
    );
    assert!(out.status.success());

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["grid"], Value::from(129));
    // The conditions row echoes the grid it actually measured on.
    assert_eq!(col(&csv_rows(&tmp.path().join("r"))[0], SAMPLES_X1), 129.0);
}

#[test]
fn reports_are_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    write_config(
        tmp.path(),
        r#"{"n_list": [4, 6, 8], "p": 12, "method": "grid"}"#,
    );
    for workers in ["1", "4"] {
        let out = run_in(
            tmp.path(),
            &[
                "moment",
                "--config",
                "config.json",
                "--workers",
                workers,
                "--out",
                &format!("r{workers}"),
            ],
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let one = fs::read(tmp.path().join("r1/rows.csv")).unwrap();
    let four = fs::read(tmp.path().join("r4/rows.csv")).unwrap();
    assert_eq!(one, four, "rows.csv must not depend on the worker count");
}
