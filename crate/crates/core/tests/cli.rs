//! End-to-end checks of the `relay-dof` binary: output formats, artifact
//! determinism, the design -> slope pipeline, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relay-dof"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn relay-dof")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn formula_plain_text_values() {
    let out = run(&["formula", "-M", "3", "-N", "1", "-K", "27"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("achievable      : 4.500000"), "{text}");
    assert!(text.contains("upper bound     : 4.500000"), "{text}");
}

#[test]
fn formula_json_record() {
    let out = run(&["formula", "-M", "2", "-N", "3", "-K", "2", "--json"]);
    assert!(out.status.success());
    let rec: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rec["M"], 2);
    let ach = rec["achievable"].as_f64().unwrap();
    let upper = rec["upper"].as_f64().unwrap();
    let sym = rec["symmetric"].as_f64().unwrap();
    assert!(ach <= upper + 1e-12);
    assert!(sym <= ach + 1e-12);
}

#[test]
fn formula_rejects_zero_antennas() {
    let out = run(&["formula", "-M", "0", "-N", "1", "-K", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_flags_exit_with_usage_code() {
    let out = run(&["formula", "-M", "not-a-number", "-N", "1", "-K", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curves.csv");
    let out = run(&[
        "sweep",
        "-K",
        "2",
        "--ratio-min",
        "0.5",
        "--ratio-max",
        "1.5",
        "--points",
        "2",
        "--out",
        csv.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "ratio,achievable,symmetric,upper");
    let manifest = dir.path().join("curves.csv.manifest.json");
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "sweep");
    assert!(m["timestamp"].is_null());
}

fn design_to(path: &Path, m: &str, n: &str, k: &str, seed: &str) -> Output {
    run(&[
        "design",
        "-M",
        m,
        "-N",
        n,
        "-K",
        k,
        "--seed",
        seed,
        "--out",
        path.to_str().unwrap(),
        "--no-timestamp",
    ])
}

#[test]
fn design_artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("design.json");
    assert!(design_to(&rec, "4", "3", "2", "7").status.success());
    let first = std::fs::read(&rec).unwrap();
    std::fs::remove_file(&rec).unwrap();
    assert!(design_to(&rec, "4", "3", "2", "7").status.success());
    let second = std::fs::read(&rec).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn design_then_slope_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("design.json");
    let out = design_to(&rec, "4", "3", "2", "3");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace_csv = dir.path().join("trace.csv");
    let out = run(&[
        "slope",
        rec.to_str().unwrap(),
        "--snr",
        "40,50,60",
        "--json",
        "--out",
        trace_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let deviation = rec["deviation"].as_f64().unwrap();
    assert!(deviation <= 0.05, "slope deviation {deviation}");
    let text = std::fs::read_to_string(&trace_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,sum_rate_bits");
    assert_eq!(lines.len(), 4);
}

#[test]
fn slope_missing_file_is_io_error() {
    let out = run(&["slope", "/nonexistent/design.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn min_relays_values_and_unreachable() {
    let out = run(&["min-relays", "-M", "2", "-N", "1", "--target", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "12");

    // 3M/2 caps the total DoF regardless of K.
    let out = run(&["min-relays", "-M", "2", "-N", "1", "--target", "3.1"]);
    assert_eq!(out.status.code(), Some(2));
}
