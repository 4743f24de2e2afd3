//! End-to-end runs of the `qab` binary: exit codes, overrides, output files.

use std::process::{Command, Output};

fn qab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qab")).args(args).env("QAB_THREADS", "1").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_suite_exits_2() {
    let o = qab(&["tachyons"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("tachyons"));
}

#[test]
fn bad_config_field_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"q": [1.1, 0.0], "tolerances": {"composite": "tight"}}"#).unwrap();
    let o = qab(&["unitarity", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tolerances.composite"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_exits_2() {
    let o = qab(&["unitarity", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flag_exits_2() {
    assert_eq!(qab(&["unitarity", "--precision", "quad"]).status.code(), Some(2));
    assert_eq!(qab(&["unitarity", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn passing_run_writes_json_with_overrides_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"q": [1.2, 0.03], "g": [0.35, 0.05], "M": [1], "samples": 1, "seed": 1}"#).unwrap();
    let out = dir.path().join("report.json");
    let o = qab(&[
        "kmatrix",
        "--config",
        cfg.to_str().unwrap(),
        "--M",
        "1,2",
        "--samples",
        "2",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["config"]["M"], serde_json::json!([1, 2]));
    assert_eq!(v["config"]["q"], serde_json::json!([1.2, 0.03]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["passed"], true);
    for c in v["checks"].as_array().unwrap() {
        assert!(c["tolerance"].is_number() && c["residual"].is_number());
    }
}

#[test]
fn csv_summary_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = qab(&["bybe", "--M", "1", "--samples", "2", "--seed", "5", "--format", "csv-summary", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv");
    assert!(a.starts_with("suite,check,M,residual,threshold,pass\n"));
    assert_eq!(a.lines().count(), 3);
    assert!(a.contains("bybe,reflection equation,\"(1,1)\","));
    assert_eq!(a, run("b.csv"));
}

#[test]
fn high_precision_run() {
    let o = qab(&["unitarity", "--M", "2", "--samples", "1", "--precision", "high:160", "--format", "csv-summary"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"M": [1], "samples": 1, "tolerances": {"composite": 1e-300}}"#).unwrap();
    let o = qab(&["bybe", "--config", cfg.to_str().unwrap(), "--format", "csv-summary"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL bybe / reflection equation"));
}
