// End-to-end runs of the `sublln` binary: exit codes, report files, and the
// promise that worker-pool size never changes a byte of output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sublln::capacity::PathEvent;
use sublln::config::{corpus_a, corpus_c, corpus_d, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sublln"))
}

fn write_cfg(dir: &Path, name: &str, cfg: &ScenarioConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = bin().arg("choquet").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("missing --config"), "stderr: {}", stderr_of(&out));
}

#[test]
fn no_subcommand_is_a_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_json_reports_the_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  oops\n}\n").unwrap();
    let out = bin().args(["choquet", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("bad.json:3"), "stderr: {err}");
}

#[test]
fn choquet_prints_the_power_moment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "c.json", &corpus_c());
    let report = dir.path().join("choquet.csv");
    let out = bin()
        .args(["choquet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let v: f64 = stdout_of(&out).trim().parse().unwrap();
    assert!((v - 4.75).abs() < 1e-6, "stdout value {v}");
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("transform,value\n"), "report: {text}");
}

#[test]
fn capacity_exact_prints_the_dp_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = corpus_a();
    cfg.horizons = vec![2];
    cfg.events = vec![PathEvent::CustomThreshold { threshold: 2.0 }];
    let path = write_cfg(dir.path(), "a2.json", &cfg);
    let out = bin().args(["capacity", "exact", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let v: f64 = stdout_of(&out).trim().parse().unwrap();
    assert_eq!(v.to_bits(), (0.7f64 * 0.7).to_bits());
}

#[test]
fn capacity_exact_refuses_continuous_members() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(dir.path(), "c.json", &corpus_c());
    let out = bin().args(["capacity", "exact", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("error:"), "stderr: {}", stderr_of(&out));
}

#[test]
fn worker_pool_size_never_changes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = corpus_d();
    cfg.horizons = vec![200, 400];
    cfg.replications = 300;
    let path = write_cfg(dir.path(), "d.json", &cfg);
    let mut reports: Vec<(Option<i32>, Vec<u8>)> = Vec::new();
    for threads in ["1", "4", "8"] {
        let report = dir.path().join(format!("wlln-{threads}.csv"));
        let out = bin()
            .args(["wlln", "--threads", threads, "--config"])
            .arg(&path)
            .arg("--out")
            .arg(&report)
            .output()
            .unwrap();
        assert!(
            matches!(out.status.code(), Some(0) | Some(1)),
            "unexpected exit: {:?} stderr: {}",
            out.status.code(),
            stderr_of(&out)
        );
        reports.push((out.status.code(), std::fs::read(&report).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    assert!(!reports[0].1.is_empty());
}

#[test]
fn fixed_seed_fixes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = corpus_d();
    cfg.horizons = vec![100];
    cfg.replications = 200;
    let path = write_cfg(dir.path(), "d.json", &cfg);
    let run = || {
        let out = bin()
            .args(["capacity", "search", "--seed", "11", "--config"])
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        stdout_of(&out)
    };
    let first = run();
    assert_eq!(first, run());
    let v: f64 = first.trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn series_report_has_the_budget_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = corpus_c();
    cfg.horizons = vec![500];
    let path = write_cfg(dir.path(), "c.json", &cfg);
    let report = dir.path().join("step2.csv");
    let out = bin()
        .args(["series", "step2", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("N,partial_sum,bound,remainder\n"), "report: {text}");
    assert!(text.lines().count() > 100);
}

#[test]
fn slln_json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sublln::config::corpus_b();
    cfg.horizons = vec![50, 100];
    cfg.replications = 150;
    let path = write_cfg(dir.path(), "b.json", &cfg);
    let report = dir.path().join("slln.json");
    let out = bin()
        .args(["slln", "--format", "json", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed.get("checkpoints").is_some());
    assert!(parsed.get("strategies").is_some());
}

#[test]
fn audit_csv_reports_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(dir.path(), "a.json", &corpus_a());
    let report = dir.path().join("audit.csv");
    let out = bin()
        .args(["audit", "--depth", "4", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("strategy,max_violation"));
    assert!(lines.clone().count() >= 2);
    assert!(lines.all(|l| l.ends_with(",0")), "nonzero violation in: {text}");
}
