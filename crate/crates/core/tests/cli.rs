use std::path::Path;
use std::process::{Command, Output};

fn nrjam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrjam")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn grid_reports_pbch_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    let o = nrjam(&["grid", "--csv", path(&csv)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("576"), "{out}");
    assert!(out.contains("432"));
    assert!(out.contains("144"));
    assert!(!out.contains("violation"));
    let rows = std::fs::read_to_string(csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 240);
}

#[test]
fn synth_then_detect_flags_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("rx.iq");
    let reference = dir.path().join("ref.csv");
    let report = dir.path().join("report.csv");
    let o = nrjam(&["synth", "--n", "64", "--target", "5", "--offset", "0.5", "--seed", "3", "--iq", path(&iq), "--reference", path(&reference)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = nrjam(&["detect", "--iq", path(&iq), "--reference", path(&reference), "--out", path(&report)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cause: JammingSuspected"));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("subcarrier,psi,s,m_hat,verdict"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 64);
    assert_eq!(rows[5][1], "63");
    assert_eq!(rows[5][4], "LoO");
    assert!(rows.iter().enumerate().all(|(i, r)| i == 5 || r[4] == "Clean"));

    let o = nrjam(&["detect", "--iq", path(&iq), "--reference-seed", "3", "--correct"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("subcarrier,psi,s,m_hat,verdict,psi_before,psi_after\n"));
    assert!(out.lines().nth(1).unwrap().ends_with(",63,0"), "{out}");
}

#[test]
fn clean_csv_symbol_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("rx.csv");
    assert!(nrjam(&["synth", "--n", "32", "--seed", "4", "--iq", path(&iq)]).status.success());
    assert!(std::fs::read_to_string(&iq).unwrap().starts_with("re,im\n"));
    let o = nrjam(&["detect", "--iq", path(&iq), "--reference-seed", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cause: Clean"));
}

#[test]
fn wrong_fft_size_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("rx.iq");
    assert!(nrjam(&["synth", "--n", "128", "--seed", "9", "--iq", path(&iq)]).status.success());
    let o = nrjam(&["detect", "--iq", path(&iq), "--reference-seed", "9", "--n", "64", "--candidates", "32,128"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("cause: WrongNSuspected(best_n=128)"));
}

#[test]
fn errors_are_json_lines() {
    let o = nrjam(&["detect", "--iq", "/nonexistent/rx.iq", "--reference-seed", "1"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    let line: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(line["error"], "io");
    assert!(line["message"].is_string());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[signal]\nbogus = 1\n").unwrap();
    let o = nrjam(&["simulate", "--config", path(&bad)]);
    let line: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(line["error"], "config");
}

#[test]
fn roc_and_sweep_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quick.toml");
    let o = nrjam(&["roc", "--config", config, "--out", path(dir.path()), "--per-subcarrier"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let roc = std::fs::read_to_string(dir.path().join("roc.csv")).unwrap();
    assert_eq!(roc.lines().count(), 1 + 4);
    let sub = std::fs::read_to_string(dir.path().join("roc_subcarrier.csv")).unwrap();
    assert_eq!(sub.lines().count(), 1 + 4);
    let records = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 40);

    let out = dir.path().join("sweep");
    let o = nrjam(&["sweep", "--n", "16,32", "--trials", "20", "--out", path(&out)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("N=32 auc="));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);

    let o = nrjam(&["simulate", "--config", config, "--records", path(&dir.path().join("sim.jsonl"))]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("trials: 40"));
}
