//! Basic command-line behavior: exit codes and output files.

use std::path::Path;
use std::process::Command;

fn adaplan() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaplan"))
}

#[test]
fn no_arguments_fails_with_nonzero_exit() {
    let out = adaplan().output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn unknown_subcommand_fails() {
    let out = adaplan().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn gen_data_rejects_tiny_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaplan()
        .args(["gen-data", "--steps", "5", "--seed", "1", "--out"])
        .arg(dir.path().join("d.jsonl"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--steps"), "diagnostic names the flag: {stderr}");
}

#[test]
fn eval_with_missing_checkpoints_reports_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaplan()
        .args([
            "eval",
            "--mode",
            "continuous",
            "--episodes",
            "1",
            "--seed",
            "0",
        ])
        .arg("--diffuser")
        .arg(dir.path().join("missing.adpn"))
        .arg("--invdyn")
        .arg(dir.path().join("missing-dir"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn gen_data_writes_dataset_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.jsonl");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"env": {"traffic_count": 5, "max_steps": 30}}"#).unwrap();
    let out = adaplan()
        .args(["gen-data", "--steps", "200", "--seed", "3"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(data.exists());
    assert!(Path::new(&format!("{}.norm.json", data.display())).exists());
}
