use std::path::Path;
use std::process::{Command, Output};

use abelops::config::RunConfig;
use serde_json::Value;

fn abelops(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abelops"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env("ABELOPS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(abelops(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(abelops(dir.path(), &["--curve", "0", "1", "periods"]).status.code(), Some(2));
    assert_eq!(abelops(dir.path(), &["--tol-scale", "-1", "periods"]).status.code(), Some(2));
    let out = abelops(dir.path(), &["--curve", "0", "2", "1", "3", "4", "periods"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-increasing"));
    assert_eq!(abelops(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_file_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "sede = 3\n").unwrap();
    let out = abelops(dir.path(), &["--config", cfg.to_str().unwrap(), "periods"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}

#[test]
fn bad_thread_count_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_abelops"))
        .args(["--out", dir.path().to_str().unwrap(), "periods"])
        .env("ABELOPS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn periods_artifact_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = abelops(dir.path(), &["--seed", "5", "periods"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("Omega.json"));
    let mut cfg = RunConfig::default();
    cfg.seed = 5;
    assert_eq!(v["config_hash"], cfg.hash());
    let o11 = v["Omega"][0][0].as_array().unwrap();
    assert!(o11[0].as_f64().unwrap().abs() < 1e-12);
    assert!((o11[1].as_f64().unwrap() - 1.2535200070792203).abs() < 1e-12);
}

#[test]
fn curve_flag_changes_the_periods() {
    let dir = tempfile::tempdir().unwrap();
    let out = abelops(dir.path(), &["--curve", "-1", "0", "1", "2", "5", "periods"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("Omega.json"));
    assert_eq!(v["branch"][0].as_f64(), Some(-1.0));
    assert!((v["Omega"][0][0][1].as_f64().unwrap() - 1.2535200070792203).abs() > 1e-3);
}

#[test]
fn constants_json_lists_the_table() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(abelops(dir.path(), &["constants"]).status.code(), Some(0));
    let v = read_json(&dir.path().join("constants.json"));
    for key in ["K", "K_inf", "c1", "c8", "alpha", "beta", "gamma", "a2", "config_hash"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn coeffs_writes_slice_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = abelops(dir.path(), &["--grid", "3", "coeffs", "--slice", "imaginary"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("coeffs/h11.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y1,y2,re,im"));
    assert_eq!(lines.count(), 9);
    let m = read_json(&dir.path().join("coeffs/manifest.json"));
    assert_eq!(m["slice"], "x = (1/2 + i y1, 1/2 + i y2)");
    assert!(m["config_hash"].is_string());
}

#[test]
fn reconstruct_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let out = abelops(dir.path(), &["reconstruct", "--lambda", "D11", "--x", "0.1,0.05,-0.07,0.12"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(dir.path().join("reconstruct.json")).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["lambda"], "D11");
    assert_eq!(v["reconstructions"].as_array().unwrap().len(), 1);
}

#[test]
fn scan_writes_four_tori() {
    let dir = tempfile::tempdir().unwrap();
    let out = abelops(dir.path(), &["scan", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for k in 1..=4 {
        let text = std::fs::read_to_string(dir.path().join(format!("T{k}.csv"))).unwrap();
        assert!(text.starts_with("t1,t2,re,im\n"));
        assert_eq!(text.lines().count(), 37);
    }
    let v = read_json(&dir.path().join("scan.json"));
    assert!(v["t1_invariant_modulus"]["refined_min"].as_f64().unwrap() > 0.0);
}
