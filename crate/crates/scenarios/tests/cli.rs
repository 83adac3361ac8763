//! The command line and its exit-code contract.

use std::fs;
use std::process::Command;

fn chlab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_chlab"))
        .args(args)
        .env("CHLAB_WORKERS", "2")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

#[test]
fn list_and_version() {
    let (code, text) = chlab(&["list"]);
    assert_eq!(code, 0);
    assert!(text.contains("comparison_identity") && text.contains("n3_estimates"));
    let (code, text) = chlab(&["version"]);
    assert_eq!(code, 0);
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn run_writes_reports_and_exit_codes_distinguish_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, _) = chlab(&["run", "sphere_euclidean", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.join("report.json").exists() && out.join("spheres.csv").exists());

    let (_, default) = chlab(&["config", "sphere_euclidean"]);
    let mut cfg: serde_json::Value = serde_json::from_str(&default).unwrap();
    let path = dir.path().join("cfg.json");

    cfg["numerics"]["tolerances"]["rel_err"] = 1e-300.into();
    fs::write(&path, cfg.to_string()).unwrap();
    let (code, text) = chlab(&["run", "sphere_euclidean", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1, "{text}");

    cfg["numerics"]["tolerances"]["rel_err"] = (-1.0).into();
    fs::write(&path, cfg.to_string()).unwrap();
    let (code, _) = chlab(&["run", "sphere_euclidean", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);

    let (code, _) = chlab(&["run", "sphere_hyperbolic", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _) = chlab(&["run", "no_such_scenario"]);
    assert_eq!(code, 2);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let (code, _) = chlab(&["run", "sphere_euclidean", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code, 4);
}

#[test]
fn invalid_worker_override_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_chlab"))
        .args(["run", "sphere_euclidean", "--out", "/tmp/chlab-workers-test"])
        .env("CHLAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
