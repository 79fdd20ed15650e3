use std::path::Path;
use std::process::Command;

fn ashlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ashlab")).args(args).output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn gauge_check_writes_manifest_last() {
    let dir = tempfile::tempdir().unwrap();
    let out = ashlab(&["gauge-check", "--k", "128", "--box-length", "31.41592653589793", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["command"], "gauge-check");
    assert_eq!(m["passed"], true);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert_eq!(files.last(), Some(&"manifest.json"));
    for f in files {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(ashlab(&["simulate", "--sobolev-s", "0.1", "--out", d]).status.code(), Some(2));
    assert_eq!(ashlab(&["simulate", "--k", "7", "--out", d]).status.code(), Some(2));
    assert_eq!(ashlab(&["exact-residual", "--out", d]).status.code(), Some(2));
    assert_eq!(ashlab(&["energy-scan", "--n-cutoff", "8,4", "--out", d]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"grid": {"modes": 64, "lenght": 4}}"#).unwrap();
    assert_eq!(ashlab(&["simulate", "--config", bad.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    assert_eq!(ashlab(&["simulate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn scan_with_only_unit_symbols_short_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let out = ashlab(&["energy-scan", "--k", "64", "--box-length", "20", "--n-cutoff", "20,40", "--no-svg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.contains("2e1,true,,"));
    assert!(!dir.path().join("scan.svg").exists());
}

#[test]
fn soliton_simulation_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"params": {"a": 0, "b": 1, "c": 0, "d": 1, "e": 0}, "grid": {"modes": 256, "length": 40},
            "stepper": {"t_final": 0.3, "sample_every": 0.1},
            "initial": {"type": "soliton", "family": "two_param", "eta": 1, "carrier": 0.3},
            "output": {"svg": false, "snapshots": true, "snapshot_dtype": "complex128"}}"#,
    )
    .unwrap();
    let out = ashlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert!(m["checks"].as_array().unwrap().iter().any(|c| c["name"].as_str().unwrap().contains("closed form")));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
}
