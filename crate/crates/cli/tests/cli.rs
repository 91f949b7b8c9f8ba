use std::path::Path;
use std::process::{Command, Output};

use symplab::snapshot::load;

fn symplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!("{body}\n[output]\ndir = \"{}\"\n", dir.join("out").display());
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn zero_data_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 16\nt_final = 0.5\ndt = 0.1\n[initial]\nkind = \"zero\"",
    );
    let out = symplab(&["run-eulerian", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let snap = load(&dir.path().join("out/final.snap")).unwrap();
    let u = snap.vector_field().unwrap();
    assert_eq!(u.max_abs(), 0.0);
    let csv = std::fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,"));
    assert_eq!(stdout_json(&out)["steps"], 5);
}

#[test]
fn steady_shear_does_not_drift() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 32\nt_final = 1.0\ncfl = 0.5\n[initial]\nkind = \"steady_shear\"\namplitude = 1.0",
    );
    let out = symplab(&["run-eulerian", "--config", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let u = load(&dir.path().join("out/final.snap")).unwrap().vector_field().unwrap();
    let grid = u.grid().clone();
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let v = u.at(i);
        worst = worst.max((v[0] - x[1].sin()).abs()).max(v[1].abs());
    }
    assert!(worst < 1e-10, "drift {worst}");
}

#[test]
fn low_sobolev_index_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 16\ns = 2.0\ndt = 0.1\n[initial]\nkind = \"zero\"",
    );
    let out = symplab(&["run-eulerian", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    let issues = err["issues"].as_array().unwrap();
    assert!(issues
        .iter()
        .any(|i| i["field"] == "s" && i["message"].as_str().unwrap().contains("s must exceed 2")));
}

#[test]
fn config_errors_are_reported_per_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 15\ndt = 0.1\ncfl = 0.5\n[initial]\nkind = \"random_symplectic\"",
    );
    let out = symplab(&["run-eulerian", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let fields: Vec<String> = stderr_json(&out)["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["field"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(fields, ["points", "dt", "initial.seed"]);
    // --seed fills the missing seed.
    let out = symplab(&["run-eulerian", "--config", &cfg, "--seed", "3"]);
    let err = stderr_json(&out);
    assert!(!err["issues"].as_array().unwrap().iter().any(|i| i["field"] == "initial.seed"));
}

#[test]
fn malformed_toml_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "n = 1\npoints = = 3\n").unwrap();
    let out = symplab(&["run-eulerian", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 1\npoints = 16\ndt = 0.1\nbogus = 1\n[initial]\nkind = \"zero\"");
    let out = symplab(&["run-eulerian", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lagrangian_zero_data_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 16\nt_final = 0.2\ndt = 0.1\n[initial]\nkind = \"zero\"",
    );
    let out = symplab(&["run-lagrangian", "--config", &cfg, "--check-equivalence"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let phi = load(&dir.path().join("out/map.snap")).unwrap().diffeo_map().unwrap();
    assert_eq!(phi.displacement().max_abs(), 0.0);
    let summary = stdout_json(&out);
    assert_eq!(summary["equivalence_hsm1"], 0.0);
    assert_eq!(summary["symplectic_residual"], 0.0);
}

#[test]
fn lagrangian_residual_expectation_for_raw_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 32\nt_final = 1.0\ncfl = 0.5\n[initial]\nkind = \"random_field\"\nseed = 44\nband = 3\namplitude = 0.05",
    );
    let out = symplab(&["run-lagrangian", "--config", &cfg, "--expect-residual"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["residual_ok"], true);
}

#[test]
fn oracle_agrees_with_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 64\nt_final = 0.5\ncfl = 0.5\n[initial]\nkind = \"random_symplectic\"\nseed = 5\nband = 8",
    );
    let out = symplab(&["experiment", "oracle2d", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rel = stdout_json(&out)["relative_l2_discrepancy"].as_f64().unwrap();
    assert!(rel <= 1e-6, "{rel}");
}

#[test]
fn nonuniform_small_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 16\ndt = 0.1\n[initial]\nkind = \"zero\"\n[nonuniform]\npoints = 96\nprobe_points = 48\nterms = 2",
    );
    let out = symplab(&["experiment", "nonuniform", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/nonuniform.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/nonuniform.json")).unwrap()).unwrap();
    assert!(sidecar["m_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn nonuniform_guard_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 1\npoints = 16\ndt = 0.1\n[initial]\nkind = \"zero\"\n[nonuniform]\npoints = 48\nprobe_points = 24\nterms = 6",
    );
    let out = symplab(&["experiment", "nonuniform", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "resolution_guard");
}

#[test]
fn probes_print_json() {
    let out = symplab(&["experiment", "probes"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert!(report["commutator"]["ratios"].as_array().unwrap().len() > 1);
    assert!(report["log"]["constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_single_criterion() {
    let out = symplab(&["verify", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("PASS"), "{text}");
    assert_eq!(symplab(&["verify", "99"]).status.code(), Some(2));
}
