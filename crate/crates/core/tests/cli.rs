use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_perisolve");

fn perisolve(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const MANUFACTURED_EXPR: &str = r#""f": "-z1 - z0 + cos(2*pi*t)", "g": "-w1 - w0 + cos(2*pi*t)",
    "monotone_f_w0": true, "monotone_g_z0": true, "cross_env_f": 0, "cross_env_g": 0"#;

#[test]
fn certify_vdp_passes_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = perisolve(
        dir.path(),
        &["certify", "--builtin", "vdp", "--grid", "201", "--report", "cert.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("cert.json"));
    assert_eq!(report["overall"], "PASS");
    assert_eq!(report["conditions"].as_array().unwrap().len(), 9);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 10);
    assert!(report["bounds_note"].as_str().unwrap().contains("alpha2_0"));
}

#[test]
fn certify_example_reports_the_nagumo_failure() {
    let dir = TempDir::new().unwrap();
    let out = perisolve(dir.path(), &["certify", "--builtin", "example", "--grid", "201"]);
    assert_eq!(code(&out), 1);
    let report = read_json(&dir.path().join("report.json"));
    let failing: Vec<&str> = report["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["verdict"] != "PASS")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["nagumo_f"]);
}

#[test]
fn non_periodic_bound_fails_the_endpoint_condition() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &format!(
            r#"{{"system": {{{MANUFACTURED_EXPR}}},
                "bounds": {{"alpha1": [-1, 0.5], "alpha2": [-1], "beta1": [1], "beta2": [1]}},
                "envelopes": {{"f": {{"a": 4, "b": 1}}, "g": {{"a": 4, "b": 1}}}},
                "certification": {{"grid_t": 101}}}}"#
        ),
    );
    let out = perisolve(dir.path(), &["certify", "--config", &cfg]);
    assert_eq!(code(&out), 1);
    let report = read_json(&dir.path().join("report.json"));
    let endpoints = report["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "lower_endpoints")
        .unwrap();
    assert_eq!(endpoints["verdict"], "FAIL");
}

#[test]
fn configuration_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing_g = write_config(
        dir.path(),
        "nog.json",
        r#"{"system": {"f": "z0"}, "bounds": {"alpha1": [-1], "alpha2": [-1], "beta1": [1], "beta2": [1]}, "envelopes": {"f": {"a": 1, "b": 1}, "g": {"a": 1, "b": 1}}}"#,
    );
    let out = perisolve(dir.path(), &["certify", "--config", &missing_g]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.g"));

    let not_json = write_config(dir.path(), "broken.json", "{ system: ");
    let unknown_field = write_config(
        dir.path(),
        "extra.json",
        r#"{"system": {"builtin": "vdp"}, "colour": 1}"#,
    );
    let bad_expr = write_config(dir.path(), "expr.json", r#"{"system": {"f": "z0 +* 1", "g": "w0"}}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["certify", "--config", &not_json],
        vec!["certify", "--config", &unknown_field],
        vec!["certify", "--config", &bad_expr],
        vec!["certify", "--config", "does/not/exist.json"],
        vec!["certify"],
        vec!["certify", "--builtin", "lorenz"],
        vec!["certify", "--builtin", "vdp", "--grid", "2"],
        vec!["solve", "--builtin", "vdp", "--steps", "0"],
        vec!["solve", "--builtin", "vdp", "--tol", "-1"],
        vec!["solve", "--builtin", "vdp", "--method", "euler"],
        vec!["reproduce", "lorenz"],
        vec!["reproduce"],
        vec!["frobnicate"],
        vec!["certify", "--no-such-flag"],
    ];
    for args in cases {
        assert_eq!(code(&perisolve(dir.path(), &args)), 3, "{args:?}");
    }
}

#[test]
fn help_and_version_exit_0() {
    let dir = TempDir::new().unwrap();
    for args in [["--help"], ["--version"]] {
        let out = perisolve(dir.path(), &args);
        assert_eq!(code(&out), 0);
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn solve_manufactured_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    let out = perisolve(
        dir.path(),
        &[
            "solve",
            "--builtin",
            "manufactured_linear",
            "--skip-certify",
            "--out",
            "traj.csv",
            "--report",
            "solve.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&dir.path().join("solve.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["clamps_active"], false);
    assert!(report["manufactured_fit"]["coefficient_error"].as_f64().unwrap() < 1e-6);
    assert!(report["meta"]["version"].is_string());
    for key in ["lambda_mu_path", "residual", "r_bounds", "n_star", "localization"] {
        assert!(!report[key].is_null(), "{key}");
    }
    let csv = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,z,w,zp,wp"));
    assert_eq!(lines.count(), 8001);
}

#[test]
fn solve_from_an_expression_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sys.json",
        &format!(
            r#"{{"system": {{{MANUFACTURED_EXPR}}},
                "bounds": {{"alpha1": [-1], "alpha2": [-1], "beta1": [1], "beta2": [1]}},
                "envelopes": {{"f": {{"a": 4, "b": 1}}, "g": {{"a": 4, "b": 1}}}},
                "solver": {{"output_samples": 101}},
                "outputs": {{"trajectory": "orbit.csv", "report": "orbit.json"}}}}"#
        ),
    );
    let out = perisolve(
        dir.path(),
        &[
            "solve",
            "--config",
            &cfg,
            "--skip-certify",
            "--method",
            "rk45",
            "--steps",
            "5",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    let report = read_json(&dir.path().join("orbit.json"));
    assert_eq!(
        report["lambda_mu_path"].as_array().unwrap().last().unwrap(),
        &serde_json::json!([1.0, 1.0])
    );
}

#[test]
fn newton_failure_exits_1_with_last_good_point() {
    let dir = TempDir::new().unwrap();
    // a residual tolerance below roundoff cannot be met past the linear start
    let out = perisolve(
        dir.path(),
        &[
            "solve",
            "--builtin",
            "manufactured_linear",
            "--skip-certify",
            "--tol",
            "1e-30",
            "--steps",
            "2",
        ],
    );
    assert_eq!(code(&out), 1);
    let report = read_json(&dir.path().join("solve.json"));
    assert_eq!(report["converged"], false);
    assert_eq!(report["last_good"], serde_json::json!([0.0, 0.0]));
    assert!(report["failure"].as_str().unwrap().contains("Newton failed"));
}

#[test]
fn active_clamps_exit_2() {
    let dir = TempDir::new().unwrap();
    // strips of half-width 0.002 cannot hold an orbit of amplitude 0.026
    let cfg = write_config(
        dir.path(),
        "narrow.json",
        &format!(
            r#"{{"system": {{{MANUFACTURED_EXPR}}},
                "bounds": {{"alpha1": [-0.001], "alpha2": [-0.001], "beta1": [0.001], "beta2": [0.001]}},
                "envelopes": {{"f": {{"a": 4, "b": 1}}, "g": {{"a": 4, "b": 1}}}}}}"#
        ),
    );
    let out = perisolve(dir.path(), &["solve", "--config", &cfg, "--skip-certify"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&dir.path().join("solve.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["clamps_active"], true);
}

#[test]
fn reproduce_vdp_bundle_is_complete_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = perisolve(dir.path(), &["reproduce", "vdp", "--grid", "201", "--out", "a"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    let b = Command::new(BIN)
        .current_dir(dir.path())
        .env("PERISOLVE_THREADS", "1")
        .args(["reproduce", "vdp", "--grid", "201", "--out", "b"])
        .output()
        .unwrap();
    assert_eq!(code(&b), 0);
    for file in [
        "certification.json",
        "shifted_bounds.csv",
        "trajectory.csv",
        "solve.json",
        "summary.txt",
    ] {
        let (x, y) = (
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
        );
        assert!(x == y, "{file} differs between runs");
    }
    let shifts = fs::read_to_string(dir.path().join("a/shifted_bounds.csv")).unwrap();
    assert_eq!(shifts.lines().next(), Some("t,alpha1_0,beta1_0,alpha2_0,beta2_0"));
    assert_eq!(shifts.lines().count(), 1002);
    let summary = fs::read_to_string(dir.path().join("a/summary.txt")).unwrap();
    assert_eq!(summary.matches("DIFFERS").count(), 2);
    assert_eq!(summary.matches("MATCH").count(), 2);
    assert!(summary.contains("alpha1_0  DIFFERS  computed -2 + t - t^2 | reference -5/4 + t - t^2"));
}

#[test]
fn reproduce_example_matches_all_shifts() {
    let dir = TempDir::new().unwrap();
    let out = perisolve(
        dir.path(),
        &["reproduce", "example", "--grid", "201", "--out", "bundle"],
    );
    // certification fails on the Nagumo condition for f
    assert_eq!(code(&out), 1);
    let summary = fs::read_to_string(dir.path().join("bundle/summary.txt")).unwrap();
    assert_eq!(summary.matches("MATCH").count(), 4);
    assert!(!summary.contains("DIFFERS"));
    let solve = read_json(&dir.path().join("bundle/solve.json"));
    assert_eq!(solve["converged"], true);
    assert_eq!(solve["localization"]["pass"], true);
}
