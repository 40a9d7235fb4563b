//! End-to-end checks of the command-line interface: config-file precedence,
//! exit codes, and output formats.

use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxsaddle"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn proxsaddle");
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_emits_trajectory_csv() {
    let out = run_ok(&[
        "run", "--problem", "absym", "--algo", "prox-point", "--mu", "0.25", "--alpha", "0.9",
        "--x0", "0.4,0",
    ]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("iter,x_0,x_1,f,env_grad_norm\n"));
    assert!(csv.lines().count() > 5);
}

#[test]
fn run_at_fixed_point_is_single_row() {
    let out = run_ok(&[
        "run", "--problem", "absym", "--mu", "0.25", "--alpha", "0.9", "--x0", "0,0",
    ]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2, "header plus one row:\n{csv}");
}

#[test]
fn parameter_error_exits_2_with_json_reason() {
    let out = bin()
        .args(["run", "--problem", "absym", "--mu", "0.6", "--x0", "0,0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(stderr.lines().next().unwrap()).unwrap();
    assert_eq!(parsed["error"], "parameter");
}

#[test]
fn unknown_problem_exits_2() {
    let out = bin().args(["run", "--problem", "nonesuch", "--x0", "0,0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = std::env::temp_dir();
    let config_path = dir.join("proxsaddle_cli_test.conf");
    fs::write(
        &config_path,
        "subcommand = run\nproblem = absym\nx0 = 0,0.5\nalpha = 0.9\nmax-iters = 3\n",
    )
    .unwrap();
    // From the file: alpha 0.9, budget 3. The flag overrides the budget to 5;
    // record-every falls back to its default of 1.
    let out = run_ok(&[
        "run", "--config", config_path.to_str().unwrap(), "--max-iters", "5",
    ]);
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6, "iterations 0..=5:\n{csv}");
    // alpha from the file: |y| grows by 1.9 per step.
    let y_of = |row: &str| row.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!((y_of(rows[1]) / y_of(rows[0]) - 1.9).abs() < 1e-12);
    fs::remove_file(config_path).unwrap();
}

#[test]
fn config_for_wrong_subcommand_is_rejected() {
    let dir = std::env::temp_dir();
    let config_path = dir.join("proxsaddle_cli_wrong_sub.conf");
    fs::write(&config_path, "subcommand = escape\n").unwrap();
    let out = bin()
        .args(["run", "--config", config_path.to_str().unwrap(), "--x0", "0,0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    fs::remove_file(config_path).unwrap();
}

#[test]
fn escape_report_is_valid_json_with_schema_version() {
    let out = run_ok(&[
        "escape", "--problem", "absym", "--algo", "prox-gradient", "--mu", "0.25", "--alpha",
        "0.4", "--n-trials", "10", "--seed", "3",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["n_trials"], 10);
}

#[test]
fn escape_with_zero_trials_is_empty_report() {
    let out = run_ok(&[
        "escape", "--problem", "absym", "--algo", "prox-gradient", "--mu", "0.25", "--alpha",
        "0.4", "--n-trials", "0",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["fraction_to_target"], 0.0);
    assert_eq!(report["trials"].as_array().unwrap().len(), 0);
}

#[test]
fn spectrum_reports_unstable_saddle() {
    let out = run_ok(&[
        "spectrum", "--problem", "absym-composite", "--algo", "prox-linear", "--mu", "0.25",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["classification"], "unstable");
    assert!((report["max_real_eigenvalue"].as_f64().unwrap() - 1.5).abs() < 1e-4);
}

#[test]
fn verify_subset_passes_and_fd_override_fails() {
    let out = bin().args(["verify", "--only", "moreau"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = bin()
        .args(["verify", "--only", "moreau", "--fd-step", "1e-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL"));
}

#[test]
fn verify_unknown_filter_is_input_error() {
    let out = bin().args(["verify", "--only", "nonesuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strict_damping_is_enforced_for_escape_and_opt_in_for_run() {
    // alpha above the prox-gradient bound of 0.5: escape rejects by default.
    let out = bin()
        .args([
            "escape", "--problem", "absym", "--algo", "prox-gradient", "--mu", "0.25",
            "--alpha", "0.7", "--n-trials", "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Single runs accept any alpha in (0, 1] unless asked to be strict.
    let out = bin()
        .args([
            "run", "--problem", "absym", "--algo", "prox-gradient", "--mu", "0.25", "--alpha",
            "0.7", "--x0", "0.4,0", "--max-iters", "10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin()
        .args([
            "run", "--problem", "absym", "--algo", "prox-gradient", "--mu", "0.25", "--alpha",
            "0.7", "--x0", "0.4,0", "--strict", "true",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tilted_problem_via_flag() {
    let out = run_ok(&[
        "run", "--problem", "absym", "--mu", "0.2", "--alpha", "1", "--x0", "0.4,-0.05",
        "--tilt", "0.3,0.1",
    ]);
    let csv = String::from_utf8(out.stdout).unwrap();
    let last = csv.lines().last().unwrap();
    let fields: Vec<f64> =
        last.split(',').skip(1).take(2).map(|v| v.parse().unwrap()).collect();
    // The tilted saddle sits at (0, -0.05); the start lies on its stable set.
    assert!(fields[0].abs() < 1e-8 && (fields[1] + 0.05).abs() < 1e-8, "{last}");
}
