//! End-to-end checks of the binary: exit-code contract and byte-identical
//! reports for identical configuration and seed.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l1forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_with_out(args: &[&str], out: &Path) -> Output {
    let out_arg = out.to_str().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    full.push("--out");
    full.push(out_arg);
    run(&full)
}

#[test]
fn embed_hadamard_passes() {
    let out = run(&[
        "embed", "--fixture", "hadamard", "--k", "3", "--delta", "0.125", "--eps", "0.25",
        "--p", "2,2", "--signs", "25",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    assert_eq!(report["schema"], "ldc-l1-forge/1");
    assert_eq!(report["pass"], true);
    assert_eq!(report["constants"]["K"], 128.0);
}

#[test]
fn skewed_fixture_at_half_delta_exits_one() {
    let out = run(&[
        "embed", "--fixture", "skewed", "--k", "3", "--delta", "0.5", "--eps", "0.25",
        "--signs", "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
    // the worst-case advantage is nonpositive and flagged
    assert!(report["advantage"].as_f64().unwrap() <= 0.0);
}

#[test]
fn perturbed_basis_exits_one() {
    let out = run(&[
        "embed", "--fixture", "hadamard", "--k", "3", "--delta", "0.125", "--eps", "0.25",
        "--negative-control", "zero-first-form", "--signs", "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["distortion"]["pass"], false);
}

#[test]
fn invalid_exponents_exit_two() {
    let out = run(&[
        "embed", "--fixture", "hadamard", "--k", "3", "--delta", "0.125", "--eps", "0.25",
        "--p", "1.9,2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reduction_rejects_odd_query_count() {
    let out = run(&[
        "reduce", "--fixture", "parity", "--k", "3", "--q", "5", "--r", "2",
        "--delta", "0.05", "--eps", "0.3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_three() {
    // skewed fixture caps k at 8
    let out = run(&[
        "embed", "--fixture", "parity", "--k", "13", "--q", "3", "--delta", "0.1",
        "--eps", "0.1", "--p", "3,3,3",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reduce_parity_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reduce.json");
    let out = run_with_out(
        &[
            "reduce", "--fixture", "parity", "--k", "3", "--q", "4", "--r", "2",
            "--delta", "0.05", "--eps", "0.3", "--samples", "5000",
            "--pair-samples", "600", "--seed", "7",
        ],
        &path,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["reduction"]["l"], 370);
    assert_eq!(report["reduction"]["pairCheck"]["collisions"], 0);
    assert_eq!(report["pass"], true);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let embed_args = [
        "embed", "--fixture", "hadamard", "--k", "4", "--delta", "0.125", "--eps", "0.25",
        "--signs", "30", "--gaussians", "5", "--seed", "99",
    ];
    let a = dir.path().join("embed-a.json");
    let b = dir.path().join("embed-b.json");
    assert_eq!(run_with_out(&embed_args, &a).status.code(), Some(0));
    assert_eq!(run_with_out(&embed_args, &b).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let reduce_args = [
        "reduce", "--fixture", "parity", "--k", "3", "--q", "4", "--r", "2",
        "--delta", "0.05", "--eps", "0.3", "--samples", "3000", "--pair-samples", "300",
        "--seed", "5",
    ];
    let c = dir.path().join("reduce-a.json");
    let d = dir.path().join("reduce-b.json");
    assert_eq!(run_with_out(&reduce_args, &c).status.code(), Some(0));
    assert_eq!(run_with_out(&reduce_args, &d).status.code(), Some(0));
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&d).unwrap());
}

#[test]
fn bounds_prints_a_table_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bounds.csv");
    let out = run(&[
        "bounds", "--k-grid", "64,4096", "--r", "2", "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("distortion"));
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().count(), 3);
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_l1forge"))
        .args([
            "embed", "--fixture", "hadamard", "--k", "3", "--delta", "0.125",
            "--eps", "0.25", "--signs", "2",
        ])
        .env("L1FORGE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("embed-report.json").exists());
}
