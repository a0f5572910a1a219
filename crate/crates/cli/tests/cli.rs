//! End-to-end tests of the command-line binary: exit codes, report files,
//! manifest stamping, and byte-level determinism.

use nonlocal_feller::geometry::specfile::{load_spec, save_spec};
use nonlocal_feller::presets;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nonlocal-feller");

fn write_spec(dir: &Path, which: &str) -> PathBuf {
    let spec = match which {
        "square_dirichlet" => presets::square_dirichlet(),
        "square_nonlocal" => presets::square_nonlocal(),
        _ => panic!("unknown preset {which}"),
    };
    let path = dir.join(format!("{which}.json"));
    save_spec(&spec, &path).expect("write spec file");
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(BIN)
        .args(args)
        .env(key, value)
        .output()
        .expect("spawn binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("read json");
    serde_json::from_str(&text).expect("parse json")
}

#[test]
fn validate_admissible_spec_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "validate",
        spec.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("ADMISSIBLE"));
    let report = read_json(&out_dir.join("validation_report.json"));
    assert_eq!(report["report"]["passed"], true);
    assert!(report["manifest_id"].as_str().unwrap().len() == 64);
}

#[test]
fn overweight_spec_exits_one_and_names_the_weight_condition() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = presets::square_nonlocal();
    spec.maps[0].amplitude = 1.2;
    let path = dir.path().join("overweight.json");
    save_spec(&spec, &path).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "validate",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "stdout: {}", stdout(&out));
    let report = read_json(&out_dir.join("validation_report.json"));
    assert_eq!(report["report"]["passed"], false);
    let checks = report["report"]["validation"]["checks"].as_array().unwrap();
    let weight = checks
        .iter()
        .find(|c| c["id"] == "weight-sum")
        .expect("weight-sum condition present");
    assert_eq!(weight["passed"], false);
}

#[test]
fn missing_spec_file_exits_one() {
    let out = run(&["validate", "/definitely/not/here.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn other_commands_refuse_inadmissible_specs() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = presets::square_nonlocal();
    spec.maps[0].amplitude = 1.2;
    let path = dir.path().join("overweight.json");
    save_spec(&spec, &path).unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("weight-sum"), "stderr: {err}");
}

#[test]
fn unreachable_tolerance_exits_two_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "spectrum",
        spec.to_str().unwrap(),
        "--tol",
        "1e-22",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stdout: {}", stdout(&out));
    let report = read_json(&out_dir.join("spectrum.json"));
    assert!(
        report["report"]["error"]
            .as_str()
            .unwrap()
            .contains("not certified"),
        "report: {report}"
    );
}

#[test]
fn spectrum_matches_the_zero_weight_closed_form() {
    // A square corner with no boundary maps: eigenvalues at -2ik.
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_dirichlet");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "spectrum",
        spec.to_str().unwrap(),
        "--strip",
        "-5,-0.001",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let csv = std::fs::read_to_string(out_dir.join("eigenvalues.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest_id="));
    assert_eq!(lines.next().unwrap(), "re_lambda,im_lambda,count,residual");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // Rows are sorted by (Re, Im) ascending, so -4i is listed first.
    for (row, expected_im) in rows.iter().zip([-4.0, -2.0]) {
        assert!(row[0].abs() < 1e-8, "Re lambda = {}", row[0]);
        assert!(
            (row[1] - expected_im).abs() < 1e-8,
            "Im lambda = {}",
            row[1]
        );
        assert_eq!(row[2], 1.0);
    }
}

#[test]
fn solve_matches_the_separable_oracle_and_writes_the_grid() {
    // q*u - Lap u = sin(pi x) sin(pi y) on the Dirichlet square: the source
    // is a discrete eigenfunction, so u = f / (q + lambda_h) with
    // lambda_h = (8/h^2) sin^2(pi h / 2) close to 2 pi^2.
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_dirichlet");
    let out_dir = dir.path().join("out");
    let h = 1.0 / 16.0;
    let out = run(&[
        "solve",
        spec.to_str().unwrap(),
        "--q",
        "1",
        "--h",
        "0.0625",
        "--f",
        "sinpi:1,1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let report = read_json(&out_dir.join("resolvent_report.json"));
    assert_eq!(report["report"]["report"]["contraction_ok"], true);
    assert_eq!(report["report"]["report"]["positivity_ok"], true);

    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    let center: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| {
            l.split(',')
                .map(|t| t.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .find(|row| (row[0] - 0.5).abs() < 1e-12 && (row[1] - 0.5).abs() < 1e-12)
        .expect("center node present");
    let lambda_h = 8.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let oracle = 1.0 / (1.0 + lambda_h);
    assert!(
        (center[2] - oracle).abs() < 1e-10,
        "center {} vs oracle {oracle}",
        center[2]
    );
}

#[test]
fn evolve_writes_a_monotone_step_log() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "evolve",
        spec.to_str().unwrap(),
        "--u0",
        "const:1",
        "--T",
        "0.5",
        "--steps",
        "10",
        "--h",
        "0.0625",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let csv = std::fs::read_to_string(out_dir.join("evolution.csv")).unwrap();
    let sups: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sups.len(), 11);
    for w in sups.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "sup norm grew: {w:?}");
    }
    assert!(out_dir.join("final_state.csv").exists());
}

#[test]
fn identical_runs_are_byte_identical_and_share_a_manifest_id() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = run(&[
            "simulate",
            spec.to_str().unwrap(),
            "--x0",
            "0.5,0.5",
            "--paths",
            "1500",
            "--dt",
            "0.001",
            "--seed",
            "9",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    }
    let ja = std::fs::read(a.join("simulate.json")).unwrap();
    let jb = std::fs::read(b.join("simulate.json")).unwrap();
    assert_eq!(ja, jb, "reports differ between identical runs");

    let ma = read_json(&a.join("manifest.json"));
    let mb = read_json(&b.join("manifest.json"));
    assert_eq!(ma["id"], mb["id"]);
    assert_eq!(ma["outputs"], mb["outputs"]);

    // A different seed must change the manifest id and the report.
    let c = dir.path().join("c");
    let out = run(&[
        "simulate",
        spec.to_str().unwrap(),
        "--x0",
        "0.5,0.5",
        "--paths",
        "1500",
        "--dt",
        "0.001",
        "--seed",
        "10",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let mc = read_json(&c.join("manifest.json"));
    assert_ne!(ma["id"], mc["id"]);
}

#[test]
fn thread_cap_env_does_not_change_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out_dir: &Path| {
        vec![
            "verify-feller".to_string(),
            spec.to_str().unwrap().to_string(),
            "--h".to_string(),
            "0.0625".to_string(),
            "--q-grid".to_string(),
            "1,10".to_string(),
            "--trials".to_string(),
            "2".to_string(),
            "--out".to_string(),
            out_dir.to_str().unwrap().to_string(),
        ]
    };
    let aa = args(&a);
    let out = run_env(
        &aa.iter().map(String::as_str).collect::<Vec<_>>(),
        "NONLOCAL_FELLER_THREADS",
        "2",
    );
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let bb = args(&b);
    let out = run_env(
        &bb.iter().map(String::as_str).collect::<Vec<_>>(),
        "NONLOCAL_FELLER_THREADS",
        "1",
    );
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    assert_eq!(
        std::fs::read(a.join("feller_report.json")).unwrap(),
        std::fs::read(b.join("feller_report.json")).unwrap(),
        "thread cap changed the report bytes"
    );
}

#[test]
fn cross_validate_agrees_and_reports_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "cross-validate",
        spec.to_str().unwrap(),
        "--points",
        "0.5,0.5;0.3,0.7",
        "--paths",
        "2000",
        "--dt",
        "0.001",
        "--h",
        "0.0625",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let report = read_json(&out_dir.join("crossval.json"));
    assert_eq!(report["report"]["all_pass"], true);
    assert_eq!(report["report"]["rows"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(out_dir.join("crossval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4); // id line + header + 2 rows
}

#[test]
fn barrier_reports_positive_constants_and_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "square_nonlocal");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "barrier",
        spec.to_str().unwrap(),
        "--q1",
        "1",
        "--h",
        "0.0625",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let report = read_json(&out_dir.join("barrier.json"));
    let m = report["report"]["m"].as_f64().unwrap();
    let c1 = report["report"]["c1"].as_f64().unwrap();
    assert!(m > 0.0 && c1 >= m);
    assert!(
        report["report"]["angular_profile"]["coeffs"]
            .as_array()
            .unwrap()
            .len()
            == 1
    );
    let csv = std::fs::read_to_string(out_dir.join("barrier.csv")).unwrap();
    assert!(csv.lines().count() > 100);
}

#[test]
fn saved_specs_round_trip_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(dir.path(), "square_nonlocal");
    let reloaded = load_spec(&path).unwrap();
    let again = dir.path().join("again.json");
    save_spec(&reloaded, &again).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap(),
        "spec files do not round-trip byte-identically"
    );
}
