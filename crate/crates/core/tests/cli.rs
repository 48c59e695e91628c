//! End-to-end runs of the `natural-vqe` binary.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::{Command, Output};

fn natural_vqe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_natural-vqe"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("NATURAL_VQE_SEED")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn compile_uniform_state_prints_initial_phases() {
    let dir = tempfile::tempdir().unwrap();
    let out = natural_vqe(&["compile", "--state", "0.5,0.5,0.5,0.5"], dir.path());
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let settings: Vec<f64> = json["settings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let expected = [
        FRAC_PI_2,
        3.0 * FRAC_PI_2,
        FRAC_PI_2,
        FRAC_PI_2,
        FRAC_PI_2,
        0.0,
    ];
    for (got, want) in settings.iter().zip(expected) {
        assert!((got - want).abs() < 1e-10, "{settings:?}");
    }
    assert!(dir.path().join("compile_prep.json").exists());
}

#[test]
fn compile_accepts_negative_and_complex_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let out = natural_vqe(
        &[
            "compile",
            "--state",
            "-0.5,0.5i,0.5,-0.5",
            "--direction",
            "meas",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "compile_meas.json")).unwrap();
    assert!((json["verified_overlap"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = natural_vqe(&["converge", "--r", "0.6"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`r`"));

    let out = natural_vqe(&["compile", "--state", "1,1,0,0"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"eta": 0.1, "learning_rate": 2}"#).unwrap();
    let out = natural_vqe(&["curve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    let out = natural_vqe(&["converge", "--alpha", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`alpha`"));
}

#[test]
fn identical_invocations_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "converge",
        "--repeats",
        "2",
        "--seed",
        "11",
        "--shots",
        "4500",
        "--noise-sigma",
        "0.01",
        "--max-iters",
        "12",
    ];
    assert!(natural_vqe(&args, a.path()).status.success());
    assert!(natural_vqe(&args, b.path()).status.success());
    for name in [
        "converge_vanilla.csv",
        "converge_rqng.csv",
        "converge_spsa_qng.csv",
        "converge_summary.json",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |seed: Option<&str>, flag: Option<&str>| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_natural-vqe"));
        cmd.args(["characterize", "--samples", "20", "--out-dir"])
            .arg(dir.path());
        cmd.env_remove("NATURAL_VQE_SEED");
        if let Some(s) = seed {
            cmd.env("NATURAL_VQE_SEED", s);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        read(dir.path(), "characterize_stats.json")
    };
    let env5 = run(Some("5"), None);
    assert!(env5.contains("\"seed\": 5"));
    assert_eq!(env5, run(None, Some("5")));
    assert!(run(Some("5"), Some("6")).contains("\"seed\": 6"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"samples": 30, "seed": 1}"#).unwrap();
    let out = natural_vqe(
        &[
            "characterize",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stats: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "characterize_stats.json")).unwrap();
    assert_eq!(stats["samples"], 30);
    assert_eq!(stats["seed"], 2);
}

#[test]
fn curve_writes_summary_for_requested_distances() {
    let dir = tempfile::tempdir().unwrap();
    let out = natural_vqe(&["curve", "--r", "0.9,3", "--repeats", "2"], dir.path());
    assert!(out.status.success());
    let summary = read(dir.path(), "curve_summary.csv");
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("R,E_theory,E_mean,E_std,epsilon_c,E_corrected,abs_err_hartree,fidelity_mean,fidelity_std")
    );
    let rs: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rs, vec!["0.9", "3"]);
    assert_eq!(read(dir.path(), "curve_runs.csv").lines().count(), 5);
}
