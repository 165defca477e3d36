use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use shockint_cli::config::RunConfig;
use shockint_cli::export::{SHOCK_HEADER, SOLUTION_HEADER};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn shockint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shockint"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn constant_run_writes_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("symmetric_constant.json");
    let out = shockint(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--print-report",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["converged"], true);
    assert!(report["iterations"].as_u64().unwrap() <= 2);

    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SOLUTION_HEADER));
    let origin: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    for (x, y) in origin.iter().zip([0.0, 0.0, 0.0, 0.0, 4.0, 4.0, 2.0, 0.0, -2.0, 2.0]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
    // apex once, then 64 columns of 65 nodes
    assert_eq!(csv.lines().count(), 2 + 64 * 65);
    for row in csv.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert!(cols.iter().all(|c| c.parse::<f64>().unwrap().is_finite()));
    }

    for side in ["shock_left.csv", "shock_right.csv"] {
        let text = std::fs::read_to_string(dir.path().join(side)).unwrap();
        assert_eq!(text.lines().next(), Some(SHOCK_HEADER));
        for row in text.lines().skip(1) {
            let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
            assert!(cols[9] > 0.0 && cols[10] > 0.0);
        }
    }
    // left shock nodes lie on u = v
    let last = csv.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').take(2).map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], cols[1]);
}

#[test]
fn equal_ahead_states_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"eos": {"type": "polytropic", "kappa": 1.0, "gamma": 2.0},
            "ahead_left": {"type": "constant", "rho": 1.0, "w": 0.0},
            "ahead_right": {"type": "constant", "rho": 1.0, "w": 0.0},
            "epsilon": 0.02, "grid": {"n": 16, "nsig": 16}}"#,
    );
    let out = shockint(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("admissible"));
}

#[test]
fn bad_configs_exit_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "{ not json",
        r#"{"eos": {"type": "polytropic", "kappa": 1.0, "gamma": 2.0},
            "ahead_left": {"type": "constant", "rho": 1.0, "w": 1.0},
            "ahead_right": {"type": "constant", "rho": 1.0, "w": -1.0},
            "epsilon": -0.02, "grid": {"n": 16, "nsig": 16}}"#,
        r#"{"eos": {"type": "polytropic", "kappa": 1.0, "gamma": 0.5},
            "ahead_left": {"type": "constant", "rho": 1.0, "w": 1.0},
            "ahead_right": {"type": "constant", "rho": 1.0, "w": -1.0},
            "epsilon": 0.02, "grid": {"n": 16, "nsig": 16}}"#,
    ] {
        let cfg = write_config(dir.path(), text);
        assert_eq!(
            shockint(&["run", cfg.to_str().unwrap()]).status.code(),
            Some(4),
            "{text}"
        );
    }
    assert_eq!(shockint(&["run", "/nonexistent/config.json"]).status.code(), Some(4));
}

#[test]
fn check_reports_the_interaction_point() {
    let cfg = config_path("simple_wave.json");
    let out = shockint(&["check", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["determinism_left"], true);
    assert_eq!(v["determinism_right"], true);
    assert_abs_diff_eq!(v["interaction_point"]["rho0"].as_f64().unwrap(), 2.0, epsilon = 1e-12);
}

#[test]
fn shipped_configs_round_trip() {
    for name in ["symmetric_constant.json", "simple_wave.json"] {
        let cfg = RunConfig::load(&config_path(name)).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
    let err = RunConfig::from_json(r#"{"eos": {"type": "polytropic", "kappa": 1, "gamma": 2}, "bogus": 1}"#);
    assert!(err.is_err());
}

#[test]
fn refinement_study_reports_ratios() {
    let cfg = RunConfig::load(&config_path("simple_wave.json")).unwrap();
    let cfg = RunConfig {
        grid: shockint_cli::config::GridConfig { n: 16, nsig: 16 },
        ..cfg
    };
    let opts = shockint_cli::run::RunOptions {
        refine: 2,
        ..Default::default()
    };
    let out = shockint_cli::run::run(&cfg, &opts).unwrap();
    let ratios = &out.report.refinement_ratios;
    assert_eq!(ratios.len(), 2);
    for r in ratios {
        assert!(
            r.char_in >= 3.5 && r.integrability >= 3.5 && r.b_identity >= 3.5,
            "{r:?}"
        );
    }
    assert!(ratios[0].asymptotic_remainder.unwrap() >= 3.5);
    assert!(ratios[1].asymptotic_remainder.is_none());
}

#[test]
fn exhausted_iteration_budget_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::load(&config_path("simple_wave.json")).unwrap();
    cfg.grid = shockint_cli::config::GridConfig { n: 16, nsig: 16 };
    cfg.tolerances.max_iter = 2;
    let path = write_config(dir.path(), &serde_json::to_string(&cfg).unwrap());
    let out = shockint(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // the same budget with auto_eps still fails: halving eps does not help a two-step budget
    let out = shockint(&["run", path.to_str().unwrap(), "--auto-eps"]);
    assert_eq!(out.status.code(), Some(3));
}
