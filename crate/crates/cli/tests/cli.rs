use std::path::Path;
use std::process::{Command, Output};

use fracwave::fvp_core::{Scenario, ScenarioSpec, Source, TimeGrid, Tolerances};
use fracwave::operator_models::{CoefficientVector, Eigensystem};
use fracwave::rho_zeros::{delta_zeros, find_roots, RhoParams};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracwave"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_config(dir: &Path, command: &str, config: &Value) -> Output {
    let path = dir.join(format!("{command}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = dir.join(format!("{command}_out"));
    run(&[command, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn problem(alpha: f64, gamma: f64, t_final: f64, n_modes: usize, intervals: usize) -> Value {
    json!({
        "alpha": alpha,
        "gamma": gamma,
        "t_final": t_final,
        "operator": { "kind": "dirichlet", "length": 1.0 },
        "n_modes": n_modes,
        "grid": { "intervals": intervals }
    })
}

fn summary(dir: &Path, command: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{command}_out/summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn ml_prints_value_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ml", "--alpha", "1.5", "--beta", "1.5", "--z", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1.1283791671");
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn rho_roots_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["rho-roots", "--alpha", "1.5", "--gamma", "-2", "--out", d]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("roots.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("roots.json")).unwrap()).unwrap();
    assert!(!report["roots"].as_array().unwrap().is_empty());
}

#[test]
fn resonant_horizon_exits_with_admissibility_code() {
    let (alpha, gamma) = (1.5, -2.0);
    let roots = find_roots(RhoParams::new(alpha, gamma).unwrap(), 1e3, 4000).unwrap();
    let lambda = std::f64::consts::PI.powi(2);
    let t = (roots.roots[0].eta / lambda).powf(1.0 / alpha);
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "problem": problem(alpha, gamma, t, 4, 100) });
    let out = run_config(dir.path(), "direct", &cfg);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mode index 0") && err.contains("root index 0"), "{err}");
    let s = summary(dir.path(), "direct");
    assert_eq!(s["exit_code"], 3);
    assert_eq!(s["admissibility"]["admissible"], false);
}

#[test]
fn snapshot_time_at_delta_zero_exits_with_admissibility_code() {
    let (alpha, gamma) = (1.5, 0.5);
    let sc = Scenario::new(ScenarioSpec {
        alpha,
        gamma,
        eigensystem: Eigensystem::dirichlet_laplacian_1d(1.0, 4).unwrap(),
        grid: TimeGrid::uniform(1.0, 100).unwrap(),
        phi: CoefficientVector::zeros(4),
        psi: CoefficientVector::zeros(4),
        source: Source::Zero,
        tolerances: Tolerances::default(),
    })
    .unwrap();
    let xi = delta_zeros(0, &sc, 400).unwrap()[0];
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "problem": problem(alpha, gamma, 1.0, 4, 100),
        "ip1": { "xi": xi, "h": { "source": "coefficients", "values": [1.0, 0.5, 0.25, 0.125] } }
    });
    let out = run_config(dir.path(), "ip1", &cfg);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mode index 0"), "{err}");
}

#[test]
fn degenerate_functional_exits_with_admissibility_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "problem": problem(1.5, 0.5, 1.0, 4, 50),
        "data": {
            "f": { "preset": "coefficients", "values": [0.0, 1.0] },
            "p": { "profile": "constant", "value": 1.0 }
        },
        "ip2": { "functional": { "kind": "mean" }, "data": { "source": "forward" } }
    });
    let out = run_config(dir.path(), "ip2", &cfg);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_keys_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "problem": problem(1.5, 0.5, 1.0, 4, 50), "solver": "fast" });
    let out = run_config(dir.path(), "direct", &cfg);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_block_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "problem": problem(1.5, 0.5, 1.0, 4, 50) });
    let out = run_config(dir.path(), "ip1", &cfg);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn direct_outputs_are_deterministic_and_round_trip() {
    let cfg = json!({
        "problem": problem(1.5, 0.5, 1.0, 6, 80),
        "data": {
            "phi": { "preset": "x1mx" },
            "f": { "preset": "decay" },
            "p": { "profile": "sine" }
        },
        "output": { "plot": true }
    });
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_config(a.path(), "direct", &cfg).status.success());
    assert!(run_config(b.path(), "direct", &cfg).status.success());
    for name in ["u_modes.csv", "summary.json", "u.svg"] {
        let x = std::fs::read(a.path().join("direct_out").join(name)).unwrap();
        let y = std::fs::read(b.path().join("direct_out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("direct_out/u_modes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,u_1,u_2,u_3,u_4,u_5,u_6");
    for field in lines.flat_map(|l| l.split(',')) {
        let v: f64 = field.parse().unwrap();
        assert_eq!(format!("{v:.16e}"), field);
    }
    let s = summary(a.path(), "direct");
    for key in ["inputs", "admissibility", "defects", "timings", "convention_log"] {
        assert!(s.get(key).is_some(), "summary lacks {key}");
    }
    assert_eq!(s["convention_log"]["matched"], "minus");
    assert_eq!(s["inputs"]["tolerances"]["xi_guard"], 1e-8);
}

#[test]
fn ip1_and_ip2_commands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let ip1 = json!({
        "problem": problem(1.5, 0.5, 1.0, 8, 100),
        "data": { "f": { "preset": "decay" } },
        "ip1": { "xi": 0.5, "h": { "source": "forward" }, "noise": { "levels": [1e-3], "trials": 10 } }
    });
    let out = run_config(dir.path(), "ip1", &ip1);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let f = std::fs::read_to_string(dir.path().join("ip1_out/f.csv")).unwrap();
    assert_eq!(f.lines().next().unwrap(), "n,lambda_n,f_n");
    assert!(dir.path().join("ip1_out/noise.json").exists());

    let ip2 = json!({
        "problem": problem(1.5, 0.5, 1.0, 4, 60),
        "data": { "f": { "preset": "decay" }, "p": { "profile": "sine" } },
        "ip2": { "functional": { "kind": "mean" }, "data": { "source": "forward" } }
    });
    let out = run_config(dir.path(), "ip2", &ip2);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = std::fs::read_to_string(dir.path().join("ip2_out/p.csv")).unwrap();
    assert_eq!(p.lines().next().unwrap(), "t,p_recovered,p_true");
    for name in ["ratio.json", "system_diag.json"] {
        assert!(dir.path().join("ip2_out").join(name).exists());
    }
}

#[test]
fn noise_seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "problem": problem(1.5, 0.5, 1.0, 4, 40),
        "ip1": {
            "xi": 0.5,
            "h": { "source": "coefficients", "values": [1.0, 0.5, 0.25, 0.125] },
            "noise": { "levels": [1e-2], "trials": 5 }
        }
    });
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let noise = |seed: &str, out: &str| {
        let o = dir.path().join(out);
        let status = bin()
            .env("FRACWAVE_SEED", seed)
            .args(["ip1", "--config", path.to_str().unwrap(), "--out", o.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(o.join("noise.json")).unwrap()
    };
    assert_eq!(noise("11", "a"), noise("11", "b"));
    assert_ne!(noise("11", "c"), noise("12", "d"));
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
