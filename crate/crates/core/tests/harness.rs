//! Orchestration: term scheduler, convergence studies, validation suite and the CLI.

use std::path::PathBuf;
use std::process::Command;

use starjunction::assembly::{mu_of_epsilon, ApproxOrder};
use starjunction::harness::{
    convergence_csv, run_convergence, run_term_scheduler, run_validation, StudyPlan, Synthetic,
};
use starjunction::model::{Problem, ProblemConfig, TimeGrid};

fn config(name: &str) -> ProblemConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ProblemConfig::from_file(&p).unwrap()
}

fn with_steps(mut cfg: ProblemConfig, steps: usize) -> ProblemConfig {
    cfg.time = TimeGrid::new(cfg.time.horizon, steps).unwrap();
    cfg
}

fn problem(name: &str, steps: usize) -> Problem {
    with_steps(config(name), steps).build().unwrap()
}

fn zero_data(mut cfg: ProblemConfig) -> ProblemConfig {
    let v: serde_json::Value = serde_json::json!({
        "f": 0.0, "phi0": 0.0, "phi": [0.0, 0.0, 0.0]
    });
    cfg.data = serde_json::from_value(v).unwrap();
    let lin = serde_json::json!({"preset": "linear", "slope": 1.0});
    cfg.nonlinearities.kappa = [lin.clone(), lin.clone(), lin];
    cfg
}

fn synthetic_plan(c: f64, p: f64) -> StudyPlan {
    let mut plan = StudyPlan::new(vec![0.2, 0.1, 0.05], ApproxOrder::First, 4);
    plan.synthetic = Some(Synthetic { c, p });
    plan
}

#[test]
fn zero_data_gives_vanishing_terms_in_every_regime() {
    for name in ["default.json", "regime_b.json", "regime_c.json"] {
        let p = zero_data(with_steps(config(name), 8)).build().unwrap();
        let b = run_term_scheduler(&p, ApproxOrder::First).unwrap();
        assert!(b.stages.len() >= 4, "{name}: {:?}", b.stage_names());
        for s in &b.stages {
            assert!(s.max_abs.abs() < 1e-12, "{name}: stage {} has max {}", s.name, s.max_abs);
        }
        for (tag, sol) in &b.terms.omega {
            let m = sol.fields.iter().flat_map(|f| f.values.iter().flatten()).fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(m < 1e-12, "{name}: omega_{tag} = {m}");
        }
    }
}

#[test]
fn resonant_edge_exponent_is_rejected() {
    let mut cfg = with_steps(config("regime_b.json"), 4);
    let a0 = cfg.regime.alpha[0];
    cfg.regime.alpha[2] = 2.0 + a0;
    let err = match cfg.build() {
        Err(e) => e,
        Ok(p) => run_term_scheduler(&p, ApproxOrder::First).unwrap_err(),
    };
    assert!(err.is_config_error(), "{err}");
}

#[test]
fn term_stages_run_in_dependency_order() {
    let b = run_term_scheduler(&problem("regime_b.json", 6), ApproxOrder::First).unwrap();
    let names = b.stage_names();
    let pos = |n: &str| names.iter().position(|s| *s == n).unwrap_or_else(|| panic!("{n} missing: {names:?}"));
    assert!(pos("omega_0") < pos("V_-a0"));
    assert!(pos("V_-a0") < pos("omega_-a0"));
    assert!(pos("N_1") < pos("delta_1"));
    assert!(pos("delta_1") < pos("omega_1"));
    assert!(pos("omega_1") < pos("N_1-a0"));
    assert!(pos("delta_1-a0") < pos("omega_1-a0"));
}

#[test]
fn synthetic_perturbation_recovers_its_order() {
    let p = problem("default.json", 10);
    for order in [1.0, 1.5, 2.0] {
        let rep = run_convergence(&p, &synthetic_plan(0.7, order), None).unwrap();
        for fit in [rep.fits.max_l2, rep.fits.l2h1] {
            let f = fit.unwrap();
            assert!((f.order - order).abs() <= 0.01, "expected {order}, got {}", f.order);
        }
    }
}

#[test]
fn mu_column_matches_the_rate_formula() {
    let p = problem("regime_b.json", 6);
    let rep = run_convergence(&p, &synthetic_plan(1.0, 1.0), None).unwrap();
    let csv = convergence_csv(&rep);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,maxL2,L2H1,nodeGrad,mu,order_running"));
    let mut n = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        let eps: f64 = cols[0].parse().unwrap();
        let mu: f64 = cols[4].parse().unwrap();
        let exact = mu_of_epsilon(&p.regime, p.asymptotics.a, eps).unwrap();
        assert!((mu - exact).abs() <= 1e-9 * exact, "{mu} vs {exact}");
        for c in &cols[1..5] {
            let v: f64 = c.parse().unwrap();
            assert!(v.is_finite() && v >= 0.0);
        }
        n += 1;
    }
    assert_eq!(n, 3);
}

#[test]
fn reference_runs_are_deterministic() {
    let p = problem("default.json", 6);
    let mut plan = StudyPlan::new(vec![0.2, 0.15, 0.1], ApproxOrder::First, 4);
    let a = convergence_csv(&run_convergence(&p, &plan, None).unwrap());
    plan.parallel = false;
    let b = convergence_csv(&run_convergence(&p, &plan, None).unwrap());
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn one_failing_eps_does_not_abort_the_study() {
    let p = problem("default.json", 6);
    let mut plan = synthetic_plan(1.0, 2.0);
    plan.epsilons = vec![0.5, 0.2, 0.1, 0.05];
    let rep = run_convergence(&p, &plan, None).unwrap();
    assert_eq!(rep.failures(), 1);
    assert!(rep.rows[0].error.as_deref().unwrap().contains("epsilon"));
    assert_eq!(convergence_csv(&rep).lines().count(), 4);
    assert!((rep.fits.max_l2.unwrap().order - 2.0).abs() < 0.01);
}

#[test]
fn invalid_plans_are_usage_errors() {
    let p = problem("default.json", 4);
    for eps in [vec![], vec![0.2, 0.1], vec![0.1, 0.2, 0.05], vec![0.2, 0.1, -0.05]] {
        let plan = StudyPlan::new(eps.clone(), ApproxOrder::First, 4);
        let e = run_convergence(&p, &plan, None).unwrap_err();
        assert!(e.is_config_error(), "{eps:?}: {e}");
    }
}

#[test]
fn study_writes_its_report_files() {
    let p = problem("regime_c.json", 6);
    let dir = tempfile::tempdir().unwrap();
    let rep = run_convergence(&p, &synthetic_plan(1.0, 1.0), Some(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv, convergence_csv(&rep));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert!(json["fits"]["maxL2"]["order"].as_f64().is_some());
    for f in ["plots/errors.svg", "plots/scaled_errors.svg", "fields/u_eps0.050000.bin"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn validation_passes_on_the_shipped_configs() {
    for name in ["default.json", "regime_c.json"] {
        let rep = run_validation(&problem(name, 20), 3);
        assert!(rep.passed(), "{name}: {:#?}", rep.failures());
        assert_eq!(rep.checks.len(), 8);
    }
}

#[test]
fn decreasing_bulk_reaction_is_reported() {
    let mut cfg = with_steps(config("default.json"), 10);
    cfg.nonlinearities.k = serde_json::json!({"preset": "linear", "slope": -50.0});
    let rep = run_validation(&cfg.build().unwrap(), 3);
    assert!(!rep.passed());
    assert!(!rep.check("nonlinearity-bounds").unwrap().passed);
    assert!(!rep.check("junction-monotonicity").unwrap().passed);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_starjunction"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg_path = dir.path().join("small.json");
    std::fs::write(&cfg_path, serde_json::to_string(&with_steps(config("default.json"), 6)).unwrap()).unwrap();

    let missing = cli().args(["validate", "--config", "/nonexistent/config.json"]).status().unwrap();
    assert_eq!(missing.code(), Some(2));
    let bad_order = cli()
        .args(["convergence", "--config"])
        .arg(&cfg_path)
        .args(["--eps", "0.1,0.2,0.05", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(bad_order.code(), Some(2));
    let synthetic = cli()
        .args(["convergence", "--config"])
        .arg(&cfg_path)
        .args(["--eps", "0.2,0.1,0.05", "--synthetic", "1,2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(synthetic.status.code(), Some(0), "{}", String::from_utf8_lossy(&synthetic.stderr));
    assert!(out.join("convergence.csv").exists());

    let mut neg = with_steps(config("default.json"), 6);
    neg.nonlinearities.k = serde_json::json!({"preset": "linear", "slope": -50.0});
    let neg_path = dir.path().join("neg.json");
    std::fs::write(&neg_path, serde_json::to_string(&neg).unwrap()).unwrap();
    let failed = cli().args(["validate", "--config"]).arg(&neg_path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(failed.status.code(), Some(4));
    assert!(out.join("validation.json").exists());
}
