//! Validation suite: structural checks of a configured problem (monotonicity,
//! energy decay, compatibility of the inner problems, exact pipe solutions). Each
//! check reports a measured value against a tolerance; failures are recorded, not raised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cell::{
    inner_rhs_for, solve_special_neumann, special_robin, CellBc, CellOperator, InnerDomainSpec,
    InnerInputs,
};
use crate::error::Result;
use crate::graph::{
    graph_operator_pairing, solve_limit_omega0, vertex_residual_a, GraphContext, GraphState,
    OrderTag, StarDiscretization,
};
use crate::junction::{build_junction_mesh, operator_pairing, JunctionOperator, JunctionStepper};
use crate::model::{default_probes, validate_nonlinearities, Problem, Regime};

use super::scheduler::{cell_operator, run_term_scheduler};
use crate::assembly::ApproxOrder;

/// Random pairs per monotonicity check.
pub const MONOTONICITY_PAIRS: usize = 100;
/// Graph cells per edge in the graph monotonicity check.
pub const GRAPH_CELLS: usize = 64;
/// Thin parameter and resolution of the junction checks.
pub const JUNCTION_EPS: f64 = 0.1;
pub const KIRCHHOFF_TOL: f64 = 1e-8;
pub const COMPATIBILITY_TOL: f64 = 1e-10;
pub const PIPE_CONSTANT_TOL: f64 = 1e-6;
pub const PIPE_FLUX_TOL: f64 = 1e-10;

/// Direction in which `measured` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub detail: String,
}

impl Check {
    fn measure(name: &str, measured: f64, tolerance: f64, bound: Bound, detail: String) -> Self {
        let passed = measured.is_finite()
            && match bound {
                Bound::AtMost => measured <= tolerance,
                Bound::AtLeast => measured >= tolerance,
            };
        Self { name: name.into(), passed, measured, tolerance, bound, detail }
    }

    fn failed(name: &str, err: &crate::error::Error) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            tolerance: 0.0,
            bound: Bound::AtMost,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub regime: Regime,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn guarded(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, &e))
}

/// Runs every check on `problem` with random states drawn from `seed`.
pub fn run_validation(problem: &Problem, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        nonlinearity_audit(problem),
        guarded("graph-monotonicity", || graph_monotonicity(problem, &mut rng)),
        guarded("junction-monotonicity", || junction_monotonicity(problem, &mut rng)),
        guarded("vertex-condition", || vertex_condition(problem)),
        guarded("energy-decay", || energy_decay(problem, &mut rng)),
        guarded("cell-compatibility", || cell_compatibility(problem)),
        guarded("pipe-constants", || pipe_check(problem, false)),
        guarded("pipe-flux-balance", || pipe_check(problem, true)),
    ];
    ValidationReport { seed, regime: problem.regime.regime, checks }
}

fn nonlinearity_audit(problem: &Problem) -> Check {
    let rep = validate_nonlinearities(
        &problem.nonlinearities,
        &default_probes(problem.time.horizon),
        problem.regime.regime,
    );
    let n = rep.bound_violations.len() + rep.derivative_mismatches.len();
    let detail = rep
        .bound_violations
        .iter()
        .chain(&rep.derivative_mismatches)
        .take(3)
        .map(|v| format!("{}: {}", v.function, v.message))
        .collect::<Vec<_>>()
        .join("; ");
    Check::measure(
        "nonlinearity-bounds",
        n as f64,
        0.0,
        Bound::AtMost,
        format!("{} probes, {n} violations. {detail}", rep.probes_checked),
    )
}

/// Worst `(p - s) / (1 + s)` over random pairs; strong monotonicity keeps it nonnegative.
fn graph_monotonicity(problem: &Problem, rng: &mut ChaCha8Rng) -> Result<Check> {
    let disc = StarDiscretization::new(&problem.geometry, GRAPH_CELLS)?;
    let gamma0 = problem.geometry.gamma0_area();
    let vertex = problem.regime.regime == Regime::A;
    let mut worst = f64::INFINITY;
    let draw = |rng: &mut ChaCha8Rng, amp: f64| GraphState {
        u: [0, 1, 2].map(|_| (0..GRAPH_CELLS).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()),
        w: if vertex { amp * rng.gen_range(-1.0..1.0) } else { 0.0 },
    };
    for _ in 0..MONOTONICITY_PAIRS {
        let amp = rng.gen_range(0.1..4.0);
        let t = rng.gen_range(0.0..=problem.time.horizon);
        let (a, b) = (draw(rng, amp), draw(rng, amp));
        let (p, s) = graph_operator_pairing(
            &disc,
            &problem.nonlinearities,
            &problem.regime,
            gamma0,
            &a,
            &b,
            t,
        );
        worst = worst.min((p - s) / (1.0 + s));
    }
    Ok(Check::measure(
        "graph-monotonicity",
        worst,
        -1e-10,
        Bound::AtLeast,
        format!("{MONOTONICITY_PAIRS} pairs, {GRAPH_CELLS} cells per edge; min (pairing - seminorm)/(1 + seminorm)"),
    ))
}

fn junction_monotonicity(problem: &Problem, rng: &mut ChaCha8Rng) -> Result<Check> {
    let res = problem.discretization.junction_resolution;
    let mesh = build_junction_mesh(&problem.geometry, JUNCTION_EPS, res)?;
    let op = JunctionOperator::new(&mesh, &problem.nonlinearities, problem.regime);
    let n = mesh.n_voxels();
    let mut worst = f64::INFINITY;
    for _ in 0..MONOTONICITY_PAIRS {
        let amp = rng.gen_range(0.1..4.0);
        let t = rng.gen_range(0.0..=problem.time.horizon);
        let u1: Vec<f64> = (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let u2: Vec<f64> = (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let (p, s) = operator_pairing(&op, &u1, &u2, t);
        worst = worst.min((p - s) / (1.0 + s));
    }
    Ok(Check::measure(
        "junction-monotonicity",
        worst,
        -1e-10,
        Bound::AtLeast,
        format!("{MONOTONICITY_PAIRS} pairs at eps = {JUNCTION_EPS}, resolution {res}, {n} voxels"),
    ))
}

/// Regime A: Kirchhoff residual of `omega_0`. Regimes B, C: the vertex value must vanish.
fn vertex_condition(problem: &Problem) -> Result<Check> {
    let ctx = GraphContext::new(problem)?;
    let omega0 = solve_limit_omega0(&ctx)?;
    let levels = omega0.levels();
    if problem.regime.regime == Regime::A {
        let mut constants = ctx.empty_constants();
        crate::graph::fill_d0_star(&ctx, &mut constants);
        let mut worst = 0.0f64;
        for l in 1..levels {
            worst = worst.max(vertex_residual_a(&ctx, &omega0, &constants, l)?.abs());
        }
        Ok(Check::measure(
            "vertex-condition",
            worst,
            KIRCHHOFF_TOL,
            Bound::AtMost,
            "max Kirchhoff residual of omega_0 over the time levels".into(),
        ))
    } else {
        let worst = omega0
            .vertex_values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Check::measure(
            "vertex-condition",
            worst,
            0.0,
            Bound::AtMost,
            "max |omega_0(0, t)| (homogeneous Dirichlet vertex)".into(),
        ))
    }
}

/// Five implicit steps without data. When the nonlinearities vanish at zero the L2 norm
/// of a random state must not grow; otherwise zero is not a steady state and the
/// distance between two random trajectories is tracked instead (it contracts for any
/// monotone operator).
fn energy_decay(problem: &Problem, rng: &mut ChaCha8Rng) -> Result<Check> {
    let nl = &problem.nonlinearities;
    let t_end = problem.time.horizon;
    let vanishes = nl.k.eval(0.0).value == 0.0
        && nl.kappa0.eval(0.0).value == 0.0
        && (0..3).all(|i| {
            let len = problem.geometry.edges[i].length;
            [0.0, 0.5 * len, len]
                .iter()
                .all(|&x| [0.0, t_end].iter().all(|&t| nl.kappa[i].eval(0.0, x, t).value == 0.0))
        });
    let mesh = build_junction_mesh(&problem.geometry, 0.2, problem.discretization.junction_resolution)?;
    let dt = problem.time.dt();
    let stepper = JunctionStepper::new(JunctionOperator::new(&mesh, nl, problem.regime), dt)?;
    let zero = stepper.op.zero_data();
    let n = mesh.n_voxels();
    let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut w: Vec<f64> = if vanishes {
        vec![0.0; n]
    } else {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let gap = |u: &[f64], w: &[f64]| u.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut last = gap(&u, &w);
    let mut worst = f64::NEG_INFINITY;
    for s in 1..=5 {
        let t = dt * s as f64;
        u = stepper.step(&u, &zero, t, s)?.0;
        if !vanishes {
            w = stepper.step(&w, &zero, t, s)?.0;
        }
        let now = gap(&u, &w);
        worst = worst.max((now - last) / last.max(f64::MIN_POSITIVE));
        last = now;
    }
    let what = if vanishes { "L2 norm" } else { "L2 distance of two trajectories" };
    Ok(Check::measure(
        "energy-decay",
        worst,
        1e-12,
        Bound::AtMost,
        format!("max relative growth of the {what} over 5 steps without data at eps = 0.2"),
    ))
}

/// Neumann inner problems: relative compatibility residual of the order-1 load at the
/// final time. Robin: influx balance of the first special solution.
fn cell_compatibility(problem: &Problem) -> Result<Check> {
    let op = cell_operator(problem)?;
    if let CellBc::Robin { .. } = op.bc {
        let (f, _) = special_robin(&op, 1)?;
        let r = (op.robin_absorption(&f.values) - 1.0).abs();
        return Ok(Check::measure(
            "cell-compatibility",
            r,
            COMPATIBILITY_TOL,
            Bound::AtMost,
            "|absorption on Gamma_0 - unit influx| of the Robin special solution".into(),
        ));
    }
    let bundle = run_term_scheduler(problem, ApproxOrder::Zeroth)?;
    let omega0 = &bundle.terms.omega[&OrderTag::ZERO];
    let last = omega0.levels() - 1;
    let t = omega0.times[last];
    let slopes = [0, 1, 2].map(|i| omega0.vertex_slope(i, last));
    let inputs = match problem.regime.regime {
        Regime::A => InnerInputs {
            slopes,
            omega0_vertex: omega0.vertex_values[last][0],
            ..Default::default()
        },
        _ => {
            let full = run_term_scheduler(problem, ApproxOrder::First)?;
            InnerInputs {
                slopes,
                v_minus_a0: full.constants.v_at(OrderTag::MINUS_A0, last).unwrap_or(0.0),
                ..Default::default()
            }
        }
    };
    let check = |inputs: InnerInputs| -> Result<f64> {
        let rhs = inner_rhs_for(problem, &op.mesh, OrderTag::ONE, &inputs, t)?;
        let b = rhs.load(&op)?;
        let scale: f64 = b.iter().map(|v| v.abs()).sum();
        Ok(b.iter().sum::<f64>().abs() / scale.max(f64::MIN_POSITIVE))
    };
    let r = check(inputs)?;
    Ok(Check::measure(
        "cell-compatibility",
        r,
        COMPATIBILITY_TOL,
        Bound::AtMost,
        format!("relative compatibility residual of the order-1 inner load at t = {t}"),
    ))
}

/// Straight pipe of the node half-side: the special Neumann solution is exactly linear,
/// so the far-field constants vanish and every cross-section carries the unit flux.
fn pipe_check(problem: &Problem, flux: bool) -> Result<Check> {
    let ell0 = problem.geometry.ell0;
    let hv = problem.discretization.cell_hv;
    let spec = InnerDomainSpec::pipe(ell0, 20.0, hv)?;
    let (field, report) = solve_special_neumann(&spec, 2)?;
    if !flux {
        let worst = report.outlets.iter().fold(0.0f64, |m, o| m.max(o.constant.abs()));
        return Ok(Check::measure(
            "pipe-constants",
            worst,
            PIPE_CONSTANT_TOL,
            Bound::AtMost,
            format!("max |far-field constant| on a pipe of half-side {ell0}, hv = {hv}"),
        ));
    }
    let op = CellOperator::from_spec(&spec, CellBc::Neumann)?;
    let mesh = &op.mesh;
    let h = mesh.hv();
    let mut planes: std::collections::BTreeMap<i64, f64> = Default::default();
    for &(lo, up) in &mesh.faces {
        let (a, b) = (mesh.index[lo], mesh.index[up]);
        if b[0] == a[0] + 1 && b[1] == a[1] && b[2] == a[2] {
            *planes.entry(a[0]).or_default() += (field.values[up] - field.values[lo]) * h;
        }
    }
    let worst = planes.values().fold(0.0f64, |m, f| m.max((f.abs() - 1.0).abs()));
    Ok(Check::measure(
        "pipe-flux-balance",
        worst,
        PIPE_FLUX_TOL,
        Bound::AtMost,
        format!("max | |flux through a cross-section| - 1 | over {} sections", planes.len()),
    ))
}
