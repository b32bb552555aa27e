//! Acceptance criteria. Every test prints one `PASS` or `FAIL` line with the measured
//! quantities and the runtime, then asserts the criterion.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starjunction::assembly::{mu_of_epsilon, ApproxOrder};
use starjunction::cell::{
    solve_inner, solve_special_neumann, CellBc, CellOperator, FacetKind, InnerDomainSpec,
    InnerRhs, SpecialSolutions,
};
use starjunction::graph::{
    graph_operator_pairing, solve_limit_omega0, GraphContext, GraphState, StarDiscretization,
};
use starjunction::harness::{run_convergence, ConvergenceReport, StudyPlan};
use starjunction::junction::{build_junction_mesh, operator_pairing, JunctionOperator};
use starjunction::model::*;

const SWEEP: [f64; 3] = [0.2, 0.1, 0.05];

/// Writes past the test harness capture so the lines land in the log of a normal run.
fn report(criterion: u32, passed: bool, start: Instant, detail: String) {
    let line = format!(
        "{} criterion {criterion}: {detail} [{:.1} s]\n",
        if passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn config(name: &str) -> ProblemConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ProblemConfig::from_file(&p).unwrap()
}

fn sweep(name: &str) -> ConvergenceReport {
    let problem = config(name).build().unwrap();
    let res = problem.discretization.junction_resolution;
    let plan = StudyPlan::new(SWEEP.to_vec(), ApproxOrder::First, res);
    run_convergence(&problem, &plan, None).unwrap()
}

/// The regime A sweep is shared by criteria 6 and 9; its runtime is recorded once.
fn sweep_a() -> &'static (ConvergenceReport, f64) {
    static S: OnceLock<(ConvergenceReport, f64)> = OnceLock::new();
    S.get_or_init(|| {
        let t = Instant::now();
        let r = sweep("default.json");
        (r, t.elapsed().as_secs_f64())
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn mm(lambda: f64, nu: f64) -> Preset {
    Preset::MichaelisMenten { lambda, nu, linear: 0.0 }
}

fn preset_sets() -> [(&'static str, NonlinearitySet); 2] {
    let c = |l| Preset::Cosine { lambda: l };
    [
        (
            "michaelis-menten",
            NonlinearitySet {
                k: ScalarNonlinearity::Preset(mm(1.0, 1.0)),
                kappa0: ScalarNonlinearity::Preset(mm(2.0, 0.5)),
                kappa: [0.5, 1.0, 1.5].map(|l| EdgeNonlinearity::Preset(mm(l, 1.0))),
                k_plus: 3.0,
                k_minus: Some(0.5),
            },
        ),
        (
            "cosine",
            NonlinearitySet {
                k: ScalarNonlinearity::Preset(c(1.0)),
                kappa0: ScalarNonlinearity::Preset(c(2.0)),
                kappa: [0.5, 1.0, 1.5].map(|l| EdgeNonlinearity::Preset(c(l))),
                k_plus: 3.0,
                k_minus: None,
            },
        ),
    ]
}

#[test]
fn criterion_1_monotonicity_suite() {
    let start = Instant::now();
    let geom = JunctionGeometry::standard();
    let mesh = build_junction_mesh(&geom, 0.1, 4).unwrap();
    let disc = StarDiscretization::new(&geom, 64).unwrap();
    let n = mesh.n_voxels();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for (_, nl) in preset_sets() {
        let ops: Vec<_> = [0.0, -0.5, -1.0]
            .iter()
            .map(|&alpha0| {
                let regime = classify_regime([alpha0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
                (alpha0, regime, JunctionOperator::new(&mesh, &nl, regime))
            })
            .collect();
        for k in 0..100 {
            let (alpha0, regime, op) = &ops[k % 3];
            let amp = rng.gen_range(0.1..5.0);
            let t = rng.gen_range(0.0..1.0);
            let u1: Vec<f64> = (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
            let u2: Vec<f64> = (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
            let (p, s) = operator_pairing(op, &u1, &u2, t);
            worst = worst.min((p - s) / (1.0 + s));
            let draw = |rng: &mut ChaCha8Rng| GraphState {
                u: [0, 1, 2].map(|_| (0..64).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()),
                w: if *alpha0 >= 0.0 { amp * rng.gen_range(-1.0..1.0) } else { 0.0 },
            };
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            let (p, s) = graph_operator_pairing(&disc, &nl, regime, geom.gamma0_area(), &a, &b, t);
            worst = worst.min((p - s) / (1.0 + s));
            cases += 2;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst >= -1e-10 && secs < 30.0;
    report(
        1,
        ok,
        start,
        format!("{cases} pairs (junction eps 0.1 res 4, graph n 64), min (pairing - |.|^2)/(1 + |.|^2) = {worst:.3e} >= -1e-10"),
    );
    assert!(ok);
}

fn graph_problem(cells: usize, steps: usize, temporal: bool) -> (Problem, impl Fn(f64, f64) -> f64) {
    let k = mm(1.0, 1.0);
    let exact = move |x: f64, t: f64| {
        if temporal {
            (2.0 * t).sin() * x * (1.0 - x)
        } else {
            t * (PI * x).sin()
        }
    };
    let forcing = move |x: f64, t: f64| {
        let (dt, dxx) = if temporal {
            (2.0 * (2.0 * t).cos() * x * (1.0 - x), -2.0 * (2.0 * t).sin())
        } else {
            ((PI * x).sin(), -PI * PI * t * (PI * x).sin())
        };
        dt - dxx + k.eval(exact(x, t)).value
    };
    let mut data = DataFunctions::zero(1.0);
    data.f = Arc::new(move |p: [f64; 3], t| forcing(p[0] + p[1] + p[2], t));
    let p = Problem {
        geometry: JunctionGeometry::square(0.25, [0.25; 3]).unwrap(),
        // all gates closed on the edges, Dirichlet vertex: edge 1 is a plain 1D problem
        regime: classify_regime([-0.5, 2.0, 2.0, 2.0], [0.0, 2.0, 2.0, 2.0]).unwrap(),
        nonlinearities: NonlinearitySet {
            k: ScalarNonlinearity::Preset(k),
            ..NonlinearitySet::linear(0.0, 1.0, 0.0)
        },
        data,
        time: TimeGrid::new(1.0, steps).unwrap(),
        discretization: Discretization { graph_cells: cells, ..Discretization::default() },
        asymptotics: AsymptoticOptions::default(),
    };
    (p, exact)
}

fn graph_error(cells: usize, steps: usize, temporal: bool) -> f64 {
    let (p, exact) = graph_problem(cells, steps, temporal);
    let s = solve_limit_omega0(&GraphContext::new(&p).unwrap()).unwrap();
    let l = s.levels() - 1;
    s.fields[0]
        .grid
        .centers()
        .iter()
        .zip(&s.fields[0].values[l])
        .map(|(x, u)| (u - exact(*x, 1.0)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_2_graph_solver_orders() {
    let start = Instant::now();
    let es: Vec<f64> = [32, 64, 128].iter().map(|&n| graph_error(n, 10, false)).collect();
    let et: Vec<f64> = [20, 40, 80].iter().map(|&s| graph_error(16, s, true)).collect();
    let eoc = |e: &[f64]| e.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let (so, to) = (eoc(&es), eoc(&et));
    let ok = so >= 1.9 && to >= 0.9 && start.elapsed().as_secs_f64() < 10.0;
    report(2, ok, start, format!("spatial EOC {so:.3} >= 1.9, temporal EOC {to:.3} >= 0.9"));
    assert!(ok);
}

#[test]
fn criterion_3_kirchhoff_residual() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for alpha0 in [0.0, 0.5] {
        let mut cfg = config("default.json");
        cfg.regime.alpha[0] = alpha0;
        let p = cfg.build().unwrap();
        assert_eq!(p.regime.regime, Regime::A);
        let s = solve_limit_omega0(&GraphContext::new(&p).unwrap()).unwrap();
        worst = worst.max(s.vertex_residuals.iter().fold(0.0, |m, r| m.max(r.abs())));
    }
    let ok = worst <= 1e-8 && start.elapsed().as_secs_f64() < 5.0;
    report(3, ok, start, format!("alpha0 in {{0, 0.5}}: max |vertex residual| = {worst:.3e} <= 1e-8"));
    assert!(ok);
}

#[test]
fn criterion_4_degenerate_pipe() {
    let start = Instant::now();
    let spec = InnerDomainSpec::pipe(0.25, 20.0, 0.125).unwrap();
    let (field, rep) = solve_special_neumann(&spec, 2).unwrap();
    let constants = rep.outlets.iter().fold(0.0f64, |m, o| m.max(o.constant.abs()));
    let op = CellOperator::from_spec(&spec, CellBc::Neumann).unwrap();
    let mesh = &op.mesh;
    let h = mesh.hv();
    let mut planes = std::collections::BTreeMap::<i64, f64>::new();
    for &(lo, up) in &mesh.faces {
        let (a, b) = (mesh.index[lo], mesh.index[up]);
        if b[0] == a[0] + 1 && b[1] == a[1] && b[2] == a[2] {
            *planes.entry(a[0]).or_default() += (field.values[up] - field.values[lo]) * h;
        }
    }
    let flux = planes.values().fold(0.0f64, |m, f| m.max((f.abs() - 1.0).abs()));
    let ok = constants <= 1e-6 && flux <= 1e-10 && start.elapsed().as_secs_f64() < 60.0;
    report(
        4,
        ok,
        start,
        format!("R 20, hv 1/8: max |constant| {constants:.3e} <= 1e-6, flux balance {flux:.3e} <= 1e-10"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_delta_cross_validation() {
    let start = Instant::now();
    let spec = |r: f64| InnerDomainSpec::from_geometry(&JunctionGeometry::standard(), r, 0.125).unwrap();
    let deltas = |r: f64| {
        let op = CellOperator::from_spec(&spec(r), CellBc::Neumann).unwrap();
        let specials = SpecialSolutions::compute(&op).unwrap();
        let mesh = &op.mesh;
        let mut rhs = InnerRhs::from_slopes(mesh, &[0.4, -0.3, 0.9], |p| 1.0 + p[0] + 2.0 * p[1] * p[2]).unwrap();
        let shift = rhs.total(mesh) / mesh.facet_total(FacetKind::Gamma0);
        for (f, b) in mesh.facets.iter().zip(rhs.boundary.iter_mut()) {
            if f.kind == FacetKind::Gamma0 {
                *b -= shift;
            }
        }
        let s = solve_inner(&op, &rhs, Some(&specials)).unwrap();
        (s.delta.clone(), s.delta_green.unwrap())
    };
    let (far20, green20) = deltas(20.25);
    let (far10, _) = deltas(10.25);
    let mut green_rel = 0.0f64;
    let mut radius_rel = 0.0f64;
    for i in 1..3 {
        green_rel = green_rel.max((green20[i] - far20[i]).abs() / far20[i].abs());
        radius_rel = radius_rel.max((far10[i] - far20[i]).abs() / far20[i].abs());
    }
    let ok = green_rel <= 0.01 && radius_rel <= 1e-4 && start.elapsed().as_secs_f64() < 300.0;
    report(
        5,
        ok,
        start,
        format!("Green vs far field at R 20: {green_rel:.3e} <= 1e-2; R 10 -> 20: {radius_rel:.3e} <= 1e-4"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_regime_a_sweep() {
    let start = Instant::now();
    let (rep, secs) = sweep_a();
    assert_eq!(rep.failures(), 0);
    let rows: Vec<_> = rep.rows.iter().collect();
    let smax: Vec<f64> = rows.iter().map(|r| r.scaled_max_l2.unwrap()).collect();
    let sh1: Vec<f64> = rows.iter().map(|r| r.scaled_l2h1.unwrap()).collect();
    let eoc = rep.fits.l2h1.unwrap().order;
    let improves = rows.iter().all(|r| {
        let (a, z) = (r.approx.unwrap(), r.zeroth.unwrap());
        a.max_l2 <= z.max_l2 && a.l2h1 <= z.l2h1
    });
    let (i, ii) = (strictly_decreasing(&smax), strictly_decreasing(&sh1));
    let ok = i && ii && eoc >= 1.0 && improves && *secs < 1800.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
    report(
        6,
        ok,
        start,
        format!(
            "scaled maxL2 [{}] decreasing {i}; scaled L2H1 [{}] decreasing {ii}; L2H1 EOC {eoc:.3} >= 1; U1 <= U0 {improves}; sweep {secs:.1} s",
            fmt(&smax),
            fmt(&sh1)
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_regime_c_node_smallness() {
    let start = Instant::now();
    let rep = sweep("regime_c.json");
    assert_eq!(rep.failures(), 0);
    let vals: Vec<f64> = rep.rows.iter().map(|r| r.node_smallness.unwrap()).collect();
    let slope = rep.fits.node_smallness.unwrap().order;
    let dec = strictly_decreasing(&vals);
    let ok = dec && slope >= 0.5 && start.elapsed().as_secs_f64() < 1800.0;
    report(
        7,
        ok,
        start,
        format!(
            "eps^-3 int int_node u^2 = [{}] decreasing {dec}; log-slope {slope:.3} >= 0.5",
            vals.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_mu_evaluator() {
    let start = Instant::now();
    let e = 0.1f64;
    let base = e.powf(1.375);
    let cases: [([f64; 4], [f64; 4], f64); 6] = [
        // all gates closed: only the cutoff term remains
        ([0.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0], base),
        ([0.5, 2.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0], base + e.powf(2.0) + e.powf(1.5)),
        ([-0.5, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0], base + e.powf(1.5) + e.powf(1.5)),
        (
            [-0.5, 1.25, 1.0, 1.0],
            [0.5, 1.5, 2.0, 1.0],
            base + e.powf(1.5) + e.powf(1.5) + e.powf(1.25) + e.powf(2.0),
        ),
        ([-1.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0], base),
        ([-1.0, 2.0, 1.0, 1.0], [1.0, 1.0, 1.0, 3.0], base + e.powf(2.0) + e.powf(3.0) + e.powf(2.0)),
    ];
    let mut worst = 0.0f64;
    let mut little_o = true;
    for (al, be, want) in cases {
        let r = classify_regime(al, be).unwrap();
        worst = worst.max((mu_of_epsilon(&r, 0.75, e).unwrap() - want).abs());
        let ratio: Vec<f64> = (2..=6)
            .map(|k| {
                let x = 0.5f64.powi(k);
                mu_of_epsilon(&r, 0.75, x).unwrap() / x
            })
            .collect();
        little_o &= strictly_decreasing(&ratio);
    }
    let ok = worst <= 1e-15 && little_o && start.elapsed().as_secs_f64() < 1.0;
    report(8, ok, start, format!("6 cases, max deviation {worst:.1e} <= 1e-15; mu/eps decreasing {little_o}"));
    assert!(ok);
}

#[test]
fn criterion_9_a_priori_uniformity() {
    let start = Instant::now();
    let (rep, _) = sweep_a();
    let vals: Vec<f64> = rep.rows.iter().map(|r| r.apriori.unwrap()).collect();
    let ratio = rep.apriori_ratio.unwrap();
    let ok = ratio <= 3.0;
    report(
        9,
        ok,
        start,
        format!(
            "(max_t |u| + |u|_L2H1)/eps = [{}], max/min {ratio:.3} <= 3",
            vals.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
        ),
    );
    assert!(ok);
}
