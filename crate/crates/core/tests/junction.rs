//! Reference solver on the thin junction: scaling laws, manufactured solutions,
//! monotonicity of the discrete operator and the norms.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starjunction::junction::*;
use starjunction::model::{
    classify_regime, DataFunctions, EdgeNonlinearity, JunctionGeometry, NonlinearitySet, Preset,
    RegimeParams, ScalarNonlinearity, TimeGrid,
};

fn mm(lambda: f64) -> Preset {
    Preset::MichaelisMenten { lambda, nu: 1.0, linear: 0.0 }
}

fn nonlinear_set() -> NonlinearitySet {
    NonlinearitySet {
        k: ScalarNonlinearity::Preset(mm(1.0)),
        kappa0: ScalarNonlinearity::Preset(Preset::Cosine { lambda: 1.5 }),
        kappa: [
            EdgeNonlinearity::Preset(mm(2.0)),
            EdgeNonlinearity::Preset(Preset::Cosine { lambda: 1.2 }),
            EdgeNonlinearity::custom(|s, x, t| {
                let c = 1.0 + 0.5 * x + 0.25 * t;
                starjunction::model::Derivs { value: c * s, d1: c, d2: 0.0 }
            }),
        ],
        k_plus: 3.0,
        k_minus: None,
    }
}

fn regime_a() -> RegimeParams {
    classify_regime([0.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap()
}

#[test]
fn mesh_scaling_laws() {
    let g = JunctionGeometry::square(0.3, [0.4, 0.4, 0.4]).unwrap();
    let m = build_junction_mesh(&g, 0.1, 4).unwrap();
    for i in 0..3 {
        assert_eq!(m.slice(i, 0).len(), 16, "4 x 4 voxels across edge {}", i + 1);
    }
    for eps in [0.25, 0.125] {
        let g = JunctionGeometry::standard();
        let m = build_junction_mesh(&g, eps, 4).unwrap();
        let e2 = eps * eps;
        assert!((m.facet_total(JunctionFacetKind::Gamma0) - e2 * g.gamma0_area()).abs() < 1e-14);
        assert!((m.node_volume() - eps.powi(3) * g.node_volume()).abs() < 1e-15);
        for i in 0..3 {
            let s = g.voxel_side(i).unwrap();
            let lateral = 4.0 * eps * s * (1.0 - eps * g.ell0);
            assert!((m.facet_total(JunctionFacetKind::Lateral(i)) - lateral).abs() < 1e-12);
            assert!((m.facet_total(JunctionFacetKind::DirichletEnd(i)) - e2 * s * s).abs() < 1e-15);
        }
    }
}

/// `q(x) = prod_i cos(pi x_i / (2 l_i))`, zero on every end cap, with its gradient and Laplacian.
fn q(x: [f64; 3]) -> (f64, [f64; 3], f64) {
    let w = PI / 2.0;
    let c = x.map(|v| (w * v).cos());
    let s = x.map(|v| (w * v).sin());
    let val = c[0] * c[1] * c[2];
    let grad = [-w * s[0] * c[1] * c[2], -w * c[0] * s[1] * c[2], -w * c[0] * c[1] * s[2]];
    (val, grad, -3.0 * w * w * val)
}

/// Data that make `u = a(t) q(x)` an exact solution.
fn manufactured(
    nl: &NonlinearitySet,
    regime: RegimeParams,
    eps: f64,
    ell0: f64,
    sides: [f64; 3],
    a: fn(f64) -> (f64, f64),
) -> DataFunctions {
    let nl_f = nl.clone();
    let f = Arc::new(move |x: [f64; 3], t: f64| {
        let (v, _, lap) = q(x);
        let (at, dat) = a(t);
        dat * v - at * lap + nl_f.k.eval(at * v).value
    });
    let nl0 = nl.clone();
    let phi0 = Arc::new(move |xi: [f64; 3], t: f64| {
        // the facet lies on the face where |xi_b| = ell0
        let b = (0..3)
            .min_by(|&i, &j| {
                (xi[i].abs() - ell0).abs().partial_cmp(&(xi[j].abs() - ell0).abs()).unwrap()
            })
            .unwrap();
        let x = xi.map(|v| eps * v);
        let (v, g, _) = q(x);
        let (at, _) = a(t);
        let dn = xi[b].signum() * g[b] * at;
        (dn + eps.powf(regime.alpha[0]) * nl0.kappa0.eval(at * v).value) / eps.powf(regime.beta[0])
    });
    let mk = |i: usize| -> starjunction::model::data::LateralFn {
        let nli = nl.clone();
        let tr = starjunction::model::data::transverse_axes(i);
        let half = 0.5 * sides[i];
        Arc::new(move |eta: [f64; 2], xi_long: f64, t: f64| {
            let b = if (eta[0].abs() - half).abs() < (eta[1].abs() - half).abs() { 0 } else { 1 };
            let mut x = [0.0; 3];
            x[i] = xi_long;
            x[tr[0]] = eps * eta[0];
            x[tr[1]] = eps * eta[1];
            let (v, g, _) = q(x);
            let (at, _) = a(t);
            let dn = eta[b].signum() * g[tr[b]] * at;
            (dn + eps.powf(regime.alpha[i + 1]) * nli.kappa[i].eval(at * v, xi_long, t).value)
                / eps.powf(regime.beta[i + 1])
        })
    };
    DataFunctions { f, phi0, phi: [mk(0), mk(1), mk(2)], horizon: 1.0 }
}

fn l2_error(run: &JunctionRun, level: usize, a: f64) -> f64 {
    let m = &run.mesh;
    let u = &run.series.levels[level];
    (0..m.n_voxels())
        .map(|v| (u[v] - a * q(m.centers[v]).0).powi(2) * m.voxel_volume())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn manufactured_solution_converges_at_second_order_in_space() {
    let nl = nonlinear_set();
    let regime = regime_a();
    let g = JunctionGeometry::standard();
    let eps = 0.25;
    // linear in time: implicit Euler is exact in t, the error is purely spatial
    let data = manufactured(&nl, regime, eps, g.ell0, [0.5, 0.25, 0.25], |t| (t, 1.0));
    let time = TimeGrid::new(1.0, 2).unwrap();
    let mut errs = Vec::new();
    for res in [4, 8] {
        let mesh = build_junction_mesh(&g, eps, res).unwrap();
        let run = solve_on_mesh(mesh, &nl, regime, &data, &time).unwrap();
        errs.push(l2_error(&run, 2, 1.0));
    }
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 1.8, "errors {errs:?}, order {order}");
}

#[test]
fn implicit_euler_is_first_order_in_time() {
    let nl = nonlinear_set();
    let regime = regime_a();
    let g = JunctionGeometry::standard();
    let eps = 0.25;
    let data = manufactured(&nl, regime, eps, g.ell0, [0.5, 0.25, 0.25], |t| (t.sin(), t.cos()));
    let mesh = build_junction_mesh(&g, eps, 4).unwrap();
    let run = |steps| {
        solve_on_mesh(mesh.clone(), &nl, regime, &data, &TimeGrid::new(1.0, steps).unwrap())
            .unwrap()
    };
    let fine = run(160);
    let last = |r: &JunctionRun| r.series.levels.last().unwrap().clone();
    let uf = last(&fine);
    let err = |steps| {
        let u = last(&run(steps));
        let vol = mesh.voxel_volume();
        u.iter().zip(&uf).map(|(a, b)| (a - b).powi(2) * vol).sum::<f64>().sqrt()
    };
    let (e1, e2) = (err(10), err(20));
    let order = (e1 / e2).log2();
    assert!(order >= 0.9, "errors {e1} {e2}, order {order}");
}

#[test]
fn implicit_step_decays_energy_and_contracts() {
    let g = JunctionGeometry::standard();
    let mesh = build_junction_mesh(&g, 0.25, 4).unwrap();
    let mut nl = nonlinear_set();
    // vanishing at zero, monotone
    nl.kappa0 = ScalarNonlinearity::Preset(mm(3.0));
    nl.kappa[1] = EdgeNonlinearity::Preset(mm(0.5));
    let regime = classify_regime([0.5, 1.0, 2.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
    let stepper = JunctionStepper::new(JunctionOperator::new(&mesh, &nl, regime), 0.05).unwrap();
    let zero = stepper.op.zero_data();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = mesh.n_voxels();
    let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut last = l2(&u);
    let mut last_gap = l2(&u.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>());
    for s in 1..=5 {
        u = stepper.step(&u, &zero, 0.05 * s as f64, s).unwrap().0;
        w = stepper.step(&w, &zero, 0.05 * s as f64, s).unwrap().0;
        let now = l2(&u);
        let gap = l2(&u.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(now <= last * (1.0 + 1e-12), "step {s}: {now} > {last}");
        assert!(gap <= last_gap * (1.0 + 1e-12));
        last = now;
        last_gap = gap;
    }
}

#[test]
fn operator_pairing_is_strongly_monotone() {
    let g = JunctionGeometry::standard();
    let mesh = build_junction_mesh(&g, 0.1, 4).unwrap();
    let n = mesh.n_voxels();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (set, nl) in [
        ("michaelis-menten", {
            let mut s = nonlinear_set();
            s.kappa0 = ScalarNonlinearity::Preset(mm(4.0));
            s
        }),
        ("cosine", {
            let c = |l| Preset::Cosine { lambda: l };
            NonlinearitySet {
                k: ScalarNonlinearity::Preset(c(1.0)),
                kappa0: ScalarNonlinearity::Preset(c(2.0)),
                kappa: [0, 1, 2].map(|_| EdgeNonlinearity::Preset(c(1.5))),
                k_plus: 3.0,
                k_minus: None,
            }
        }),
    ] {
        for alpha0 in [0.0, -0.5, -1.0] {
            let regime = classify_regime([alpha0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
            let op = JunctionOperator::new(&mesh, &nl, regime);
            for _ in 0..17 {
                let amp = rng.gen_range(0.1..10.0);
                let u1: Vec<f64> = (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
                let u2: Vec<f64> = (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
                let (p, s) = operator_pairing(&op, &u1, &u2, 0.3);
                assert!(p - s >= -1e-10 * (1.0 + s.abs()), "{set}, alpha0 {alpha0}: {p} < {s}");
            }
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert_eq!(operator_pairing(&op, &u, &u, 0.0), (0.0, 0.0));
        }
    }
}

#[test]
fn pairing_with_linear_bulk_and_no_boundary_absorption_is_the_l2_norm() {
    let g = JunctionGeometry::standard();
    let mesh = build_junction_mesh(&g, 0.2, 4).unwrap();
    let nl = NonlinearitySet::linear(1.0, 0.0, 0.0);
    let op = JunctionOperator::new(&mesh, &nl, regime_a());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = mesh.n_voxels();
    let u1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (p, s) = operator_pairing(&op, &u1, &u2, 0.0);
    let l2: f64 = u1.iter().zip(&u2).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * mesh.voxel_volume();
    assert!((p - s - l2).abs() < 1e-12 * (s + l2), "{} vs {l2}", p - s);
}

#[test]
fn norms_of_analytic_fields() {
    let g = JunctionGeometry::standard();
    let eps = 0.2;
    let mesh = build_junction_mesh(&g, eps, 4).unwrap();
    let times = vec![0.0, 0.5, 1.0];
    let n = mesh.n_voxels();
    let zero = TimeSeriesField::zeros(times.clone(), n);
    for kind in [NormKind::MaxL2, NormKind::L2H1, NormKind::L2Gradient] {
        assert_eq!(field_norm(&mesh, &zero, NormRegion::All, kind).unwrap(), 0.0);
    }
    // constant 1 on edge 3: L2 norm sqrt(eps^2 s^2 L)
    let mut c = zero.clone();
    for l in c.levels.iter_mut() {
        for v in mesh.edge_voxels(2) {
            l[v] = 1.0;
        }
    }
    let len = 1.0 - eps * g.ell0;
    let expect = (eps * eps * 0.0625 * len).sqrt();
    let got = field_norm(&mesh, &c, NormRegion::All, NormKind::MaxL2).unwrap();
    assert!((got - expect).abs() < 1e-14);
    // linear profile a x1: gradient energy a^2 |region| per unit time
    let a = 3.0;
    let mut lin = zero.clone();
    for l in lin.levels.iter_mut() {
        for v in 0..n {
            l[v] = a * mesh.centers[v][0];
        }
    }
    let region = NormRegion::EdgeBeyond { edge: 0, a: 0.75 };
    let mask = region_mask(&mesh, region).unwrap();
    let vol = mask.iter().filter(|&&b| b).count() as f64 * mesh.voxel_volume();
    let grad = field_norm(&mesh, &lin, region, NormKind::L2Gradient).unwrap();
    assert!((grad * grad - a * a * vol).abs() < 1e-12 * a * a * vol);
    // difference of a field with itself shifted by a constant
    let shifted = TimeSeriesField {
        times: times.clone(),
        levels: lin.levels.iter().map(|l| l.iter().map(|v| v + 0.5).collect()).collect(),
    };
    let d = difference_norm(&mesh, &shifted, &lin, NormRegion::All, NormKind::MaxL2).unwrap();
    assert!((d - 0.5 * mesh.volume().sqrt()).abs() < 1e-13);
    let dg = difference_norm(&mesh, &shifted, &lin, NormRegion::All, NormKind::L2Gradient).unwrap();
    assert!(dg < 1e-12);
    assert!(node_smallness(&mesh, &zero).unwrap() == 0.0);
}

#[test]
fn node_smallness_decreases_with_epsilon_under_strong_absorption() {
    let g = JunctionGeometry::standard();
    let regime = classify_regime([-1.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
    let nl = NonlinearitySet::linear(1.0, 1.0, 1.0);
    let mut data = DataFunctions::zero(1.0);
    data.f = Arc::new(|x, t| t * (1.0 + x[0] + x[1] + x[2]));
    data.phi0 = Arc::new(|_, t| t);
    let time = TimeGrid::new(1.0, 10).unwrap();
    let value = |eps: f64| {
        let mesh = build_junction_mesh(&g, eps, 4).unwrap();
        let run = solve_on_mesh(mesh, &nl, regime, &data, &time).unwrap();
        assert!(run.stats.max_residual <= NEWTON_TOL * (run.mesh.n_voxels() as f64).sqrt());
        node_smallness(&run.mesh, &run.series).unwrap()
    };
    let (a, b) = (value(0.25), value(0.125));
    assert!(b < a, "{a} -> {b}");
}

#[test]
fn summary_and_export() {
    let g = JunctionGeometry::standard();
    let mesh = build_junction_mesh(&g, 0.25, 4).unwrap();
    let nl = NonlinearitySet::linear(1.0, 1.0, 1.0);
    let mut data = DataFunctions::zero(1.0);
    data.f = Arc::new(|_, _| 1.0);
    let run = solve_on_mesh(mesh, &nl, regime_a(), &data, &TimeGrid::new(1.0, 4).unwrap()).unwrap();
    let s = summarize(&run).unwrap();
    assert_eq!(s.time_steps, 4);
    assert!(s.max_l2 > 0.0 && s.l2_h1 > 0.0);
    let dir = tempfile::tempdir().unwrap();
    write_summary_json(&dir.path().join("run.json"), &s).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(v["voxels"].as_u64().unwrap() as usize, run.mesh.n_voxels());
    assert!(v["maxL2"].as_f64().unwrap() > 0.0);
    let path = dir.path().join("u.bin");
    let u = run.series.levels.last().unwrap();
    write_junction_field_binary(&path, &run.mesh, u, 0.25).unwrap();
    let d = starjunction::cell::DenseField::read(&mut std::fs::File::open(&path).unwrap()).unwrap();
    let kept = d.values.iter().filter(|v| !v.is_nan()).count();
    let expect = run.mesh.centers.iter().filter(|c| c.iter().all(|&x| x <= 0.25)).count();
    assert_eq!(kept, expect);
}
