//! Implicit Euler with Newton's method for the full problem on the thin junction.
//!
//! Finite volumes on the voxel mesh: two-point fluxes between neighbours, and on
//! every Robin facet the boundary value `u_b` is eliminated from
//! `2 (u_b - u_v) / h + c kappa(u_b) = d` with `c = eps^alpha`, `d = eps^beta phi`.
//! The facet then contributes the flux `2 h (u_v - u_b)`. Dirichlet ends use
//! `u_b = 0`. Everything is in integrated form (per voxel, not per volume).

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm2, pcg, AutoPreconditioner, CsrMatrix};
use crate::model::{
    DataFunctions, Derivs, NonlinearitySet, Problem, RegimeParams, TimeGrid,
};

use super::mesh::{build_junction_mesh, JunctionFacetKind, JunctionMesh};

/// Newton stops when `||R / h^3||_2 <= NEWTON_TOL sqrt(n)`.
pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 50;
/// Relative residual of the inner conjugate-gradient solves.
pub const CG_TOL: f64 = 1e-12;
const CG_MAX_ITER: usize = 20_000;
const MAX_ENVELOPE: usize = 80_000_000;

/// Which nonlinearity and scaling a Robin facet carries.
#[derive(Debug, Clone, Copy)]
enum FacetLaw {
    Node,
    Edge(usize),
    Dirichlet,
}

/// The spatial operator `A_eps` with its boundary scalings.
pub struct JunctionOperator<'a> {
    pub mesh: &'a JunctionMesh,
    pub nl: &'a NonlinearitySet,
    pub regime: RegimeParams,
    /// `eps^alpha_j` and `eps^beta_j`, j = 0..3.
    pub eps_alpha: [f64; 4],
    pub eps_beta: [f64; 4],
    laws: Vec<FacetLaw>,
    /// Two-point flux matrix plus the Dirichlet end terms.
    stiffness: CsrMatrix,
    diag: Vec<usize>,
}

impl std::fmt::Debug for JunctionOperator<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JunctionOperator")
            .field("voxels", &self.mesh.n_voxels())
            .field("regime", &self.regime.regime)
            .finish_non_exhaustive()
    }
}

/// Boundary value on a Robin facet and `kappa'` there. `c = 0` gives the linear
/// Neumann elimination `u_b = u + h d / 2`.
fn facet_trace(u: f64, h: f64, c: f64, d: f64, kappa: impl Fn(f64) -> Derivs) -> (f64, f64) {
    if c == 0.0 {
        return (u + 0.5 * h * d, 0.0);
    }
    let g = |s: f64| -> (f64, f64) {
        let k = kappa(s);
        (2.0 * (s - u) / h + c * k.value - d, 2.0 / h + c * k.d1)
    };
    let (g0, _) = g(u);
    if g0 == 0.0 {
        return (u, kappa(u).d1);
    }
    // g is increasing with slope >= 2/h, so the root lies between u and u - h g(u)/2
    let other = u - 0.5 * h * g0;
    let (mut lo, mut hi) = if g0 > 0.0 { (other, u) } else { (u, other) };
    let mut s = u;
    for _ in 0..100 {
        let (gs, dg) = g(s);
        if gs == 0.0 {
            break;
        }
        if gs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let mut next = s - gs / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * s.abs().max(h * d.abs()).max(1e-300) {
            s = next;
            break;
        }
        s = next;
    }
    (s, kappa(s).d1)
}

/// Per-step data sampled on the mesh: `h^3 f` per voxel and `eps^beta phi` per facet.
#[derive(Debug, Clone)]
pub struct SampledData {
    pub volume: Vec<f64>,
    pub facet: Vec<f64>,
}

impl<'a> JunctionOperator<'a> {
    pub fn new(mesh: &'a JunctionMesh, nl: &'a NonlinearitySet, regime: RegimeParams) -> Self {
        let eps = mesh.epsilon;
        let h = mesh.h;
        let n = mesh.n_voxels();
        let mut t = Vec::with_capacity(n + 2 * mesh.faces.len());
        for v in 0..n {
            t.push((v, v, 0.0));
        }
        for &(a, b) in &mesh.faces {
            t.push((a, a, h));
            t.push((b, b, h));
            t.push((a, b, -h));
            t.push((b, a, -h));
        }
        let laws = mesh
            .facets
            .iter()
            .map(|f| match f.kind {
                JunctionFacetKind::Gamma0 => FacetLaw::Node,
                JunctionFacetKind::Lateral(i) => FacetLaw::Edge(i),
                JunctionFacetKind::DirichletEnd(_) => FacetLaw::Dirichlet,
            })
            .collect::<Vec<_>>();
        for (f, law) in mesh.facets.iter().zip(&laws) {
            if let FacetLaw::Dirichlet = law {
                t.push((f.voxel, f.voxel, 2.0 * h));
            }
        }
        let stiffness = CsrMatrix::from_triplets(n, t);
        let diag = stiffness.diag_positions();
        Self {
            mesh,
            nl,
            regime,
            eps_alpha: regime.alpha.map(|a| eps.powf(a)),
            eps_beta: regime.beta.map(|b| eps.powf(b)),
            laws,
            stiffness,
            diag,
        }
    }

    /// Samples `f` and the scaled boundary data at time `t`. The boundary data are
    /// evaluated in the fast variables: `phi0(x / eps, t)` and `phi_i(xbar_i / eps, x_i, t)`.
    pub fn sample(&self, data: &DataFunctions, t: f64) -> SampledData {
        let m = self.mesh;
        let vol = m.voxel_volume();
        let eps = m.epsilon;
        let volume = m.centers.iter().map(|&x| vol * (data.f)(x, t)).collect();
        let facet = m
            .facets
            .iter()
            .zip(&self.laws)
            .map(|(f, law)| match *law {
                FacetLaw::Node => self.eps_beta[0] * (data.phi0)(f.center.map(|c| c / eps), t),
                FacetLaw::Edge(i) => {
                    let tr = crate::model::data::transverse_axes(i);
                    let eta = [f.center[tr[0]] / eps, f.center[tr[1]] / eps];
                    self.eps_beta[i + 1] * (data.phi[i])(eta, f.center[i], t)
                }
                FacetLaw::Dirichlet => 0.0,
            })
            .collect();
        SampledData { volume, facet }
    }

    /// Zero data of the right shape.
    pub fn zero_data(&self) -> SampledData {
        SampledData {
            volume: vec![0.0; self.mesh.n_voxels()],
            facet: vec![0.0; self.mesh.facets.len()],
        }
    }

    /// Boundary value and `kappa'` at facet `k` for voxel value `u`.
    fn trace(&self, k: usize, u: f64, d: f64, t: f64) -> (f64, f64) {
        let h = self.mesh.h;
        match self.laws[k] {
            FacetLaw::Node => {
                facet_trace(u, h, self.eps_alpha[0], d, |s| self.nl.kappa0.eval(s))
            }
            FacetLaw::Edge(i) => {
                let x = self.mesh.facets[k].center[i];
                facet_trace(u, h, self.eps_alpha[i + 1], d, |s| {
                    self.nl.kappa[i].eval(s, x, t)
                })
            }
            FacetLaw::Dirichlet => (0.0, 0.0),
        }
    }

    /// Boundary values on all facets (0 on Dirichlet ends).
    pub fn facet_values(&self, u: &[f64], data: &SampledData, t: f64) -> Vec<f64> {
        self.mesh
            .facets
            .iter()
            .enumerate()
            .map(|(k, f)| self.trace(k, u[f.voxel], data.facet[k], t).0)
            .collect()
    }

    /// `A(u) - data` in integrated form, without the time derivative.
    pub fn apply(&self, u: &[f64], data: &SampledData, t: f64) -> Vec<f64> {
        let vol = self.mesh.voxel_volume();
        let h = self.mesh.h;
        let mut r = vec![0.0; u.len()];
        self.stiffness.matvec(u, &mut r);
        for (v, rv) in r.iter_mut().enumerate() {
            *rv += vol * self.nl.k.eval(u[v]).value - data.volume[v];
        }
        for (k, f) in self.mesh.facets.iter().enumerate() {
            if let FacetLaw::Dirichlet = self.laws[k] {
                continue;
            }
            let (ub, _) = self.trace(k, u[f.voxel], data.facet[k], t);
            r[f.voxel] += 2.0 * h * (u[f.voxel] - ub);
        }
        r
    }

    /// Jacobian of [`Self::apply`] plus `shift` on the diagonal.
    pub fn jacobian(&self, u: &[f64], data: &SampledData, t: f64, shift: f64) -> CsrMatrix {
        let vol = self.mesh.voxel_volume();
        let h = self.mesh.h;
        let mut j = self.stiffness.clone();
        for (v, &p) in self.diag.iter().enumerate() {
            j.val[p] += shift + vol * self.nl.k.eval(u[v]).d1;
        }
        for (k, f) in self.mesh.facets.iter().enumerate() {
            let c = match self.laws[k] {
                FacetLaw::Node => self.eps_alpha[0],
                FacetLaw::Edge(i) => self.eps_alpha[i + 1],
                FacetLaw::Dirichlet => continue,
            };
            let (_, dk) = self.trace(k, u[f.voxel], data.facet[k], t);
            let ck = c * dk;
            j.val[self.diag[f.voxel]] += 2.0 * h * ck / (2.0 / h + ck);
        }
        j
    }

    /// Discrete `||grad w||^2` including the half voxels next to boundary facets:
    /// `w_b` are the facet values of `w` (0 on Dirichlet ends).
    pub fn gradient_energy(&self, w: &[f64], wb: &[f64]) -> f64 {
        let h = self.mesh.h;
        let mut s: f64 = self
            .mesh
            .faces
            .iter()
            .map(|&(a, b)| h * (w[a] - w[b]).powi(2))
            .sum();
        for (f, b) in self.mesh.facets.iter().zip(wb) {
            s += 2.0 * h * (w[f.voxel] - b).powi(2);
        }
        s
    }
}

/// Returns `(<A u1 - A u2, u1 - u2>, ||grad (u1 - u2)||^2)` for the operator without
/// data. Strong monotonicity means the first is at least the second.
pub fn operator_pairing(op: &JunctionOperator, u1: &[f64], u2: &[f64], t: f64) -> (f64, f64) {
    let zero = op.zero_data();
    let a1 = op.apply(u1, &zero, t);
    let a2 = op.apply(u2, &zero, t);
    let w: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| a - b).collect();
    let p = a1.iter().zip(&a2).zip(&w).map(|((x, y), d)| (x - y) * d).sum();
    let b1 = op.facet_values(u1, &zero, t);
    let b2 = op.facet_values(u2, &zero, t);
    let wb: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a - b).collect();
    (p, op.gradient_energy(&w, &wb))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    /// Final `||R / h^3||_2`.
    pub residual: f64,
}

/// Stepper holding the operator and a preconditioner for a fixed time step.
pub struct JunctionStepper<'a> {
    pub op: JunctionOperator<'a>,
    pub dt: f64,
    pc: AutoPreconditioner,
}

impl<'a> JunctionStepper<'a> {
    /// The preconditioner factors the Newton matrix linearised at `u = 0`, `t = 0`.
    pub fn new(op: JunctionOperator<'a>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let zero = vec![0.0; op.mesh.n_voxels()];
        let j0 = op.jacobian(&zero, &op.zero_data(), 0.0, op.mesh.voxel_volume() / dt);
        let pc = AutoPreconditioner::new(&j0, MAX_ENVELOPE)?;
        Ok(Self { op, dt, pc })
    }

    /// One implicit Euler step from `u_prev` at time `t - dt` to time `t`.
    /// `step` only labels errors.
    pub fn step(
        &self,
        u_prev: &[f64],
        data: &SampledData,
        t: f64,
        step: usize,
    ) -> Result<(Vec<f64>, StepStats)> {
        let op = &self.op;
        let vol = op.mesh.voxel_volume();
        let mass = vol / self.dt;
        let n = u_prev.len();
        let tol = NEWTON_TOL * (n as f64).sqrt();
        let residual = |u: &[f64]| -> Vec<f64> {
            let mut r = op.apply(u, data, t);
            for v in 0..n {
                r[v] += mass * (u[v] - u_prev[v]);
            }
            r
        };
        // round-off level of the residual rows
        let floor = |u: &[f64]| -> f64 {
            let d = op.stiffness.diagonal();
            let s: Vec<f64> = (0..n)
                .map(|v| {
                    (2.0 * (d[v] + mass) * u[v].abs() + mass * u_prev[v].abs() + data.volume[v].abs())
                        / vol
                })
                .collect();
            64.0 * f64::EPSILON * norm2(&s)
        };
        let mut u = u_prev.to_vec();
        let mut r = residual(&u);
        let mut rn = norm2(&r) / vol;
        let mut stats = StepStats {
            newton_iterations: 0,
            cg_iterations: 0,
            residual: rn,
        };
        loop {
            if rn <= tol.max(floor(&u)) {
                stats.residual = rn;
                return Ok((u, stats));
            }
            if stats.newton_iterations == NEWTON_MAX_ITER || !rn.is_finite() {
                return Err(Error::NewtonFailure {
                    step,
                    time: t,
                    iterations: stats.newton_iterations,
                    residual: rn,
                });
            }
            let j = op.jacobian(&u, data, t, mass);
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let mut du = vec![0.0; n];
            let cg = pcg(&j, &rhs, &mut du, &self.pc, CG_TOL, CG_MAX_ITER)?;
            stats.cg_iterations += cg.iterations;
            stats.newton_iterations += 1;
            // backtracking on the residual norm
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + lambda * b).collect();
                let rt = residual(&trial);
                let rtn = norm2(&rt) / vol;
                if rtn <= (1.0 - 1e-4 * lambda) * rn || lambda < 1.0 / 512.0 {
                    u = trial;
                    r = rt;
                    rn = rtn;
                    break;
                }
                lambda *= 0.5;
            }
        }
    }
}

/// Values of a field at the time levels; level 0 is the zero initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesField {
    pub times: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
}

impl TimeSeriesField {
    pub fn zeros(times: Vec<f64>, n: usize) -> Self {
        let levels = vec![vec![0.0; n]; times.len()];
        Self { times, levels }
    }

    pub fn n_levels(&self) -> usize {
        self.times.len()
    }
}

/// Newton and timing statistics of a reference run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub newton_iterations: usize,
    pub max_newton_per_step: usize,
    pub cg_iterations: usize,
    pub max_residual: f64,
    pub cholesky_preconditioner: bool,
    pub wall_time_s: f64,
}

/// Reference solution on one mesh.
#[derive(Debug, Clone)]
pub struct JunctionRun {
    pub mesh: JunctionMesh,
    pub series: TimeSeriesField,
    pub stats: RunStats,
}

/// Marches the implicit scheme over `time` on `mesh`.
pub fn solve_on_mesh(
    mesh: JunctionMesh,
    nl: &NonlinearitySet,
    regime: RegimeParams,
    data: &DataFunctions,
    time: &TimeGrid,
) -> Result<JunctionRun> {
    let start = Instant::now();
    let times = time.times();
    let dt = time.dt();
    let mut series = TimeSeriesField::zeros(times.clone(), mesh.n_voxels());
    let mut stats = RunStats {
        newton_iterations: 0,
        max_newton_per_step: 0,
        cg_iterations: 0,
        max_residual: 0.0,
        cholesky_preconditioner: false,
        wall_time_s: 0.0,
    };
    {
        let stepper = JunctionStepper::new(JunctionOperator::new(&mesh, nl, regime), dt)?;
        stats.cholesky_preconditioner = stepper.pc.is_cholesky();
        for s in 1..times.len() {
            let t = times[s];
            let sampled = stepper.op.sample(data, t);
            let (u, st) = stepper.step(&series.levels[s - 1], &sampled, t, s)?;
            series.levels[s] = u;
            stats.newton_iterations += st.newton_iterations;
            stats.max_newton_per_step = stats.max_newton_per_step.max(st.newton_iterations);
            stats.cg_iterations += st.cg_iterations;
            stats.max_residual = stats.max_residual.max(st.residual);
        }
    }
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(JunctionRun { mesh, series, stats })
}

/// Builds the mesh for `epsilon` and `resolution` and solves the problem on it.
pub fn solve_junction(problem: &Problem, epsilon: f64, resolution: usize) -> Result<JunctionRun> {
    problem.regime.require_supported()?;
    let mesh = build_junction_mesh(&problem.geometry, epsilon, resolution)?;
    solve_on_mesh(
        mesh,
        &problem.nonlinearities,
        problem.regime,
        &problem.data,
        &problem.time,
    )
}
