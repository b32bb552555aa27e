//! First-order corrector `omega_1`: the Kirchhoff-coupled problem with jumps of
//! regime A and the decoupled Dirichlet problems of regime C.

use crate::error::{Error, Result};
use crate::model::Regime;

use super::constants::CouplingConstants;
use super::limit::{march, GraphContext, MarchVertex};
use super::solution::{GraphSolution, OrderTag};

/// The explicit pieces of `d1*` at one time level. The full constant is
/// [`D1Terms::total`] evaluated with `int_{Gamma_0} N_1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct D1Terms {
    /// `-l0 sum_i (A_i(0)(dt w + k(w) - f(0,t)) + [alpha_i=1] P_i(0) kappa_i(w,0,t) - [beta_i=1] int phi_i dl)`.
    pub edge_block: f64,
    /// `[alpha0 = 1] |Gamma_0| kappa_0(w)`.
    pub absorption: f64,
    /// `-[beta0 = 1] int_{Gamma_0} phi0`.
    pub data: f64,
    /// `|Xi0| (dt w + k(w) - f(0,t))`.
    pub node: f64,
    /// `[alpha0 = 0] kappa_0'(w)`, the factor of `int_{Gamma_0} N_1`.
    pub kappa0_slope: f64,
}

impl D1Terms {
    pub fn total(&self, n1_gamma0_integral: f64) -> f64 {
        self.edge_block
            + self.absorption
            + self.data
            + self.node
            + self.kappa0_slope * n1_gamma0_integral
    }
}

/// Evaluates the pieces of `d1*` from `omega_0` at a time level (regime A).
pub fn d1_star_terms(ctx: &GraphContext, omega0: &GraphSolution, level: usize) -> Result<D1Terms> {
    let regime = ctx.regime();
    if regime.regime != Regime::A {
        return Err(Error::InvalidInput("d1* is defined for regime A only".into()));
    }
    let geom = ctx.geometry();
    let nl = &ctx.problem.nonlinearities;
    let t = ctx.times[level];
    let w = omega0.vertex_values[level][0];
    let dtw = omega0.vertex_time_derivative(0, level);
    let local = dtw + nl.k.eval(w).value - (ctx.problem.data.f)([0.0; 3], t);
    let mut edge_block = 0.0;
    for i in 0..3 {
        let mut v = geom.area0(i) * local;
        if regime.alpha_is(i + 1, 1.0) {
            v += geom.perimeter0(i) * nl.kappa[i].eval(w, 0.0, t).value;
        }
        if regime.beta_is(i + 1, 1.0) {
            v -= ctx.vertex_contour_integral(i, t);
        }
        edge_block += v;
    }
    edge_block *= -geom.ell0;
    let absorption = regime.alpha_gate(0, 1.0) * geom.gamma0_area() * nl.kappa0.eval(w).value;
    let data = if regime.beta_is(0, 1.0) {
        -ctx.phi0_integral(t)
    } else {
        0.0
    };
    Ok(D1Terms {
        edge_block,
        absorption,
        data,
        node: geom.node_volume() * local,
        kappa0_slope: regime.alpha_gate(0, 0.0) * nl.kappa0.eval(w).d1,
    })
}

/// `d1*` as printed, given `int_{Gamma_0} N_1`; the integral is required when `alpha0 = 0`.
pub fn compute_d1_star(
    ctx: &GraphContext,
    omega0: &GraphSolution,
    n1_gamma0_integral: Option<f64>,
    level: usize,
) -> Result<f64> {
    let terms = d1_star_terms(ctx, omega0, level)?;
    match n1_gamma0_integral {
        Some(v) => Ok(terms.total(v)),
        None if terms.kappa0_slope == 0.0 && !ctx.regime().alpha_is(0, 0.0) => Ok(terms.total(0.0)),
        None => Err(Error::Dependency(
            "d1* needs the Gamma_0 integral of N_1 when alpha0 = 0".into(),
        )),
    }
}

/// Linear coefficient `A k'(omega_0) + [alpha_i = 1] P d_s kappa_i(omega_0)` at cell `j`.
pub(crate) fn linear_coefficient(
    ctx: &GraphContext,
    omega0: &GraphSolution,
    l: usize,
    i: usize,
    j: usize,
) -> f64 {
    let e = &ctx.disc.edges[i];
    let nl = &ctx.problem.nonlinearities;
    let u = omega0.fields[i].values[l][j];
    let mut c = e.area[j] * nl.k.eval(u).d1;
    if ctx.regime().alpha_is(i + 1, 1.0) {
        c += e.perimeter[j] * nl.kappa[i].eval(u, e.centers[j], ctx.times[l]).d1;
    }
    c
}

/// `F1hat` at the cell centres: `-[alpha_i = 2] P kappa_i(omega_0) + [beta_i = 2] int phi_i dl`.
/// The cross-sectional moment of the first-order source vanishes for centred sections.
fn f1hat_cells(ctx: &GraphContext, omega0: &GraphSolution, l: usize) -> [Vec<f64>; 3] {
    let t = ctx.times[l];
    let nl = &ctx.problem.nonlinearities;
    [0, 1, 2].map(|i| {
        let e = &ctx.disc.edges[i];
        let a2 = ctx.regime().alpha_is(i + 1, 2.0);
        let b2 = ctx.regime().beta_is(i + 1, 2.0);
        (0..e.n())
            .map(|j| {
                let mut v = 0.0;
                if a2 {
                    let u = omega0.fields[i].values[l][j];
                    v -= e.perimeter[j] * nl.kappa[i].eval(u, e.centers[j], t).value;
                }
                if b2 {
                    v += ctx.contour_integral(i, j, t);
                }
                v
            })
            .collect()
    })
}

/// How the vertex jumps of the regime-A corrector are imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpMethod {
    /// Subtract `delta_i(t) (l_i - x)/l_i` on each edge, solve for a continuous
    /// unknown, add the shift back.
    Shift,
    /// Impose `omega^{(i)}(0) = w + delta_i` directly in the vertex faces.
    Direct,
}

/// Solves the regime-A corrector with jumps `delta_1^{(i)}` from `constants` and the
/// flux condition `sum_i A_i(0) omega_1'(0) = d1*`, where
/// `d1* = explicit + |Gamma_0| kappa0_slope * omega_1^{(1)}(0)` and `explicit` is `d1*`
/// with `int N_1` replaced by the integral of the normalised inner field
/// (`n1_hat_gamma0` per level). Fills `constants.d1_star`.
pub fn solve_corrector_omega1_a(
    ctx: &GraphContext,
    omega0: &GraphSolution,
    constants: &mut CouplingConstants,
    n1_hat_gamma0: &[f64],
    method: JumpMethod,
) -> Result<GraphSolution> {
    if ctx.regime().regime != Regime::A {
        return Err(Error::InvalidInput("omega1 with jumps is a regime-A problem".into()));
    }
    if n1_hat_gamma0.len() != ctx.times.len() {
        return Err(Error::Dependency("inner-field integrals missing for some time levels".into()));
    }
    let levels = ctx.times.len();
    let terms: Vec<D1Terms> = (0..levels)
        .map(|l| d1_star_terms(ctx, omega0, l))
        .collect::<Result<_>>()?;
    let explicit: Vec<f64> = (0..levels).map(|l| terms[l].total(n1_hat_gamma0[l])).collect();
    let g0 = ctx.geometry().gamma0_area();
    let coef: Vec<f64> = terms.iter().map(|t| t.kappa0_slope * g0).collect();
    let delta: Vec<[f64; 3]> = (0..levels).map(|l| constants.delta_at(OrderTag::ONE, l)).collect();

    let reaction = |l: usize, i: usize, j: usize, s: f64| {
        let c = linear_coefficient(ctx, omega0, l, i, j);
        (c * s, c)
    };
    let absorption = |l: usize, w: f64| (coef[l] * w, coef[l]);
    let disc = &ctx.disc;
    // Shift profiles delta_i (l_i - x)/l_i at the cell centres.
    let shift = |l: usize, i: usize| -> Vec<f64> {
        let e = &disc.edges[i];
        e.centers
            .iter()
            .map(|&x| delta[l][i] * (e.length() - x) / e.length())
            .collect()
    };
    let dt = ctx.dt();

    let mut sol = match method {
        JumpMethod::Direct => {
            let source = |l: usize| f1hat_cells(ctx, omega0, l);
            let jumps = |l: usize| delta[l];
            let vsrc = |l: usize| -explicit[l];
            march(
                ctx,
                OrderTag::ONE,
                &source,
                &reaction,
                MarchVertex::Kirchhoff {
                    jumps: &jumps,
                    absorption: &absorption,
                    source: &vsrc,
                },
            )?
        }
        JumpMethod::Shift => {
            // Move the discrete operator applied to the shift to the right-hand side.
            let source = |l: usize| {
                let mut f = f1hat_cells(ctx, omega0, l);
                for i in 0..3 {
                    let e = &disc.edges[i];
                    let s = shift(l, i);
                    // the initial level is zero in the cells, shift included
                    let sp = if l == 1 { vec![0.0; e.n()] } else { shift(l - 1, i) };
                    let mut rows = vec![0.0; e.n()];
                    let react = |j: usize, v: f64| reaction(l, i, j, v);
                    e.operator_rows(&s, Some((&sp, dt)), delta[l][i], 0.0, &react, &mut rows);
                    for (fj, rj) in f[i].iter_mut().zip(&rows) {
                        *fj -= rj / e.h;
                    }
                }
                f
            };
            let jumps = |_: usize| [0.0; 3];
            let vsrc = |l: usize| {
                let shift_flux: f64 = (0..3)
                    .map(|i| disc.edges[i].vertex_flux(&shift(l, i), delta[l][i]))
                    .sum();
                shift_flux - explicit[l]
            };
            let mut s = march(
                ctx,
                OrderTag::ONE,
                &source,
                &reaction,
                MarchVertex::Kirchhoff {
                    jumps: &jumps,
                    absorption: &absorption,
                    source: &vsrc,
                },
            )?;
            for l in 0..levels {
                for i in 0..3 {
                    if l > 0 {
                        let sh = shift(l, i);
                        for (v, d) in s.fields[i].values[l].iter_mut().zip(&sh) {
                            *v += d;
                        }
                    }
                    s.vertex_values[l][i] += delta[l][i];
                    s.vertex_fluxes[l][i] =
                        disc.edges[i].vertex_flux(&s.fields[i].values[l], s.vertex_values[l][i]);
                }
            }
            s
        }
    };
    for l in 0..levels {
        constants.d1_star[l] = explicit[l] + coef[l] * sol.vertex_values[l][0];
        sol.vertex_residuals[l] = sol.vertex_fluxes[l].iter().sum::<f64>() - constants.d1_star[l];
    }
    sol.vertex_residuals[0] = 0.0;
    Ok(sol)
}

/// Solves the regime-C corrector: three Dirichlet problems with `omega_1^{(i)}(0) =
/// delta_1^{(i)}(t)` (absolute jumps from the Robin cell problems).
pub fn solve_corrector_omega1_c(
    ctx: &GraphContext,
    omega0: &GraphSolution,
    constants: &CouplingConstants,
) -> Result<GraphSolution> {
    if ctx.regime().regime != Regime::C {
        return Err(Error::InvalidInput("the Dirichlet corrector is a regime-C problem".into()));
    }
    if !constants.has_delta(OrderTag::ONE) {
        return Err(Error::Dependency("delta_1 has not been computed".into()));
    }
    let reaction = |l: usize, i: usize, j: usize, s: f64| {
        let c = linear_coefficient(ctx, omega0, l, i, j);
        (c * s, c)
    };
    let source = |l: usize| f1hat_cells(ctx, omega0, l);
    let values = |l: usize| constants.delta_at(OrderTag::ONE, l);
    march(ctx, OrderTag::ONE, &source, &reaction, MarchVertex::Dirichlet(&values))
}
