//! The zeroth-order limit problem on the star graph and the shared time-marching
//! driver used by every graph term.

use crate::error::{Error, Result};
use crate::model::{JunctionGeometry, Problem, Regime, RegimeParams};

use super::constants::CouplingConstants;
use super::fv::{implicit_step, StarDiscretization, StepSpec, VertexCondition};
use super::solution::{EdgeField, GraphSolution, OrderTag};

type Contour = Vec<([f64; 2], f64)>;

/// Discretisation and cached quadrature shared by all graph solves of one problem.
pub struct GraphContext<'p> {
    pub problem: &'p Problem,
    pub disc: StarDiscretization,
    pub times: Vec<f64>,
    contours: [Vec<Contour>; 3],
    vertex_contours: [Contour; 3],
    gamma0: Vec<([f64; 3], f64)>,
}

impl<'p> GraphContext<'p> {
    /// Uses the problem's graph cell count and time grid.
    pub fn new(problem: &'p Problem) -> Result<Self> {
        Self::with_cells(problem, problem.discretization.graph_cells)
    }

    pub fn with_cells(problem: &'p Problem, n_cells: usize) -> Result<Self> {
        problem.regime.require_supported()?;
        let geom = &problem.geometry;
        let disc = StarDiscretization::new(geom, n_cells)?;
        let m = problem.discretization.contour_points;
        let contours = [0, 1, 2].map(|i| {
            disc.edges[i]
                .centers
                .iter()
                .map(|&x| geom.edges[i].profile.contour_points(x, m))
                .collect()
        });
        let vertex_contours = [0, 1, 2].map(|i| geom.edges[i].profile.contour_points(0.0, m));
        Ok(Self {
            problem,
            disc,
            times: problem.time.times(),
            contours,
            vertex_contours,
            gamma0: geom.gamma0_quadrature(problem.discretization.cell_hv),
        })
    }

    pub fn geometry(&self) -> &JunctionGeometry {
        &self.problem.geometry
    }

    pub fn regime(&self) -> &RegimeParams {
        &self.problem.regime
    }

    pub fn dt(&self) -> f64 {
        self.problem.time.dt()
    }

    /// `int_{dUpsilon_i(x_j)} phi_i dl` at cell `j` of edge `i`.
    pub fn contour_integral(&self, i: usize, j: usize, t: f64) -> f64 {
        let x = self.disc.edges[i].centers[j];
        let phi = &self.problem.data.phi[i];
        self.contours[i][j].iter().map(|(p, w)| w * phi(*p, x, t)).sum()
    }

    /// `int_{dUpsilon_i(0)} phi_i dl`.
    pub fn vertex_contour_integral(&self, i: usize, t: f64) -> f64 {
        let phi = &self.problem.data.phi[i];
        self.vertex_contours[i].iter().map(|(p, w)| w * phi(*p, 0.0, t)).sum()
    }

    /// `int_{Gamma_0} g dsigma` with the facet quadrature shared with the cell meshes.
    pub fn gamma0_integral(&self, g: impl Fn([f64; 3]) -> f64) -> f64 {
        self.gamma0.iter().map(|(p, w)| w * g(*p)).sum()
    }

    pub fn gamma0_quadrature(&self) -> &[([f64; 3], f64)] {
        &self.gamma0
    }

    /// `int_{Gamma_0} phi0 dsigma` at time `t`.
    pub fn phi0_integral(&self, t: f64) -> f64 {
        let phi0 = &self.problem.data.phi0;
        self.gamma0_integral(|p| phi0(p, t))
    }

    /// `d0*(t) = [beta0 = 0] int_{Gamma_0} phi0`.
    pub fn d0_star(&self, t: f64) -> f64 {
        let g = self.regime().beta_gate(0, 0.0);
        if g == 0.0 {
            0.0
        } else {
            self.phi0_integral(t)
        }
    }

    /// Fresh coupling-constant table on this context's time grid.
    pub fn empty_constants(&self) -> CouplingConstants {
        CouplingConstants::new(
            self.times.clone(),
            self.regime().regime,
            self.geometry().gamma0_area(),
            self.geometry().node_volume(),
        )
    }
}

/// `F0hat` at the point `x` of edge `i`: `A(x) f(x e_i, t) + [beta_i = 1] int phi_i dl`,
/// with the contour integral by the trapezoid rule on `m` points.
pub fn assemble_rhs_f0hat(
    geom: &JunctionGeometry,
    data: &crate::model::DataFunctions,
    regime: &RegimeParams,
    i: usize,
    x: f64,
    t: f64,
    m: usize,
) -> Result<f64> {
    let edge = &geom.edges[i];
    let sec = crate::model::cross_section_data(&edge.profile, edge.length, x)?;
    let mut v = sec.area * data.f_on_axis(i, x, t);
    if regime.beta_is(i + 1, 1.0) {
        let phi = &data.phi[i];
        v += edge
            .profile
            .contour_points(x, m)
            .iter()
            .map(|(p, w)| w * phi(*p, x, t))
            .sum::<f64>();
    }
    Ok(v)
}

/// Vertex treatment of a marched term, as functions of the time level.
pub(crate) enum MarchVertex<'a> {
    Kirchhoff {
        jumps: &'a dyn Fn(usize) -> [f64; 3],
        absorption: &'a dyn Fn(usize, f64) -> (f64, f64),
        source: &'a dyn Fn(usize) -> f64,
    },
    Dirichlet(&'a dyn Fn(usize) -> [f64; 3]),
}

pub(crate) type LevelSource<'a> = &'a dyn Fn(usize) -> [Vec<f64>; 3];
pub(crate) type LevelReaction<'a> = &'a dyn Fn(usize, usize, usize, f64) -> (f64, f64);

/// Implicit Euler from zero initial data over the context's time grid.
pub(crate) fn march(
    ctx: &GraphContext,
    order: OrderTag,
    source: LevelSource,
    reaction: LevelReaction,
    vertex: MarchVertex,
) -> Result<GraphSolution> {
    let disc = &ctx.disc;
    let n = disc.n_cells();
    let levels = ctx.times.len();
    let dt = ctx.dt();
    let mut values: [Vec<Vec<f64>>; 3] = Default::default();
    let zero: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let v0 = match &vertex {
        MarchVertex::Kirchhoff { jumps, .. } => jumps(0),
        MarchVertex::Dirichlet(v) => v(0),
    };
    let mut vertex_values = vec![v0];
    let mut vertex_fluxes = vec![[0, 1, 2].map(|i| disc.edges[i].vertex_flux(&zero[i], v0[i]))];
    let mut vertex_residuals = vec![0.0];
    let mut newton_iterations = vec![0];
    for (i, v) in values.iter_mut().enumerate() {
        v.push(zero[i].clone());
    }
    let mut prev = zero;
    let mut w = 0.0;
    for l in 1..levels {
        let src = source(l);
        let react = |i: usize, j: usize, s: f64| reaction(l, i, j, s);
        let absorb = |s: f64| match &vertex {
            MarchVertex::Kirchhoff { absorption, .. } => absorption(l, s),
            MarchVertex::Dirichlet(_) => (0.0, 0.0),
        };
        let condition = match &vertex {
            MarchVertex::Kirchhoff { jumps, source, .. } => VertexCondition::Kirchhoff {
                jumps: jumps(l),
                absorption: &absorb,
                source: source(l),
            },
            MarchVertex::Dirichlet(v) => VertexCondition::Dirichlet(v(l)),
        };
        let spec = StepSpec {
            dt,
            prev: &prev,
            source: &src,
            reaction: &react,
            vertex: condition,
            end_values: [0.0; 3],
            step: l,
            time: ctx.times[l],
        };
        let r = implicit_step(disc, &spec, &prev, w)?;
        w = r.vertex_values[0]
            - match &spec.vertex {
                VertexCondition::Kirchhoff { jumps, .. } => jumps[0],
                VertexCondition::Dirichlet(_) => 0.0,
            };
        vertex_values.push(r.vertex_values);
        vertex_fluxes.push(r.fluxes);
        vertex_residuals.push(r.vertex_residual);
        newton_iterations.push(r.iterations);
        for i in 0..3 {
            values[i].push(r.u[i].clone());
        }
        prev = r.u;
    }
    let [v1, v2, v3] = values;
    let mk = |i: usize, values: Vec<Vec<f64>>| EdgeField {
        edge: i + 1,
        grid: disc.edges[i].grid,
        values,
    };
    Ok(GraphSolution {
        order,
        times: ctx.times.clone(),
        fields: [mk(0, v1), mk(1, v2), mk(2, v3)],
        vertex_values,
        vertex_fluxes,
        vertex_residuals,
        newton_iterations,
        end_values: [0.0; 3],
        vertex_areas: [0, 1, 2].map(|i| disc.edges[i].face_area[0]),
    })
}

/// Per-length source `F0hat` at the cell centres for level `l`.
fn f0hat_cells(ctx: &GraphContext, l: usize) -> [Vec<f64>; 3] {
    let t = ctx.times[l];
    let data = &ctx.problem.data;
    [0, 1, 2].map(|i| {
        let e = &ctx.disc.edges[i];
        let gate = ctx.regime().beta_gate(i + 1, 1.0);
        (0..e.n())
            .map(|j| {
                let mut v = e.area[j] * data.f_on_axis(i, e.centers[j], t);
                if gate != 0.0 {
                    v += ctx.contour_integral(i, j, t);
                }
                v
            })
            .collect()
    })
}

/// Solves the limit problem for `omega_0`. Regime A couples the edges through a shared
/// vertex value and the flux balance with absorption `[alpha0 = 0] |Gamma_0| kappa_0`;
/// regimes B and C solve three Dirichlet problems with zero vertex value.
pub fn solve_limit_omega0(ctx: &GraphContext) -> Result<GraphSolution> {
    let nl = &ctx.problem.nonlinearities;
    let regime = ctx.regime();
    let disc = &ctx.disc;
    let blow_up = [1, 2, 3].map(|i| regime.alpha_gate(i, 1.0));
    let reaction = |l: usize, i: usize, j: usize, s: f64| {
        let e = &disc.edges[i];
        let k = nl.k.eval(s);
        let mut v = (e.area[j] * k.value, e.area[j] * k.d1);
        if blow_up[i] != 0.0 {
            let kap = nl.kappa[i].eval(s, e.centers[j], ctx.times[l]);
            v.0 += e.perimeter[j] * kap.value;
            v.1 += e.perimeter[j] * kap.d1;
        }
        v
    };
    let source = |l: usize| f0hat_cells(ctx, l);
    let sol = match regime.regime {
        Regime::A => {
            let g0 = ctx.geometry().gamma0_area();
            let gate = regime.alpha_gate(0, 0.0);
            let absorption = |_: usize, w: f64| {
                if gate == 0.0 {
                    (0.0, 0.0)
                } else {
                    let k = nl.kappa0.eval(w);
                    (g0 * k.value, g0 * k.d1)
                }
            };
            let jumps = |_: usize| [0.0; 3];
            let d0 = |l: usize| ctx.d0_star(ctx.times[l]);
            march(
                ctx,
                OrderTag::ZERO,
                &source,
                &reaction,
                MarchVertex::Kirchhoff {
                    jumps: &jumps,
                    absorption: &absorption,
                    source: &d0,
                },
            )
        }
        Regime::B | Regime::C => {
            let zero = |_: usize| [0.0; 3];
            march(ctx, OrderTag::ZERO, &source, &reaction, MarchVertex::Dirichlet(&zero))
        }
        Regime::Unsupported => unreachable!("checked by GraphContext"),
    };
    sol.map_err(|e| e.in_stage("omega0"))
}

/// `sum_i A_i(0) omega_i'(0,t) - [alpha0 = 0] |Gamma_0| kappa_0(omega(0,t)) + d0*(t)` at
/// time level `level`.
pub fn vertex_residual_a(
    ctx: &GraphContext,
    sol: &GraphSolution,
    constants: &CouplingConstants,
    level: usize,
) -> Result<f64> {
    let regime = ctx.regime();
    if regime.regime != Regime::A {
        return Err(Error::InvalidInput(
            "the Kirchhoff residual is defined for regime A only".into(),
        ));
    }
    let flux: f64 = sol.vertex_fluxes[level].iter().sum();
    let w = sol.vertex_values[level][0];
    let absorb = regime.alpha_gate(0, 0.0)
        * ctx.geometry().gamma0_area()
        * ctx.problem.nonlinearities.kappa0.eval(w).value;
    Ok(flux - absorb + constants.d0_star[level])
}

/// Fills `d0_star` of `constants` on the context's time grid.
pub fn fill_d0_star(ctx: &GraphContext, constants: &mut CouplingConstants) {
    constants.d0_star = ctx.times.iter().map(|&t| ctx.d0_star(t)).collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        classify_regime, AsymptoticOptions, DataFunctions, Discretization, NonlinearitySet,
        TimeGrid,
    };
    use std::sync::Arc;

    pub(crate) fn problem(alpha: [f64; 4], beta: [f64; 4], nl: NonlinearitySet, data: DataFunctions, steps: usize) -> Problem {
        Problem {
            geometry: JunctionGeometry::standard(),
            regime: classify_regime(alpha, beta).unwrap(),
            nonlinearities: nl,
            data,
            time: TimeGrid::new(1.0, steps).unwrap(),
            discretization: Discretization {
                graph_cells: 32,
                ..Discretization::default()
            },
            asymptotics: AsymptoticOptions::default(),
        }
    }

    #[test]
    fn f0hat_examples() {
        let g = JunctionGeometry::square(0.25, [0.5, 0.25, 0.25]).unwrap();
        let mut d = DataFunctions::zero(1.0);
        d.f = Arc::new(|_, _| 1.0);
        d.phi[0] = Arc::new(|_, _, _| 1.0);
        let r = classify_regime([0.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        let v = assemble_rhs_f0hat(&g, &d, &r, 0, 0.3, 0.0, 64).unwrap();
        assert!((v - (0.25 + 2.0)).abs() < 1e-14);
        let r2 = classify_regime([0.0, 1.0, 1.0, 1.0], [0.0, 2.0, 1.0, 1.0]).unwrap();
        let v = assemble_rhs_f0hat(&g, &d, &r2, 0, 0.3, 0.0, 64).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
        assert!(assemble_rhs_f0hat(&g, &d, &r, 0, 1.5, 0.0, 64).is_err());
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let p = problem(
            [0.5, 1.0, 1.0, 1.0],
            [1.0; 4],
            NonlinearitySet::linear(1.0, 1.0, 1.0),
            DataFunctions::zero(1.0),
            10,
        );
        let ctx = GraphContext::new(&p).unwrap();
        let s = solve_limit_omega0(&ctx).unwrap();
        for f in &s.fields {
            assert!(f.values.iter().flatten().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn regime_a_vertex_values_coincide_and_balance_holds() {
        let p = crate::model::ProblemConfig::default_study().build().unwrap();
        let ctx = GraphContext::with_cells(&p, 32).unwrap();
        let s = solve_limit_omega0(&ctx).unwrap();
        let mut c = ctx.empty_constants();
        fill_d0_star(&ctx, &mut c);
        for l in 0..s.levels() {
            let v = s.vertex_values[l];
            assert_eq!(v[0], v[1]);
            assert_eq!(v[0], v[2]);
            if l > 0 {
                assert!(vertex_residual_a(&ctx, &s, &c, l).unwrap().abs() < 1e-11);
            }
        }
    }
}
