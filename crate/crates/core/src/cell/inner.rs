//! Inhomogeneous inner problems: the matching cutoffs, the right-hand sides built from
//! the edge slopes and the node data, the solve with its compatibility check, and
//! the transmission constants by the far-field and the Green routes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::OrderTag;
use crate::model::{Problem, Regime};

use super::mesh::{FacetKind, VoxelMesh};
use super::operator::{
    far_field, special_neumann, special_robin, CellBc, CellField, CellOperator, FarFieldReport,
};

/// Relative tolerance of the Neumann compatibility check.
pub const SOLVABILITY_TOL: f64 = 1e-8;

/// Matching cutoff of the inner problems: 0 for `xi <= 1 + ell0`, 1 for
/// `xi >= 2 + ell0`, quintic smoothstep in between (two continuous derivatives).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerCutoff {
    pub ell0: f64,
}

impl InnerCutoff {
    fn tau(&self, xi: f64) -> f64 {
        (xi - 1.0 - self.ell0).clamp(0.0, 1.0)
    }

    pub fn value(&self, xi: f64) -> f64 {
        let t = self.tau(xi);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }

    pub fn d1(&self, xi: f64) -> f64 {
        let t = self.tau(xi);
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }

    pub fn d2(&self, xi: f64) -> f64 {
        let t = self.tau(xi);
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    }

    /// `(xi chi)'' = xi chi'' + 2 chi'`, the source created by cutting off a unit
    /// linear growth.
    pub fn growth_laplacian(&self, xi: f64) -> f64 {
        xi * self.d2(xi) + 2.0 * self.d1(xi)
    }

    /// Discrete counterpart on voxels of side `h`: the second difference of `xi chi`.
    /// Summed along an outlet it telescopes to exactly 1.
    pub fn discrete_growth_laplacian(&self, xi: f64, h: f64) -> f64 {
        let g = |x: f64| x * self.value(x);
        (g(xi + h) - 2.0 * g(xi) + g(xi - h)) / (h * h)
    }
}

/// Right-hand side of an inner problem as densities: `F` per voxel and `B` per
/// boundary facet (indexed like `mesh.facets`; end caps must carry 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerRhs {
    pub volume: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl InnerRhs {
    pub fn zeros(mesh: &VoxelMesh) -> Self {
        Self {
            volume: vec![0.0; mesh.n_voxels()],
            boundary: vec![0.0; mesh.facets.len()],
        }
    }

    /// `F = sum_o slope_o (xi_o chi)''` (discrete) with `B = g` on `Gamma_0` and 0 on
    /// the lateral walls.
    pub fn from_slopes(mesh: &VoxelMesh, slopes: &[f64], gamma0: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        if slopes.len() != mesh.n_outlets() {
            return Err(Error::InvalidInput(format!(
                "{} slopes given for {} outlets",
                slopes.len(),
                mesh.n_outlets()
            )));
        }
        let cut = InnerCutoff { ell0: mesh.spec.ell0 };
        let h = mesh.hv();
        let mut rhs = Self::zeros(mesh);
        for (v, r) in mesh.region.iter().enumerate() {
            if let super::mesh::Region::Outlet(o) = r {
                if slopes[*o] != 0.0 {
                    let xi = mesh.outlet_coordinate(*o, mesh.centers[v]);
                    rhs.volume[v] = slopes[*o] * cut.discrete_growth_laplacian(xi, h);
                }
            }
        }
        for (k, f) in mesh.facets.iter().enumerate() {
            if f.kind == FacetKind::Gamma0 {
                rhs.boundary[k] = gamma0(f.center);
            }
        }
        Ok(rhs)
    }

    pub fn add_scaled(&mut self, other: &InnerRhs, c: f64) {
        for (a, b) in self.volume.iter_mut().zip(&other.volume) {
            *a += c * b;
        }
        for (a, b) in self.boundary.iter_mut().zip(&other.boundary) {
            *a += c * b;
        }
    }

    fn check(&self, mesh: &VoxelMesh) -> Result<()> {
        if self.volume.len() != mesh.n_voxels() || self.boundary.len() != mesh.facets.len() {
            return Err(Error::InvalidInput("right-hand side does not match the mesh".into()));
        }
        if mesh
            .facets
            .iter()
            .zip(&self.boundary)
            .any(|(f, b)| matches!(f.kind, FacetKind::Cap(_)) && *b != 0.0)
        {
            return Err(Error::InvalidInput(
                "inner right-hand sides must vanish on the truncation caps".into(),
            ));
        }
        Ok(())
    }

    /// Integrated load vector of the finite-volume system.
    pub fn load(&self, op: &CellOperator) -> Result<Vec<f64>> {
        let mesh = &op.mesh;
        self.check(mesh)?;
        let vol = mesh.voxel_volume();
        let mut b: Vec<f64> = self.volume.iter().map(|f| f * vol).collect();
        let a = mesh.facet_area();
        for (f, g) in mesh.facets.iter().zip(&self.boundary) {
            if *g != 0.0 {
                let w = if f.kind == FacetKind::Gamma0 {
                    op.trace_factor()
                } else {
                    1.0
                };
                b[f.voxel] += w * g * a;
            }
        }
        Ok(b)
    }

    /// `int F + sum int B` by the voxel and facet rules.
    pub fn total(&self, mesh: &VoxelMesh) -> f64 {
        self.volume.iter().sum::<f64>() * mesh.voxel_volume()
            + self.boundary.iter().sum::<f64>() * mesh.facet_area()
    }
}

/// The special solutions matching an operator: `frak N_2.. frak N_m` (Neumann) or
/// `frak N_1.. frak N_m` (Robin), `m` the number of outlets.
#[derive(Debug, Clone)]
pub struct SpecialSolutions {
    pub fields: Vec<CellField>,
    pub reports: Vec<FarFieldReport>,
    /// 1-based outlet index of the first field.
    pub first: usize,
}

impl SpecialSolutions {
    pub fn compute(op: &CellOperator) -> Result<Self> {
        let no = op.mesh.n_outlets();
        let (first, solve): (usize, fn(&CellOperator, usize) -> Result<(CellField, FarFieldReport)>) =
            match op.bc {
                CellBc::Neumann => (2, special_neumann),
                CellBc::Robin { .. } => (1, special_robin),
            };
        let mut fields = Vec::new();
        let mut reports = Vec::new();
        for i in first..=no {
            let (f, r) = solve(op, i)?;
            fields.push(f);
            reports.push(r);
        }
        Ok(Self {
            fields,
            reports,
            first,
        })
    }
}

/// `delta^{(i)} = int frak N_i F + sum_j int_{Gamma_j} frak N_i B` by the voxel midpoint
/// rule, for every outlet; entries without a special solution (outlet 1 of the
/// Neumann case) are 0.
pub fn compute_delta_green(
    op: &CellOperator,
    specials: &SpecialSolutions,
    rhs: &InnerRhs,
) -> Result<Vec<f64>> {
    let mesh = &op.mesh;
    rhs.check(mesh)?;
    let mut delta = vec![0.0; mesh.n_outlets()];
    for (k, field) in specials.fields.iter().enumerate() {
        if field.spec != mesh.spec || field.values.len() != mesh.n_voxels() || field.bc != op.bc {
            return Err(Error::InvalidInput(
                "special solution was computed on a different mesh or condition".into(),
            ));
        }
        let n = &field.values;
        let vol: f64 = n.iter().zip(&rhs.volume).map(|(a, b)| a * b).sum::<f64>() * mesh.voxel_volume();
        let surf: f64 = mesh
            .facets
            .iter()
            .zip(&rhs.boundary)
            .filter(|(_, g)| **g != 0.0)
            .map(|(f, g)| {
                let trace = if f.kind == FacetKind::Gamma0 {
                    op.gamma0_trace(n, f.voxel)
                } else {
                    n[f.voxel]
                };
                trace * g
            })
            .sum::<f64>()
            * mesh.facet_area();
        delta[specials.first - 1 + k] = vol + surf;
    }
    Ok(delta)
}

/// Result of an inhomogeneous inner solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerSolution {
    /// The remainder field, normalised to vanish at infinity in outlet 1 (Neumann) or
    /// unique (Robin).
    pub field: CellField,
    pub far_field: FarFieldReport,
    /// Transmission constants from the far field: relative to outlet 1 for Neumann,
    /// absolute for Robin.
    pub delta: Vec<f64>,
    /// The same constants by the Green formula, when special solutions were supplied.
    pub delta_green: Option<Vec<f64>>,
    /// `int_{Gamma_0}` of the remainder field.
    pub gamma0_integral: f64,
    /// `int F + sum int B` (Neumann compatibility residual; informative for Robin).
    pub solvability_residual: f64,
}

/// Solves `-Delta N = F`, `d_nu N (+ kappa N) = B` with homogeneous end caps.
/// Neumann problems are checked for compatibility first.
pub fn solve_inner(
    op: &CellOperator,
    rhs: &InnerRhs,
    specials: Option<&SpecialSolutions>,
) -> Result<InnerSolution> {
    let mesh = &op.mesh;
    let b = rhs.load(op)?;
    let residual: f64 = b.iter().sum();
    let scale: f64 = b.iter().map(|v| v.abs()).sum();
    if op.bc == CellBc::Neumann && residual.abs() > SOLVABILITY_TOL * scale {
        return Err(Error::Solvability {
            residual,
            tolerance: SOLVABILITY_TOL * scale,
        });
    }
    let no = mesh.n_outlets();
    let mut u = op.solve(&b)?;
    let mut report = far_field(mesh, &u, &vec![0.0; no]);
    if op.bc == CellBc::Neumann {
        let c1 = report.constant(0);
        u.iter_mut().for_each(|v| *v -= c1);
        report.shift(c1);
    }
    let delta: Vec<f64> = (0..no).map(|o| report.constant(o)).collect();
    let delta_green = specials.map(|s| compute_delta_green(op, s, rhs)).transpose()?;
    Ok(InnerSolution {
        gamma0_integral: op.gamma0_integral(&u),
        field: CellField {
            spec: mesh.spec.clone(),
            values: u,
            bc: op.bc,
            cap_flux: vec![0.0; no],
        },
        far_field: report,
        delta,
        delta_green,
        solvability_residual: residual,
    })
}

/// Condition on `Gamma_0` of the inner problems of a problem's regime.
pub fn inner_bc(problem: &Problem) -> Result<CellBc> {
    match problem.regime.regime {
        Regime::A | Regime::B => Ok(CellBc::Neumann),
        Regime::C => Ok(CellBc::Robin {
            kappa: problem.nonlinearities.kappa0.eval(0.0).d1,
        }),
        Regime::Unsupported => Err(Error::Unsupported("no inner problems outside A, B, C".into())),
    }
}

/// Graph quantities entering the inner data at one time level.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InnerInputs {
    /// `d_x omega^{(i)}(0, t)` of the order below (`omega_0` for order 1,
    /// `omega_{-a0}` for order `1 - a0`).
    pub slopes: [f64; 3],
    /// `omega_0(0, t)` (regime A).
    pub omega0_vertex: f64,
    /// `V_{-a0}(t)` (regime B).
    pub v_minus_a0: f64,
    /// `V_{-2 a0}(t)` (regime B, order `1 - a0`).
    pub v_minus_2a0: f64,
}

/// Assembles `F~_n`, `B~_n` for order `1` (regimes A, B, C) or `1 - a0` (regime B).
pub fn inner_rhs_for(
    problem: &Problem,
    mesh: &VoxelMesh,
    order: OrderTag,
    inputs: &InnerInputs,
    t: f64,
) -> Result<InnerRhs> {
    if mesh.n_outlets() != 3 {
        return Err(Error::InvalidInput("problem data need the three-outlet layout".into()));
    }
    let reg = &problem.regime;
    let nl = &problem.nonlinearities;
    let phi0 = problem.data.phi0.clone();
    let (constant, phi_gate) = match (reg.regime, order) {
        (Regime::A, OrderTag::ONE) => (
            -reg.alpha_gate(0, 0.0) * nl.kappa0.eval(inputs.omega0_vertex).value,
            reg.beta_gate(0, 0.0),
        ),
        (Regime::B, OrderTag::ONE) => (
            -nl.kappa0.eval(0.0).d1 * inputs.v_minus_a0,
            reg.beta_gate(0, 0.0),
        ),
        (Regime::B, OrderTag::ONE_MINUS_A0) => {
            let k = nl.kappa0.eval(0.0);
            (
                -k.d1 * inputs.v_minus_2a0 - 0.5 * k.d2 * inputs.v_minus_a0 * inputs.v_minus_a0,
                reg.beta_gate(0, -reg.alpha[0]),
            )
        }
        (Regime::C, OrderTag::ONE) => (0.0, reg.beta_gate(0, 0.0)),
        (r, o) => {
            return Err(Error::InvalidInput(format!(
                "no inner problem of order {o} in regime {r:?}"
            )))
        }
    };
    InnerRhs::from_slopes(mesh, &inputs.slopes, |p| {
        constant + if phi_gate != 0.0 { phi_gate * phi0(p, t) } else { 0.0 }
    })
}
