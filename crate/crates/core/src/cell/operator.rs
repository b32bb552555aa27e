//! The voxel Laplacian of the inner problems in finite-volume form, its linear
//! solver, and the extraction of far-field constants from a field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pcg, AutoPreconditioner, CsrMatrix};

use super::mesh::{FacetKind, InnerDomainSpec, VoxelMesh};

/// Relative residual of the conjugate-gradient solves.
pub const CG_TOL: f64 = 1e-12;
/// Envelope entries above which the Cholesky preconditioner is replaced by Jacobi.
const MAX_ENVELOPE: usize = 60_000_000;

/// Condition on `Gamma_0`; lateral walls are always homogeneous Neumann and the end
/// caps carry prescribed fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CellBc {
    Neumann,
    /// `d_nu N + kappa N = g` with `kappa = kappa_0'(0) > 0`.
    Robin { kappa: f64 },
}

/// Integrated operator `(L u)_v = sum_faces h (u_v - u_n) + sum_{Gamma_0} r h^2 u_v`,
/// with `r = 2 kappa / (2 + kappa h)` from eliminating the facet value over half a voxel.
pub struct CellOperator {
    pub mesh: VoxelMesh,
    pub bc: CellBc,
    matrix: CsrMatrix,
    solve_matrix: CsrMatrix,
    pc: AutoPreconditioner,
    ground: Option<usize>,
}

impl std::fmt::Debug for CellOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CellOperator")
            .field("voxels", &self.mesh.n_voxels())
            .field("bc", &self.bc)
            .finish()
    }
}

impl CellOperator {
    pub fn new(mesh: VoxelMesh, bc: CellBc) -> Result<Self> {
        if let CellBc::Robin { kappa } = bc {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Robin coefficient kappa_0'(0) must be positive, got {kappa}"
                )));
            }
        }
        let h = mesh.hv();
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
        let r = robin_weight(bc, h);
        if r > 0.0 {
            for f in mesh.facets_of(FacetKind::Gamma0) {
                t.push((f.voxel, f.voxel, r * h * h));
            }
        }
        let matrix = CsrMatrix::from_triplets(n, t);
        let ground = matches!(bc, CellBc::Neumann).then_some(0);
        let solve_matrix = match ground {
            Some(g) => matrix.grounded(g),
            None => matrix.clone(),
        };
        let pc = AutoPreconditioner::new(&solve_matrix, MAX_ENVELOPE)?;
        Ok(Self {
            mesh,
            bc,
            matrix,
            solve_matrix,
            pc,
            ground,
        })
    }

    pub fn from_spec(spec: &InnerDomainSpec, bc: CellBc) -> Result<Self> {
        Self::new(super::mesh::build_inner_mesh(spec)?, bc)
    }

    /// Robin weight per unit facet area (0 for Neumann).
    pub fn robin_weight(&self) -> f64 {
        robin_weight(self.bc, self.mesh.hv())
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.matrix.matvec(u, out)
    }

    /// Solves `L u = b`. For the Neumann operator `b` must be compatible; the solution
    /// is returned with the grounded voxel at 0.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.mesh.n_voxels();
        if b.len() != n {
            return Err(Error::InvalidInput("right-hand side does not match the mesh".into()));
        }
        let mut rhs = b.to_vec();
        if let Some(g) = self.ground {
            rhs[g] = 0.0;
        }
        let mut x = vec![0.0; n];
        pcg(&self.solve_matrix, &rhs, &mut x, &self.pc, CG_TOL, 20 * n + 100)?;
        Ok(x)
    }

    /// Trace of `u` on a `Gamma_0` facet of voxel `v`: the eliminated facet value for
    /// Robin, the voxel value for Neumann.
    pub fn gamma0_trace(&self, u: &[f64], v: usize) -> f64 {
        u[v] * self.trace_factor()
    }

    /// Ratio of the `Gamma_0` facet value to the voxel value.
    pub fn trace_factor(&self) -> f64 {
        match self.bc {
            CellBc::Neumann => 1.0,
            CellBc::Robin { kappa } => 2.0 / (2.0 + kappa * self.mesh.hv()),
        }
    }

    /// `int_{Gamma_0} u` by the facet rule.
    pub fn gamma0_integral(&self, u: &[f64]) -> f64 {
        let a = self.mesh.facet_area();
        self.mesh
            .facets_of(FacetKind::Gamma0)
            .map(|f| self.gamma0_trace(u, f.voxel) * a)
            .sum()
    }

    /// Outward flux absorbed through `Gamma_0` by the Robin condition.
    pub fn robin_absorption(&self, u: &[f64]) -> f64 {
        let w = self.robin_weight() * self.mesh.facet_area();
        self.mesh
            .facets_of(FacetKind::Gamma0)
            .map(|f| w * u[f.voxel])
            .sum()
    }

    /// Right-hand side of prescribed outward flux densities on the end caps.
    pub fn cap_rhs(&self, densities: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.mesh.n_voxels()];
        let a = self.mesh.facet_area();
        for f in &self.mesh.facets {
            if let FacetKind::Cap(o) = f.kind {
                b[f.voxel] += densities[o] * a;
            }
        }
        b
    }
}

fn robin_weight(bc: CellBc, h: f64) -> f64 {
    match bc {
        CellBc::Neumann => 0.0,
        CellBc::Robin { kappa } => 2.0 * kappa / (2.0 + kappa * h),
    }
}

/// A voxel field on the truncated inner domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField {
    pub spec: InnerDomainSpec,
    pub values: Vec<f64>,
    pub bc: CellBc,
    /// Prescribed outward flux density on each end cap.
    pub cap_flux: Vec<f64>,
}

/// Far-field data of one outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutletFarField {
    /// 1-based outlet index.
    pub outlet: usize,
    /// Least-squares slope of the slice averages over the far window.
    pub linear_coefficient: f64,
    /// Slope subtracted before taking the constant.
    pub prescribed_slope: f64,
    pub constant: f64,
    /// Exponential rate of the transverse deviation near the port; `None` when the
    /// deviation is below round-off from the start.
    pub decay_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    pub outlets: Vec<OutletFarField>,
}

impl FarFieldReport {
    pub fn constant(&self, o: usize) -> f64 {
        self.outlets[o].constant
    }

    /// Shifts every constant by `-c`.
    pub fn shift(&mut self, c: f64) {
        for o in &mut self.outlets {
            o.constant -= c;
        }
    }
}

/// Fraction of the outlet slices used for the far-field constant.
const WINDOW: f64 = 0.2;

fn slice_average(mesh: &VoxelMesh, u: &[f64], o: usize, k: usize) -> f64 {
    let r = mesh.slice(o, k);
    let n = r.len() as f64;
    u[r].iter().sum::<f64>() / n
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Extracts the far-field behaviour of `u` in every outlet. The constant is the mean
/// of `avg(xi) - prescribed * xi` over the last 20% of the slices; the decay rate is
/// fitted to the logarithm of the transverse RMS deviation from the port onwards,
/// while it stays above round-off.
pub fn far_field(mesh: &VoxelMesh, u: &[f64], prescribed: &[f64]) -> FarFieldReport {
    let ns = mesh.n_slices();
    let first = ((1.0 - WINDOW) * ns as f64).floor() as usize;
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let outlets = (0..mesh.n_outlets())
        .map(|o| {
            let xs: Vec<f64> = (first..ns).map(|k| mesh.slice_coordinate(k)).collect();
            let avg: Vec<f64> = (first..ns).map(|k| slice_average(mesh, u, o, k)).collect();
            let (slope, _) = least_squares(&xs, &avg);
            let constant = xs
                .iter()
                .zip(&avg)
                .map(|(x, a)| a - prescribed[o] * x)
                .sum::<f64>()
                / xs.len() as f64;
            let mut lx = Vec::new();
            let mut ly = Vec::new();
            for k in 1..ns {
                let m = slice_average(mesh, u, o, k);
                let r = mesh.slice(o, k);
                let n = r.len() as f64;
                let rms = (u[r].iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
                if rms <= floor {
                    break;
                }
                lx.push(mesh.slice_coordinate(k));
                ly.push(rms.ln());
            }
            let decay_rate = (lx.len() >= 3).then(|| -least_squares(&lx, &ly).0);
            OutletFarField {
                outlet: o + 1,
                linear_coefficient: slope,
                prescribed_slope: prescribed[o],
                constant,
                decay_rate,
            }
        })
        .collect();
    FarFieldReport { outlets }
}

/// Special solution of the homogeneous Neumann problem growing like `-xi_1/A_1` in
/// outlet 1 and `xi_j/A_j` in outlet `j` (1-based, `j >= 2`). Pinned to zero mean over
/// the node box, then shifted so the outlet-1 constant vanishes.
pub fn special_neumann(op: &CellOperator, j: usize) -> Result<(CellField, FarFieldReport)> {
    let no = op.mesh.n_outlets();
    if op.bc != CellBc::Neumann {
        return Err(Error::InvalidInput("special Neumann solutions need the Neumann operator".into()));
    }
    if !(2..=no).contains(&j) {
        return Err(Error::InvalidInput(format!("special solution index {j} outside 2..={no}")));
    }
    let outlets = &op.mesh.spec.outlets;
    let mut dens = vec![0.0; no];
    dens[0] = -1.0 / outlets[0].area();
    dens[j - 1] = 1.0 / outlets[j - 1].area();
    let b = op.cap_rhs(&dens);
    let total: f64 = b.iter().sum();
    let scale: f64 = b.iter().map(|v| v.abs()).sum();
    if total.abs() > 1e-12 * scale {
        return Err(Error::Solvability {
            residual: total,
            tolerance: 1e-12 * scale,
        });
    }
    let mut u = op.solve(&b)?;
    let node = op.mesh.node_voxels();
    let mean = u[node.clone()].iter().sum::<f64>() / node.len() as f64;
    u.iter_mut().for_each(|v| *v -= mean);
    let mut report = far_field(&op.mesh, &u, &dens);
    let c1 = report.constant(0);
    u.iter_mut().for_each(|v| *v -= c1);
    report.shift(c1);
    Ok((
        CellField {
            spec: op.mesh.spec.clone(),
            values: u,
            bc: op.bc,
            cap_flux: dens,
        },
        report,
    ))
}

/// Special solution of the Robin problem growing like `xi_i/A_i` in outlet `i`
/// (1-based) and bounded in the others.
pub fn special_robin(op: &CellOperator, i: usize) -> Result<(CellField, FarFieldReport)> {
    let no = op.mesh.n_outlets();
    if !matches!(op.bc, CellBc::Robin { .. }) {
        return Err(Error::InvalidInput("special Robin solutions need the Robin operator".into()));
    }
    if !(1..=no).contains(&i) {
        return Err(Error::InvalidInput(format!("special solution index {i} outside 1..={no}")));
    }
    let mut dens = vec![0.0; no];
    dens[i - 1] = 1.0 / op.mesh.spec.outlets[i - 1].area();
    let u = op.solve(&op.cap_rhs(&dens))?;
    let report = far_field(&op.mesh, &u, &dens);
    Ok((
        CellField {
            spec: op.mesh.spec.clone(),
            values: u,
            bc: op.bc,
            cap_flux: dens,
        },
        report,
    ))
}

/// [`special_neumann`] on a freshly built mesh.
pub fn solve_special_neumann(spec: &InnerDomainSpec, j: usize) -> Result<(CellField, FarFieldReport)> {
    special_neumann(&CellOperator::from_spec(spec, CellBc::Neumann)?, j)
}

/// [`special_robin`] on a freshly built mesh.
pub fn solve_special_robin(
    spec: &InnerDomainSpec,
    kappa0_prime: f64,
    i: usize,
) -> Result<(CellField, FarFieldReport)> {
    special_robin(
        &CellOperator::from_spec(spec, CellBc::Robin { kappa: kappa0_prime })?,
        i,
    )
}
