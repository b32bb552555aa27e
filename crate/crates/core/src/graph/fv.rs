//! Cell-centred finite volumes on the three edges and the implicit Euler / Newton
//! stepper with a shared vertex unknown.
//!
//! Each edge carries `n` cells on `[0, l_i]`. Interior faces use the harmonic mean of
//! the adjacent cell areas. The face at `x = 0` uses a three-point one-sided
//! derivative through the vertex value and the first two cell centres; the face at
//! `x = l_i` does the same with the prescribed end value.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::model::{EdgeGrid, JunctionGeometry};

/// Per-edge geometry of the finite-volume scheme.
#[derive(Debug, Clone)]
pub struct EdgeOperator {
    pub grid: EdgeGrid,
    pub h: f64,
    pub centers: Vec<f64>,
    /// Cross-section area at cell centres.
    pub area: Vec<f64>,
    /// Cross-section perimeter at cell centres.
    pub perimeter: Vec<f64>,
    /// Face coefficients, `n + 1` entries; the first and last are `A(0)`, `A(l)`.
    pub face_area: Vec<f64>,
}

impl EdgeOperator {
    pub fn new(geom: &JunctionGeometry, edge: usize, n_cells: usize) -> Result<Self> {
        let e = &geom.edges[edge];
        let grid = EdgeGrid::new(n_cells, 0.0, e.length)?;
        let centers = grid.centers();
        let area: Vec<f64> = centers.iter().map(|&x| e.profile.area(x)).collect();
        let perimeter = centers.iter().map(|&x| e.profile.perimeter(x)).collect();
        let mut face_area = vec![0.0; n_cells + 1];
        face_area[0] = e.profile.area(0.0);
        face_area[n_cells] = e.profile.area(e.length);
        for j in 1..n_cells {
            let (a, b) = (area[j - 1], area[j]);
            face_area[j] = 2.0 * a * b / (a + b);
        }
        Ok(Self {
            h: grid.spacing(),
            grid,
            centers,
            area,
            perimeter,
            face_area,
        })
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn length(&self) -> f64 {
        self.grid.end
    }

    /// Flux `A(0) * d/dx u (0)` from the vertex value `w` and the first two cells.
    pub fn vertex_flux(&self, u: &[f64], w: f64) -> f64 {
        self.face_area[0] * (-8.0 * w + 9.0 * u[0] - u[1]) / (3.0 * self.h)
    }

    /// Flux `A(l) * d/dx u (l)` from the end value `b` and the last two cells.
    pub fn end_flux(&self, u: &[f64], b: f64) -> f64 {
        let n = self.n();
        self.face_area[n] * (8.0 * b - 9.0 * u[n - 1] + u[n - 2]) / (3.0 * self.h)
    }

    /// Residual rows (cell integrated) of the implicit Euler step without the source:
    /// `h A (u - prev)/dt - (F_{j+1/2} - F_{j-1/2}) + h r_j(u_j)`.
    /// `dt = None` drops the time derivative (steady operator).
    pub fn operator_rows(
        &self,
        u: &[f64],
        prev: Option<(&[f64], f64)>,
        w: f64,
        end: f64,
        reaction: &dyn Fn(usize, f64) -> (f64, f64),
        out: &mut [f64],
    ) {
        let n = self.n();
        let h = self.h;
        for j in 0..n {
            let mut r = h * reaction(j, u[j]).0;
            if let Some((p, dt)) = prev {
                r += h * self.area[j] * (u[j] - p[j]) / dt;
            }
            out[j] = r;
        }
        out[0] += self.vertex_flux(u, w);
        out[n - 1] -= self.end_flux(u, end);
        for j in 1..n {
            let f = self.face_area[j] * (u[j] - u[j - 1]) / h;
            out[j - 1] -= f;
            out[j] += f;
        }
    }

    /// Jacobian of [`Self::operator_rows`] with respect to the cell values, as
    /// tridiagonal bands, plus the derivative of row 0 with respect to `w`.
    fn jacobian(
        &self,
        u: &[f64],
        dt: Option<f64>,
        reaction: &dyn Fn(usize, f64) -> (f64, f64),
        lower: &mut [f64],
        diag: &mut [f64],
        upper: &mut [f64],
    ) -> f64 {
        let n = self.n();
        let h = self.h;
        for j in 0..n {
            let mut d = h * reaction(j, u[j]).1;
            if let Some(dt) = dt {
                d += h * self.area[j] / dt;
            }
            diag[j] = d;
            lower[j] = 0.0;
            upper[j] = 0.0;
        }
        let a0 = self.face_area[0] / (3.0 * h);
        diag[0] += 9.0 * a0;
        upper[0] -= a0;
        let al = self.face_area[n] / (3.0 * h);
        diag[n - 1] += 9.0 * al;
        lower[n - 1] -= al;
        for j in 1..n {
            let c = self.face_area[j] / h;
            diag[j - 1] += c;
            upper[j - 1] -= c;
            lower[j] -= c;
            diag[j] += c;
        }
        -8.0 * a0
    }
}

/// The three edge operators of the star graph.
#[derive(Debug, Clone)]
pub struct StarDiscretization {
    pub edges: [EdgeOperator; 3],
}

impl StarDiscretization {
    /// `n_cells` cells on every edge.
    pub fn new(geom: &JunctionGeometry, n_cells: usize) -> Result<Self> {
        Ok(Self {
            edges: [
                EdgeOperator::new(geom, 0, n_cells)?,
                EdgeOperator::new(geom, 1, n_cells)?,
                EdgeOperator::new(geom, 2, n_cells)?,
            ],
        })
    }

    pub fn n_cells(&self) -> usize {
        self.edges[0].n()
    }
}

/// Per-length reaction `(value, d/du)` at cell `j` of edge `i`.
pub type Reaction<'a> = &'a dyn Fn(usize, usize, f64) -> (f64, f64);

/// Condition at the vertex for one step.
pub enum VertexCondition<'a> {
    /// Shared unknown `w`; edge `i` sees the vertex value `w + jumps[i]`. The balance
    /// row is `sum_i A_i(0) u_i'(0) - absorption(w) + source = 0`, where
    /// `absorption` returns `(value, derivative)`.
    Kirchhoff {
        jumps: [f64; 3],
        absorption: &'a dyn Fn(f64) -> (f64, f64),
        source: f64,
    },
    /// Independent Dirichlet values per edge.
    Dirichlet([f64; 3]),
}

/// One implicit Euler step: `A (u - prev)/dt - (A u')' + r(u) = source` per edge.
pub struct StepSpec<'a> {
    pub dt: f64,
    pub prev: &'a [Vec<f64>; 3],
    /// Per-length source at the cell centres.
    pub source: &'a [Vec<f64>; 3],
    pub reaction: Reaction<'a>,
    pub vertex: VertexCondition<'a>,
    pub end_values: [f64; 3],
    /// Step index and time, for diagnostics.
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub u: [Vec<f64>; 3],
    /// Vertex value seen by each edge.
    pub vertex_values: [f64; 3],
    /// `A_i(0) u_i'(0)`.
    pub fluxes: [f64; 3],
    pub iterations: usize,
    /// Final max-norm of the residual (cell rows and balance row).
    pub residual: f64,
    /// Balance-row residual (zero for Dirichlet steps).
    pub vertex_residual: f64,
}

/// Absolute Newton tolerance on the residual rows.
pub const NEWTON_TOL: f64 = 1e-12;
/// Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 50;

struct Residual {
    rows: [Vec<f64>; 3],
    balance: f64,
    max: f64,
}

fn vertex_values(spec: &StepSpec, w: f64) -> [f64; 3] {
    match &spec.vertex {
        VertexCondition::Kirchhoff { jumps, .. } => [w + jumps[0], w + jumps[1], w + jumps[2]],
        VertexCondition::Dirichlet(v) => *v,
    }
}

fn residual(disc: &StarDiscretization, spec: &StepSpec, u: &[Vec<f64>; 3], w: f64) -> Residual {
    let vv = vertex_values(spec, w);
    let mut rows: [Vec<f64>; 3] = Default::default();
    let mut max = 0.0f64;
    for (i, e) in disc.edges.iter().enumerate() {
        let mut r = vec![0.0; e.n()];
        let react = |j: usize, s: f64| (spec.reaction)(i, j, s);
        e.operator_rows(
            &u[i],
            Some((&spec.prev[i], spec.dt)),
            vv[i],
            spec.end_values[i],
            &react,
            &mut r,
        );
        for (rj, sj) in r.iter_mut().zip(&spec.source[i]) {
            *rj -= e.h * sj;
            max = max.max(rj.abs());
        }
        rows[i] = r;
    }
    let balance = match &spec.vertex {
        VertexCondition::Kirchhoff {
            absorption, source, ..
        } => {
            let flux: f64 = (0..3).map(|i| disc.edges[i].vertex_flux(&u[i], vv[i])).sum();
            flux - absorption(w).0 + source
        }
        VertexCondition::Dirichlet(_) => 0.0,
    };
    max = max.max(balance.abs());
    Residual { rows, balance, max }
}

/// Performs one implicit Euler step by Newton's method, starting from `guess`.
pub fn implicit_step(
    disc: &StarDiscretization,
    spec: &StepSpec,
    guess: &[Vec<f64>; 3],
    guess_w: f64,
) -> Result<StepResult> {
    let mut u = guess.clone();
    let mut w = guess_w;
    let kirchhoff = matches!(spec.vertex, VertexCondition::Kirchhoff { .. });
    let mut res = residual(disc, spec, &u, w);
    let mut iterations = 0;
    let mut best = res.max;
    let mut stalled = 0;
    while res.max > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER || !res.max.is_finite() {
            return Err(Error::NewtonFailure {
                step: spec.step,
                time: spec.time,
                iterations,
                residual: res.max,
            });
        }
        iterations += 1;
        // Per edge: T_i du_i + c_i dw = -r_i, with c_i nonzero in row 0 only.
        let mut a: [Vec<f64>; 3] = Default::default();
        let mut z: [Vec<f64>; 3] = Default::default();
        let mut vertex_row = [[0.0; 2]; 3];
        let mut dw_coef = 0.0;
        for (i, e) in disc.edges.iter().enumerate() {
            let n = e.n();
            let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            let react = |j: usize, s: f64| (spec.reaction)(i, j, s);
            let c0 = e.jacobian(&u[i], Some(spec.dt), &react, &mut lo, &mut di, &mut up);
            let mut rhs: Vec<f64> = res.rows[i].iter().map(|r| -r).collect();
            solve_tridiagonal(&lo, &di, &up, &mut rhs)?;
            a[i] = rhs;
            if kirchhoff {
                let mut col = vec![0.0; n];
                col[0] = c0;
                solve_tridiagonal(&lo, &di, &up, &mut col)?;
                z[i] = col;
                let k = e.face_area[0] / (3.0 * e.h);
                vertex_row[i] = [9.0 * k, -k];
                dw_coef += -8.0 * k;
            }
        }
        let mut dw = 0.0;
        if let VertexCondition::Kirchhoff { absorption, .. } = &spec.vertex {
            dw_coef -= absorption(w).1;
            let mut num = -res.balance;
            let mut den = dw_coef;
            for i in 0..3 {
                num -= vertex_row[i][0] * a[i][0] + vertex_row[i][1] * a[i][1];
                den -= vertex_row[i][0] * z[i][0] + vertex_row[i][1] * z[i][1];
            }
            dw = num / den;
            w += dw;
        }
        let mut step_max = dw.abs();
        let mut scale = w.abs();
        for i in 0..3 {
            for j in 0..u[i].len() {
                let d = if kirchhoff { a[i][j] - dw * z[i][j] } else { a[i][j] };
                u[i][j] += d;
                step_max = step_max.max(d.abs());
                scale = scale.max(u[i][j].abs());
            }
        }
        res = residual(disc, spec, &u, w);
        // Accept a round-off floor: the update no longer changes the iterate and
        // the residual stopped decreasing.
        if res.max < best * 0.5 {
            best = res.max;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if res.max > NEWTON_TOL && step_max <= 1e-15 * (1.0 + scale) && stalled >= 2 {
            break;
        }
    }
    let vv = vertex_values(spec, w);
    let fluxes = [0, 1, 2].map(|i| disc.edges[i].vertex_flux(&u[i], vv[i]));
    Ok(StepResult {
        u,
        vertex_values: vv,
        fluxes,
        iterations,
        residual: res.max,
        vertex_residual: res.balance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(n: usize) -> StarDiscretization {
        StarDiscretization::new(&JunctionGeometry::standard(), n).unwrap()
    }

    #[test]
    fn boundary_fluxes_exact_for_quadratics() {
        let d = disc(10);
        let e = &d.edges[1];
        let q = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let u: Vec<f64> = e.centers.iter().map(|&x| q(x)).collect();
        let a = e.face_area[0];
        assert!((e.vertex_flux(&u, q(0.0)) - a * 2.0).abs() < 1e-12);
        assert!((e.end_flux(&u, q(1.0)) - a * (2.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn steady_rows_vanish_for_quadratic_with_matching_source() {
        // -(A u')' = -2 A c for u = c x^2 with constant A.
        let d = disc(8);
        let e = &d.edges[0];
        let u: Vec<f64> = e.centers.iter().map(|&x| 0.7 * x * x).collect();
        let mut r = vec![0.0; e.n()];
        e.operator_rows(&u, None, 0.0, 0.7, &|_, _| (0.0, 0.0), &mut r);
        for rj in r {
            assert!((rj - e.h * (-2.0 * 0.7 * e.area[0])).abs() < 1e-13);
        }
    }

    #[test]
    fn newton_solves_nonlinear_kirchhoff_step() {
        let d = disc(16);
        let zero: [Vec<f64>; 3] = [vec![0.0; 16], vec![0.0; 16], vec![0.0; 16]];
        let src: [Vec<f64>; 3] = [vec![1.0; 16], vec![2.0; 16], vec![0.5; 16]];
        let react = |i: usize, j: usize, s: f64| {
            let a = d.edges[i].area[j];
            (a * (s + s * s * s), a * (1.0 + 3.0 * s * s))
        };
        let absorb = |w: f64| (0.3 * w.sinh(), 0.3 * w.cosh());
        let spec = StepSpec {
            dt: 0.1,
            prev: &zero,
            source: &src,
            reaction: &react,
            vertex: VertexCondition::Kirchhoff {
                jumps: [0.0, 0.1, -0.2],
                absorption: &absorb,
                source: 0.4,
            },
            end_values: [0.0; 3],
            step: 1,
            time: 0.1,
        };
        let r = implicit_step(&d, &spec, &zero, 0.0).unwrap();
        assert!(r.residual <= NEWTON_TOL);
        assert!(r.iterations < 10);
        assert!((r.vertex_values[1] - r.vertex_values[0] - 0.1).abs() < 1e-15);
        let bal: f64 = r.fluxes.iter().sum::<f64>() - absorb(r.vertex_values[0]).0 + 0.4;
        assert!(bal.abs() < 1e-11);
    }
}
