//! Time series of an inner term `N_n(xi, t)` and its evaluation at arbitrary points of
//! the stretched domain.
//!
//! The stored remainder `N~` comes from the truncated cell solves; the matched growth
//! `sum_i chi_i(xi_i) xi_i s_i(t)` and an additive constant are added analytically.
//! Beyond the truncation radius the remainder is replaced by its far-field constant.

use std::collections::HashMap;

use crate::cell::{InnerCutoff, InnerDomainSpec, InnerSolution, VoxelMesh};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone)]
pub struct InnerSeries {
    pub spec: InnerDomainSpec,
    lookup: HashMap<[i64; 3], usize>,
    /// Growth coefficients `s_i(t)` (the edge slopes of the order below).
    pub slopes: Vec<[f64; 3]>,
    /// Additive constant per level (`omega_1^{(1)}(0, t)` in regime A, 0 otherwise).
    pub offset: Vec<f64>,
    /// Remainder `N~` at the cell voxels per level.
    pub remainder: Vec<Vec<f64>>,
    /// Far-field constants of `N~` per level and outlet.
    pub far_constants: Vec<[f64; 3]>,
    /// `int_{Gamma_0} N~ dsigma` per level.
    pub gamma0_integral: Vec<f64>,
}

impl InnerSeries {
    /// Empty series on a three-outlet cell mesh with outlets along the positive axes.
    pub fn new(mesh: &VoxelMesh) -> Result<Self> {
        let spec = mesh.spec.clone();
        if spec.outlets.len() != 3
            || spec
                .outlets
                .iter()
                .enumerate()
                .any(|(i, o)| o.axis != i || o.direction != 1.0)
        {
            return invalid("inner series need the three-outlet junction layout");
        }
        Ok(Self {
            spec,
            lookup: mesh.index.iter().enumerate().map(|(v, q)| (*q, v)).collect(),
            slopes: Vec::new(),
            offset: Vec::new(),
            remainder: Vec::new(),
            far_constants: Vec::new(),
            gamma0_integral: Vec::new(),
        })
    }

    pub fn n_levels(&self) -> usize {
        self.remainder.len()
    }

    /// Appends a level from an inner solve.
    pub fn push(&mut self, slopes: [f64; 3], offset: f64, sol: &InnerSolution) -> Result<()> {
        if sol.field.spec != self.spec || sol.field.values.len() != self.lookup.len() {
            return invalid("inner solution was computed on a different cell mesh");
        }
        self.push_raw(
            slopes,
            offset,
            sol.field.values.clone(),
            [0, 1, 2].map(|o| sol.far_field.constant(o)),
            sol.gamma0_integral,
        )
    }

    /// Appends a level from explicit data.
    pub fn push_raw(
        &mut self,
        slopes: [f64; 3],
        offset: f64,
        remainder: Vec<f64>,
        far_constants: [f64; 3],
        gamma0_integral: f64,
    ) -> Result<()> {
        if remainder.len() != self.lookup.len() {
            return invalid("remainder does not match the cell mesh");
        }
        self.slopes.push(slopes);
        self.offset.push(offset);
        self.remainder.push(remainder);
        self.far_constants.push(far_constants);
        self.gamma0_integral.push(gamma0_integral);
        Ok(())
    }

    /// `N~(xi)` at a level by trilinear interpolation of the voxel values. Missing
    /// corners next to the boundary are dropped and the weights renormalised.
    pub fn remainder_at(&self, level: usize, xi: [f64; 3]) -> Result<f64> {
        let hv = self.spec.hv;
        let r = self.spec.radius;
        for i in 0..3 {
            if xi[i] >= r {
                let inside = (0..3).filter(|&j| j != i).all(|j| xi[j].abs() <= self.spec.ell0);
                if !inside {
                    return Err(Error::InvalidInput(format!(
                        "point {xi:?} is beyond the truncation radius but not inside outlet {}",
                        i + 1
                    )));
                }
                return Ok(self.far_constants[level][i]);
            }
        }
        let u = &self.remainder[level];
        let q = xi.map(|x| (x + self.spec.ell0) / hv - 0.5);
        let mut base = [0i64; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let f = q[a].floor();
            base[a] = f as i64;
            frac[a] = q[a] - f;
            // snap lattice-aligned points so they read a single voxel
            if frac[a] < 1e-9 {
                frac[a] = 0.0;
            } else if frac[a] > 1.0 - 1e-9 {
                frac[a] = 0.0;
                base[a] += 1;
            }
        }
        // the point must sit in the closed box of some voxel, otherwise the
        // renormalised weights would extrapolate from a distant corner
        let covered = (0..8).any(|corner| {
            let mut idx = base;
            for a in 0..3 {
                if (corner >> a) & 1 == 1 {
                    idx[a] += 1;
                }
                if (q[a] - idx[a] as f64).abs() > 0.5 + 1e-9 {
                    return false;
                }
            }
            self.lookup.contains_key(&idx)
        });
        if !covered {
            return Err(Error::InvalidInput(format!(
                "point {xi:?} lies outside the cell domain"
            )));
        }
        let mut sum = 0.0;
        let mut wsum = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..3 {
                let up = (corner >> a) & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                if up {
                    idx[a] += 1;
                }
            }
            if w == 0.0 {
                continue;
            }
            if let Some(&v) = self.lookup.get(&idx) {
                sum += w * u[v];
                wsum += w;
            }
        }
        if wsum < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "point {xi:?} lies outside the cell domain"
            )));
        }
        Ok(sum / wsum)
    }

    /// Full inner term `offset + sum_i chi_i(xi_i) xi_i s_i + N~` at a level.
    pub fn value(&self, level: usize, xi: [f64; 3]) -> Result<f64> {
        if level >= self.n_levels() {
            return Err(Error::Dependency(format!(
                "inner term has {} levels, level {level} requested",
                self.n_levels()
            )));
        }
        let cut = InnerCutoff { ell0: self.spec.ell0 };
        let s = self.slopes[level];
        let growth: f64 = (0..3).map(|i| cut.value(xi[i]) * xi[i] * s[i]).sum();
        Ok(self.offset[level] + growth + self.remainder_at(level, xi)?)
    }
}
