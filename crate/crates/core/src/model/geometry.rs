//! Junction geometry in dimensionless coordinates.
//!
//! The node is the box `(-ell0, ell0)^3`; edge `i` runs along the positive `x_i` axis
//! from the vertex to `length`. Each edge has a cross-section profile which is either
//! circular (radius `h(x)`) or square (side `s(x)`).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Circular,
    Square,
}

/// Size function of a profile: radius for circles, side for squares.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    Constant(f64),
    /// Piecewise cubic with zero slope at every knot (C^1, flat at the knots).
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionProfile {
    pub kind: ProfileKind,
    pub shape: ProfileShape,
}

/// Area and perimeter of a cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionData {
    pub area: f64,
    pub perimeter: f64,
}

impl CrossSectionProfile {
    pub fn constant(kind: ProfileKind, size: f64) -> Result<Self> {
        if !(size.is_finite() && size > 0.0) {
            return invalid(format!("profile size must be positive, got {size}"));
        }
        Ok(Self {
            kind,
            shape: ProfileShape::Constant(size),
        })
    }

    /// Tabulated profile. The first two and the last two values must coincide so the
    /// profile is constant near both endpoints.
    pub fn tabulated(kind: ProfileKind, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 3 {
            return invalid("tabulated profile needs at least three (x, size) pairs");
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("tabulated profile knots must be strictly increasing");
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return invalid("tabulated profile values must be positive");
        }
        let n = values.len();
        if values[0] != values[1] || values[n - 2] != values[n - 1] {
            return invalid("tabulated profile must be constant near both endpoints");
        }
        Ok(Self {
            kind,
            shape: ProfileShape::Tabulated { knots, values },
        })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, ProfileShape::Constant(_))
    }

    /// Radius or side at `x` (clamped to the table range).
    pub fn size(&self, x: f64) -> f64 {
        match &self.shape {
            ProfileShape::Constant(s) => *s,
            ProfileShape::Tabulated { knots, values } => match locate(knots, x) {
                (None, _, _) if x <= knots[0] => values[0],
                (None, _, _) => values[values.len() - 1],
                (Some(k), tau, _) => {
                    values[k] + (values[k + 1] - values[k]) * tau * tau * (3.0 - 2.0 * tau)
                }
            },
        }
    }

    /// Derivative of the size function.
    pub fn size_derivative(&self, x: f64) -> f64 {
        match &self.shape {
            ProfileShape::Constant(_) => 0.0,
            ProfileShape::Tabulated { knots, values } => match locate(knots, x) {
                (None, _, _) => 0.0,
                (Some(k), tau, dx) => (values[k + 1] - values[k]) * 6.0 * tau * (1.0 - tau) / dx,
            },
        }
    }

    pub fn area(&self, x: f64) -> f64 {
        let s = self.size(x);
        match self.kind {
            ProfileKind::Circular => std::f64::consts::PI * s * s,
            ProfileKind::Square => s * s,
        }
    }

    pub fn perimeter(&self, x: f64) -> f64 {
        let s = self.size(x);
        match self.kind {
            ProfileKind::Circular => 2.0 * std::f64::consts::PI * s,
            ProfileKind::Square => 4.0 * s,
        }
    }

    pub fn area_derivative(&self, x: f64) -> f64 {
        let s = self.size(x);
        let ds = self.size_derivative(x);
        match self.kind {
            ProfileKind::Circular => 2.0 * std::f64::consts::PI * s * ds,
            ProfileKind::Square => 2.0 * s * ds,
        }
    }

    /// Quadrature nodes on the boundary contour of the cross-section at `x`:
    /// transverse coordinates and arc-length weights. The rule is the periodic
    /// trapezoid rule on the perimeter parameterisation, exact for constants.
    pub fn contour_points(&self, x: f64, m: usize) -> Vec<([f64; 2], f64)> {
        let s = self.size(x);
        let m = m.max(4);
        match self.kind {
            ProfileKind::Circular => {
                let w = 2.0 * std::f64::consts::PI * s / m as f64;
                (0..m)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                        ([s * th.cos(), s * th.sin()], w)
                    })
                    .collect()
            }
            ProfileKind::Square => {
                // Walk the perimeter counter-clockwise starting at the middle of the
                // bottom side so the points are symmetric.
                let per = 4.0 * s;
                let w = per / m as f64;
                let half = 0.5 * s;
                (0..m)
                    .map(|k| {
                        let arc = (k as f64 + 0.5) * w;
                        let side = (arc / s).floor().min(3.0);
                        let r = arc - side * s;
                        let p = match side as usize {
                            0 => [-half + r, -half],
                            1 => [half, -half + r],
                            2 => [half - r, half],
                            _ => [-half, half - r],
                        };
                        (p, w)
                    })
                    .collect()
            }
        }
    }

    /// Side of the square with the same area (identity for square profiles).
    pub fn equal_area_side(&self, x: f64) -> f64 {
        self.area(x).sqrt()
    }
}

fn locate(knots: &[f64], x: f64) -> (Option<usize>, f64, f64) {
    let n = knots.len();
    if x <= knots[0] || x >= knots[n - 1] {
        return (None, 0.0, 1.0);
    }
    let k = match knots.partition_point(|&v| v <= x) {
        0 => 0,
        p => p - 1,
    };
    let k = k.min(n - 2);
    let dx = knots[k + 1] - knots[k];
    (Some(k), (x - knots[k]) / dx, dx)
}

/// Area and perimeter of the cross-section at `x`; `x` must lie in `[0, length]`.
pub fn cross_section_data(
    profile: &CrossSectionProfile,
    length: f64,
    x: f64,
) -> Result<SectionData> {
    if !(x >= 0.0 && x <= length) {
        return invalid(format!("x = {x} outside the edge [0, {length}]"));
    }
    Ok(SectionData {
        area: profile.area(x),
        perimeter: profile.perimeter(x),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub length: f64,
    pub profile: CrossSectionProfile,
}

/// Dimensionless junction blueprint. The node shape is the box of half-side `ell0`
/// with one port per positive axis, sized by the profile value at the vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionGeometry {
    pub ell0: f64,
    pub edges: [Edge; 3],
    /// Allow circular profiles in voxel meshes by replacing them with equal-area squares.
    pub circular_as_square: bool,
}

impl JunctionGeometry {
    pub fn new(ell0: f64, edges: [Edge; 3]) -> Result<Self> {
        let g = Self {
            ell0,
            edges,
            circular_as_square: false,
        };
        g.validate()?;
        Ok(g)
    }

    /// Three straight square edges of unit length with sides `sides`.
    pub fn square(ell0: f64, sides: [f64; 3]) -> Result<Self> {
        let mk = |s: f64| -> Result<Edge> {
            Ok(Edge {
                length: 1.0,
                profile: CrossSectionProfile::constant(ProfileKind::Square, s)?,
            })
        };
        Self::new(ell0, [mk(sides[0])?, mk(sides[1])?, mk(sides[2])?])
    }

    /// Standard asymmetric test geometry: `ell0 = 1/4`, square sides `(1/2, 1/4, 1/4)`,
    /// unit edges. Edges 2 and 3 are mirror images, edge 1 differs.
    pub fn standard() -> Self {
        Self::square(0.25, [0.5, 0.25, 0.25]).expect("standard geometry is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell0 > 0.0 && self.ell0 < 1.0 / 3.0) {
            return invalid(format!("ell0 must lie in (0, 1/3), got {}", self.ell0));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length >= 1.0) {
                return invalid(format!("edge {} length must be >= 1, got {}", i + 1, e.length));
            }
            if let ProfileShape::Tabulated { knots, .. } = &e.profile.shape {
                if knots[0] > 0.0 || knots[knots.len() - 1] < e.length {
                    return invalid(format!("edge {} profile table must cover [0, length]", i + 1));
                }
            }
            let port = self.port_extent(i);
            if port > 2.0 * self.ell0 + 1e-14 {
                return invalid(format!(
                    "port {} (extent {port}) does not fit into the node face of side {}",
                    i + 1,
                    2.0 * self.ell0
                ));
            }
        }
        Ok(())
    }

    /// Largest transverse extent of port `i` (diameter or side).
    fn port_extent(&self, i: usize) -> f64 {
        let p = &self.edges[i].profile;
        match p.kind {
            ProfileKind::Circular => 2.0 * p.size(0.0),
            ProfileKind::Square => p.size(0.0),
        }
    }

    pub fn area0(&self, i: usize) -> f64 {
        self.edges[i].profile.area(0.0)
    }

    pub fn perimeter0(&self, i: usize) -> f64 {
        self.edges[i].profile.perimeter(0.0)
    }

    /// Square side used by voxel meshes for edge `i`.
    pub fn voxel_side(&self, i: usize) -> Result<f64> {
        let p = &self.edges[i].profile;
        if !p.is_constant() {
            return invalid(format!(
                "edge {} has a variable profile; voxel meshes need straight prisms",
                i + 1
            ));
        }
        match p.kind {
            ProfileKind::Square => Ok(p.size(0.0)),
            ProfileKind::Circular if self.circular_as_square => Ok(p.equal_area_side(0.0)),
            ProfileKind::Circular => invalid(format!(
                "edge {} is circular; set `circular_as_square` to use equal-area squares",
                i + 1
            )),
        }
    }

    /// Measure of the lateral node surface Gamma_0.
    pub fn gamma0_area(&self) -> f64 {
        let face = 2.0 * self.ell0;
        6.0 * face * face - (0..3).map(|i| self.area0(i)).sum::<f64>()
    }

    /// Volume of the node box.
    pub fn node_volume(&self) -> f64 {
        (2.0 * self.ell0).powi(3)
    }

    /// Midpoint quadrature on Gamma_0 with square facets of side `hv`: facet centers
    /// and weights. Facets whose center lies inside a port are dropped; weights are
    /// rescaled so they sum to [`Self::gamma0_area`] (a no-op for grid-aligned square
    /// ports).
    pub fn gamma0_quadrature(&self, hv: f64) -> Vec<([f64; 3], f64)> {
        let m = ((2.0 * self.ell0) / hv).round().max(1.0) as usize;
        let step = 2.0 * self.ell0 / m as f64;
        let mut pts = Vec::new();
        for axis in 0..3 {
            let tr = super::data::transverse_axes(axis);
            for side in [-1.0, 1.0] {
                for a in 0..m {
                    for b in 0..m {
                        let eta = [
                            -self.ell0 + (a as f64 + 0.5) * step,
                            -self.ell0 + (b as f64 + 0.5) * step,
                        ];
                        if side > 0.0 && self.in_port(axis, eta) {
                            continue;
                        }
                        let mut p = [0.0; 3];
                        p[axis] = side * self.ell0;
                        p[tr[0]] = eta[0];
                        p[tr[1]] = eta[1];
                        pts.push((p, step * step));
                    }
                }
            }
        }
        let total: f64 = pts.iter().map(|(_, w)| w).sum();
        let scale = self.gamma0_area() / total;
        for p in pts.iter_mut() {
            p.1 *= scale;
        }
        pts
    }

    /// Whether transverse point `eta` of the positive face of `axis` lies in the port.
    fn in_port(&self, axis: usize, eta: [f64; 2]) -> bool {
        let p = &self.edges[axis].profile;
        let s = p.size(0.0);
        match p.kind {
            ProfileKind::Square => eta[0].abs() < 0.5 * s && eta[1].abs() < 0.5 * s,
            ProfileKind::Circular => eta[0].hypot(eta[1]) < s,
        }
    }
}
