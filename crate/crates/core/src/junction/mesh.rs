//! Voxel mesh of the thin junction `Omega_eps`: the node box of half-side
//! `eps ell0` and three straight square prisms of side `eps s_i` reaching `x_i = l_i`.

use serde::Serialize;

use crate::cell::mesh::{as_count, voxelize, NONE};
use crate::cell::{FacetKind, Outlet, Region};
use crate::error::{invalid, Result};
use crate::model::JunctionGeometry;

/// Upper bound on the voxel count of a reference mesh.
pub const MAX_VOXELS: usize = 5_000_000;
/// Smallest admissible number of voxels across the thinnest edge.
pub const MIN_RESOLUTION: usize = 4;
/// Largest admissible thickness parameter.
pub const MAX_EPSILON: f64 = 0.25;

/// Boundary label of a junction facet; edge indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum JunctionFacetKind {
    Gamma0,
    Lateral(usize),
    DirichletEnd(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionFacet {
    pub voxel: usize,
    /// Facet centre in physical coordinates.
    pub center: [f64; 3],
    pub kind: JunctionFacetKind,
}

#[derive(Debug, Clone)]
pub struct JunctionMesh {
    pub epsilon: f64,
    /// Physical voxel side.
    pub h: f64,
    pub resolution: usize,
    pub ell0: f64,
    pub lengths: [f64; 3],
    pub sides: [f64; 3],
    pub index: Vec<[i64; 3]>,
    /// Voxel centres in physical coordinates.
    pub centers: Vec<[f64; 3]>,
    pub region: Vec<Region>,
    neighbors: Vec<[u32; 6]>,
    /// Interior faces as `(lower, upper)` voxel pairs.
    pub faces: Vec<(usize, usize)>,
    pub facets: Vec<JunctionFacet>,
    edge_start: [usize; 3],
    slices: [usize; 3],
}

/// Voxelises `Omega_eps` with `resolution` voxels across the thinnest edge.
pub fn build_junction_mesh(
    geom: &JunctionGeometry,
    epsilon: f64,
    resolution: usize,
) -> Result<JunctionMesh> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return invalid(format!("epsilon must lie in (0, {MAX_EPSILON}], got {epsilon}"));
    }
    if resolution < MIN_RESOLUTION {
        return invalid(format!(
            "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        ));
    }
    let sides = [geom.voxel_side(0)?, geom.voxel_side(1)?, geom.voxel_side(2)?];
    let lengths = [0, 1, 2].map(|i| geom.edges[i].length);
    let ell0 = geom.ell0;
    // lattice spacing in the stretched variable xi = x / eps
    let hv = sides.iter().cloned().fold(f64::INFINITY, f64::min) / resolution as f64;
    let m = as_count(2.0 * ell0 / hv, "the node side")?;
    let mut slices = [0usize; 3];
    let mut count = m * m * m;
    for i in 0..3 {
        let k = as_count(sides[i] / hv, &format!("the side of edge {}", i + 1))?;
        if (m - k) % 2 != 0 {
            return invalid(format!(
                "edge {} is not aligned with the voxel grid of the node face",
                i + 1
            ));
        }
        slices[i] = as_count(
            (lengths[i] / epsilon - ell0) / hv,
            &format!("the length of edge {} minus the node", i + 1),
        )?;
        count = count.saturating_add(k * k * slices[i]);
    }
    if count > MAX_VOXELS {
        return invalid(format!(
            "mesh would hold {count} voxels, more than the limit {MAX_VOXELS}"
        ));
    }
    let outlets: Vec<Outlet> = (0..3)
        .map(|axis| Outlet {
            axis,
            direction: 1.0,
            side: sides[axis],
        })
        .collect();
    let l = voxelize(ell0, &outlets, &slices, hv);
    let facets = l
        .facets
        .iter()
        .map(|f| JunctionFacet {
            voxel: f.voxel,
            center: f.center.map(|c| epsilon * c),
            kind: match f.kind {
                FacetKind::Gamma0 => JunctionFacetKind::Gamma0,
                FacetKind::Lateral(i) => JunctionFacetKind::Lateral(i),
                FacetKind::Cap(i) => JunctionFacetKind::DirichletEnd(i),
            },
        })
        .collect();
    Ok(JunctionMesh {
        epsilon,
        h: epsilon * hv,
        resolution,
        ell0,
        lengths,
        sides,
        index: l.index,
        centers: l.centers.iter().map(|c| c.map(|v| epsilon * v)).collect(),
        region: l.region,
        neighbors: l.neighbors,
        faces: l.faces,
        facets,
        edge_start: [l.outlet_start[0], l.outlet_start[1], l.outlet_start[2]],
        slices,
    })
}

impl JunctionMesh {
    pub fn n_voxels(&self) -> usize {
        self.centers.len()
    }

    pub fn voxel_volume(&self) -> f64 {
        self.h.powi(3)
    }

    pub fn facet_area(&self) -> f64 {
        self.h * self.h
    }

    /// Neighbour of voxel `v` in direction `d` (`2 axis` negative, `2 axis + 1` positive).
    pub fn neighbor(&self, v: usize, d: usize) -> Option<usize> {
        let n = self.neighbors[v][d];
        (n != NONE).then_some(n as usize)
    }

    pub fn node_voxels(&self) -> std::ops::Range<usize> {
        0..self.edge_start[0]
    }

    pub fn edge_voxels(&self, i: usize) -> std::ops::Range<usize> {
        let end = if i == 2 { self.n_voxels() } else { self.edge_start[i + 1] };
        self.edge_start[i]..end
    }

    pub fn n_slices(&self, i: usize) -> usize {
        self.slices[i]
    }

    /// Voxels of cross-section `k` (counted from the node) of edge `i`.
    pub fn slice(&self, i: usize, k: usize) -> std::ops::Range<usize> {
        let per = ((self.sides[i] * self.epsilon / self.h).round() as usize).pow(2);
        let s = self.edge_start[i] + k * per;
        s..s + per
    }

    /// Longitudinal coordinate `x_i` of the centres of slice `k` of edge `i`.
    pub fn slice_coordinate(&self, k: usize) -> f64 {
        self.epsilon * self.ell0 + (k as f64 + 0.5) * self.h
    }

    /// Total area of the facets with a label.
    pub fn facet_total(&self, kind: JunctionFacetKind) -> f64 {
        self.facets.iter().filter(|f| f.kind == kind).count() as f64 * self.facet_area()
    }

    /// Volume of the node box `eps Xi0`.
    pub fn node_volume(&self) -> f64 {
        self.node_voxels().len() as f64 * self.voxel_volume()
    }

    pub fn volume(&self) -> f64 {
        self.n_voxels() as f64 * self.voxel_volume()
    }

    /// Corner coordinate of the lattice: voxel `q` is centred at `corner + (q + 1/2) h`.
    pub fn lattice_corner(&self) -> f64 {
        -self.epsilon * self.ell0
    }
}
