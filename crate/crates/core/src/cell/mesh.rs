//! Voxel meshes of the truncated junction domain: the node box plus straight square
//! outlets, with every boundary facet labelled as `Gamma_0`, lateral or end cap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::JunctionGeometry;

/// A straight outlet of square section leaving the node box through the face
/// `x_axis = direction * ell0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outlet {
    pub axis: usize,
    /// `+1` or `-1`.
    pub direction: f64,
    pub side: f64,
}

impl Outlet {
    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

/// Truncated inner domain: node box of half-side `ell0`, outlets up to distance
/// `radius` from the centre, cubic voxels of side `hv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerDomainSpec {
    pub ell0: f64,
    pub outlets: Vec<Outlet>,
    pub radius: f64,
    pub hv: f64,
}

/// Minimal distance between the node box and the truncation plane: the matching
/// cutoffs occupy one unit, one more unit leaves room for decay.
pub const MIN_TRUNCATION_GAP: f64 = 3.0;

pub(crate) fn as_count(v: f64, what: &str) -> Result<usize> {
    let r = v.round();
    if (v - r).abs() > 1e-9 * v.abs().max(1.0) || r < 0.0 {
        return invalid(format!("voxel size does not divide {what} (ratio {v})"));
    }
    Ok(r as usize)
}

impl InnerDomainSpec {
    /// The three outlets of a junction geometry along the positive axes, with the
    /// voxel side of each profile at the vertex.
    pub fn from_geometry(geom: &JunctionGeometry, radius: f64, hv: f64) -> Result<Self> {
        let outlets = (0..3)
            .map(|i| {
                Ok(Outlet {
                    axis: i,
                    direction: 1.0,
                    side: geom.voxel_side(i)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let s = Self {
            ell0: geom.ell0,
            outlets,
            radius,
            hv,
        };
        s.validate()?;
        Ok(s)
    }

    /// Straight pipe along `x_1`: two opposite outlets filling the node faces, so the
    /// whole domain is a single prism.
    pub fn pipe(ell0: f64, radius: f64, hv: f64) -> Result<Self> {
        let side = 2.0 * ell0;
        let s = Self {
            ell0,
            outlets: vec![
                Outlet { axis: 0, direction: -1.0, side },
                Outlet { axis: 0, direction: 1.0, side },
            ],
            radius,
            hv,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell0 > 0.0 && self.hv > 0.0) {
            return invalid("ell0 and the voxel size must be positive");
        }
        if !(self.radius >= self.ell0 + MIN_TRUNCATION_GAP) {
            return invalid(format!(
                "truncation radius {} must be at least ell0 + {MIN_TRUNCATION_GAP}",
                self.radius
            ));
        }
        if self.outlets.is_empty() {
            return invalid("at least one outlet is required");
        }
        let m = as_count(2.0 * self.ell0 / self.hv, "the node side")?;
        as_count((self.radius - self.ell0) / self.hv, "R - ell0")?;
        for (o, out) in self.outlets.iter().enumerate() {
            if out.axis > 2 || out.direction.abs() != 1.0 {
                return invalid(format!("outlet {} has an invalid axis or direction", o + 1));
            }
            if !(out.side > 0.0) || out.side > 2.0 * self.ell0 + 1e-12 {
                return invalid(format!(
                    "port {} of side {} is larger than the node face {}",
                    o + 1,
                    out.side,
                    2.0 * self.ell0
                ));
            }
            let k = as_count(out.side / self.hv, &format!("the side of port {}", o + 1))?;
            if (m - k) % 2 != 0 {
                return invalid(format!(
                    "port {} is not aligned with the voxel grid of the node face",
                    o + 1
                ));
            }
            if self.outlets[..o]
                .iter()
                .any(|p| p.axis == out.axis && p.direction == out.direction)
            {
                return invalid(format!("outlet {} duplicates an earlier outlet", o + 1));
            }
        }
        Ok(())
    }

    fn outlet_slices(&self) -> usize {
        ((self.radius - self.ell0) / self.hv).round() as usize
    }
}

/// Where a voxel lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Node,
    Outlet(usize),
}

/// Label of a boundary facet; outlet indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FacetKind {
    Gamma0,
    Lateral(usize),
    Cap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    pub voxel: usize,
    pub axis: usize,
    pub sign: f64,
    pub center: [f64; 3],
    pub kind: FacetKind,
}

/// Measures of the node in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryMeasures {
    pub gamma0_area: f64,
    pub node_volume: f64,
}

/// `|Xi0| = (2 ell0)^3` and `|Gamma_0| = 6 (2 ell0)^2 - sum s_i^2`.
pub fn boundary_measures(spec: &InnerDomainSpec) -> Result<BoundaryMeasures> {
    let face = 2.0 * spec.ell0;
    if let Some(o) = spec.outlets.iter().position(|o| o.side > face + 1e-12) {
        return invalid(format!("port {} is larger than the node face", o + 1));
    }
    Ok(BoundaryMeasures {
        gamma0_area: 6.0 * face * face - spec.outlets.iter().map(Outlet::area).sum::<f64>(),
        node_volume: face * face * face,
    })
}

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct VoxelMesh {
    pub spec: InnerDomainSpec,
    pub index: Vec<[i64; 3]>,
    pub centers: Vec<[f64; 3]>,
    pub region: Vec<Region>,
    neighbors: Vec<[u32; 6]>,
    /// Interior faces as `(lower, upper)` voxel pairs.
    pub faces: Vec<(usize, usize)>,
    pub facets: Vec<BoundaryFacet>,
    outlet_start: Vec<usize>,
    slices: usize,
}

/// Transverse axes of `axis` in increasing order.
fn transverse(axis: usize) -> [usize; 2] {
    crate::model::data::transverse_axes(axis)
}

/// Voxelises the node box and the outlets.
pub fn build_inner_mesh(spec: &InnerDomainSpec) -> Result<VoxelMesh> {
    spec.validate()?;
    let nr = spec.outlet_slices();
    let slices = vec![nr; spec.outlets.len()];
    let l = voxelize(spec.ell0, &spec.outlets, &slices, spec.hv);
    Ok(VoxelMesh {
        spec: spec.clone(),
        index: l.index,
        centers: l.centers,
        region: l.region,
        neighbors: l.neighbors,
        faces: l.faces,
        facets: l.facets,
        outlet_start: l.outlet_start,
        slices: nr,
    })
}

/// Voxel lattice of a node box with straight outlets, before any problem-specific
/// bookkeeping. Outlet `o` has `slices[o]` cross-sections of voxels.
pub(crate) struct Lattice {
    pub index: Vec<[i64; 3]>,
    pub centers: Vec<[f64; 3]>,
    pub region: Vec<Region>,
    pub neighbors: Vec<[u32; 6]>,
    pub faces: Vec<(usize, usize)>,
    pub facets: Vec<BoundaryFacet>,
    pub outlet_start: Vec<usize>,
}

/// Node voxels come first, then each outlet slice by slice from the node outwards.
/// Sides must already be validated as multiples of `hv` aligned with the node grid.
pub(crate) fn voxelize(ell0: f64, outlets: &[Outlet], slices: &[usize], hv: f64) -> Lattice {
    let m = (2.0 * ell0 / hv).round() as i64;
    let mut index = Vec::new();
    let mut region = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                index.push([a, b, c]);
                region.push(Region::Node);
            }
        }
    }
    let mut outlet_start = Vec::new();
    for (o, out) in outlets.iter().enumerate() {
        outlet_start.push(index.len());
        let k = (out.side / hv).round() as i64;
        let lo = (m - k) / 2;
        let tr = transverse(out.axis);
        for s in 0..slices[o] as i64 {
            let q_axis = if out.direction > 0.0 { m + s } else { -1 - s };
            for p in 0..k {
                for r in 0..k {
                    let mut q = [0i64; 3];
                    q[out.axis] = q_axis;
                    q[tr[0]] = lo + p;
                    q[tr[1]] = lo + r;
                    index.push(q);
                    region.push(Region::Outlet(o));
                }
            }
        }
    }
    let lookup: HashMap<[i64; 3], usize> = index.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let center = |q: [i64; 3]| q.map(|v| -ell0 + (v as f64 + 0.5) * hv);
    let centers: Vec<[f64; 3]> = index.iter().map(|&q| center(q)).collect();

    let mut neighbors = vec![[NONE; 6]; index.len()];
    let mut faces = Vec::new();
    let mut facets = Vec::new();
    for (v, q) in index.iter().enumerate() {
        for d in 0..6 {
            let axis = d / 2;
            let step = if d % 2 == 0 { -1 } else { 1 };
            let mut nq = *q;
            nq[axis] += step;
            match lookup.get(&nq) {
                Some(&n) => {
                    neighbors[v][d] = n as u32;
                    if v < n {
                        faces.push((v, n));
                    }
                }
                None => {
                    let sign = step as f64;
                    let kind = match region[v] {
                        Region::Node => FacetKind::Gamma0,
                        Region::Outlet(o) => {
                            let out = &outlets[o];
                            if axis == out.axis && sign == out.direction {
                                FacetKind::Cap(o)
                            } else {
                                FacetKind::Lateral(o)
                            }
                        }
                    };
                    let mut c = centers[v];
                    c[axis] += 0.5 * sign * hv;
                    facets.push(BoundaryFacet {
                        voxel: v,
                        axis,
                        sign,
                        center: c,
                        kind,
                    });
                }
            }
        }
    }
    Lattice {
        index,
        centers,
        region,
        neighbors,
        faces,
        facets,
        outlet_start,
    }
}

impl VoxelMesh {
    pub fn n_voxels(&self) -> usize {
        self.centers.len()
    }

    pub fn hv(&self) -> f64 {
        self.spec.hv
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spec.hv.powi(3)
    }

    pub fn facet_area(&self) -> f64 {
        self.spec.hv * self.spec.hv
    }

    pub fn n_outlets(&self) -> usize {
        self.spec.outlets.len()
    }

    /// Neighbour of voxel `v` in direction `d` (`2 axis` is negative, `2 axis + 1` positive).
    pub fn neighbor(&self, v: usize, d: usize) -> Option<usize> {
        let n = self.neighbors[v][d];
        (n != NONE).then_some(n as usize)
    }

    /// Distance along outlet `o` from the node centre, `xi_o`, of a point.
    pub fn outlet_coordinate(&self, o: usize, p: [f64; 3]) -> f64 {
        let out = &self.spec.outlets[o];
        out.direction * p[out.axis]
    }

    /// Number of cross-sectional slices of each outlet.
    pub fn n_slices(&self) -> usize {
        self.slices
    }

    /// Voxels of slice `k` (counted from the node) of outlet `o`.
    pub fn slice(&self, o: usize, k: usize) -> std::ops::Range<usize> {
        let per = ((self.spec.outlets[o].side / self.spec.hv).round() as usize).pow(2);
        let s = self.outlet_start[o] + k * per;
        s..s + per
    }

    /// Coordinate `xi_o` of the centres of slice `k`.
    pub fn slice_coordinate(&self, k: usize) -> f64 {
        self.spec.ell0 + (k as f64 + 0.5) * self.spec.hv
    }

    /// Indices of the voxels of the node box.
    pub fn node_voxels(&self) -> std::ops::Range<usize> {
        0..self.outlet_start[0]
    }

    pub fn facets_of(&self, kind: FacetKind) -> impl Iterator<Item = &BoundaryFacet> {
        self.facets.iter().filter(move |f| f.kind == kind)
    }

    /// Total area of the facets with a given label.
    pub fn facet_total(&self, kind: FacetKind) -> f64 {
        self.facets_of(kind).count() as f64 * self.facet_area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_spec() -> InnerDomainSpec {
        InnerDomainSpec {
            ell0: 0.25,
            outlets: (0..3)
                .map(|axis| Outlet { axis, direction: 1.0, side: 0.5 })
                .collect(),
            radius: 4.0,
            hv: 0.25,
        }
    }

    #[test]
    fn labels_partition_the_boundary() {
        let mesh = build_inner_mesh(&example_spec()).unwrap();
        // every voxel side is either an interior face (counted twice) or a facet
        assert_eq!(2 * mesh.faces.len() + mesh.facets.len(), 6 * mesh.n_voxels());
        let mut counts = HashMap::new();
        for f in &mesh.facets {
            *counts.entry(f.kind).or_insert(0usize) += 1;
        }
        assert_eq!(counts.values().sum::<usize>(), mesh.facets.len());
        // ports fill the positive faces: Gamma_0 is the three negative faces
        assert_eq!(counts[&FacetKind::Gamma0], 3 * 4);
        for o in 0..3 {
            assert_eq!(counts[&FacetKind::Cap(o)], 4);
            assert_eq!(counts[&FacetKind::Lateral(o)], 4 * 2 * 15);
        }
    }

    #[test]
    fn pipe_is_a_single_prism() {
        let spec = InnerDomainSpec::pipe(0.25, 4.0, 0.125).unwrap();
        let mesh = build_inner_mesh(&spec).unwrap();
        let (lo, hi) = mesh.index.iter().fold(([i64::MAX; 3], [i64::MIN; 3]), |(lo, hi), q| {
            ([0, 1, 2].map(|a| lo[a].min(q[a])), [0, 1, 2].map(|a| hi[a].max(q[a])))
        });
        let bbox: i64 = (0..3).map(|a| hi[a] - lo[a] + 1).product();
        assert_eq!(bbox as usize, mesh.n_voxels());
        assert_eq!(mesh.facets_of(FacetKind::Cap(0)).count(), 16);
    }

    #[test]
    fn gamma0_area_matches_closed_form() {
        let spec = InnerDomainSpec {
            ell0: 0.25,
            outlets: (0..3)
                .map(|axis| Outlet { axis, direction: 1.0, side: 0.4 })
                .collect(),
            radius: 3.25,
            hv: 0.05,
        };
        let m = boundary_measures(&spec).unwrap();
        assert!((m.node_volume - 0.125).abs() < 1e-15);
        assert!((m.gamma0_area - 1.02).abs() < 1e-12);
        let mesh = build_inner_mesh(&spec).unwrap();
        assert!((mesh.facet_total(FacetKind::Gamma0) - m.gamma0_area).abs() < 1e-12);
    }

    #[test]
    fn rejects_misaligned_or_oversized_ports() {
        let mut s = example_spec();
        s.hv = 0.2;
        assert!(build_inner_mesh(&s).is_err());
        let mut s = example_spec();
        s.outlets[1].side = 0.75;
        assert!(s.validate().is_err());
        assert!(boundary_measures(&s).is_err());
        let mut s = example_spec();
        s.radius = 3.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn slices_follow_the_outlet() {
        let mesh = build_inner_mesh(&InnerDomainSpec::from_geometry(
            &JunctionGeometry::standard(),
            4.25,
            0.125,
        ).unwrap())
        .unwrap();
        for o in 0..3 {
            for k in [0, mesh.n_slices() - 1] {
                let xi = mesh.slice_coordinate(k);
                for v in mesh.slice(o, k) {
                    assert_eq!(mesh.region[v], Region::Outlet(o));
                    assert!((mesh.outlet_coordinate(o, mesh.centers[v]) - xi).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gamma0_facets_match_the_geometry_quadrature() {
        let geom = JunctionGeometry::standard();
        let mesh = build_inner_mesh(&InnerDomainSpec::from_geometry(&geom, 3.25, 0.0625).unwrap())
            .unwrap();
        let mut a: Vec<[f64; 3]> = mesh.facets_of(FacetKind::Gamma0).map(|f| f.center).collect();
        let mut b: Vec<[f64; 3]> = geom.gamma0_quadrature(0.0625).into_iter().map(|p| p.0).collect();
        let key = |p: &[f64; 3]| p.map(|v| (v * 1e9).round() as i64);
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            assert!((0..3).all(|k| (p[k] - q[k]).abs() < 1e-12));
        }
    }
}
