//! Space-time norms on regions of the junction, node smallness, run summaries and
//! field export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cell::{DenseField, Region};
use crate::error::{invalid, Result};

use super::mesh::JunctionMesh;
use super::solver::{JunctionRun, RunStats, TimeSeriesField};

/// Part of `Omega_eps` a norm is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormRegion {
    All,
    /// Edge `edge` (0-based) beyond `x_i = 3 ell0 eps^a`.
    EdgeBeyond { edge: usize, a: f64 },
    /// `{x : x_j < 2 ell0 eps for j = 1, 2, 3}`.
    NodeNeighborhood,
    /// The node box `eps Xi0`.
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// `max_t ||u(t)||_{L2}`.
    MaxL2,
    /// `||u||_{L2(0,T; H1)}`.
    L2H1,
    /// `||grad u||_{L2(0,T; L2)}`.
    L2Gradient,
}

/// Voxel selection of a region; empty regions are an error.
pub fn region_mask(mesh: &JunctionMesh, region: NormRegion) -> Result<Vec<bool>> {
    let eps = mesh.epsilon;
    let mask: Vec<bool> = match region {
        NormRegion::All => vec![true; mesh.n_voxels()],
        NormRegion::EdgeBeyond { edge, a } => {
            if edge > 2 {
                return invalid(format!("edge index {edge} out of range"));
            }
            let start = 3.0 * mesh.ell0 * eps.powf(a);
            (0..mesh.n_voxels())
                .map(|v| mesh.region[v] == Region::Outlet(edge) && mesh.centers[v][edge] > start)
                .collect()
        }
        NormRegion::NodeNeighborhood => {
            let lim = 2.0 * mesh.ell0 * eps;
            mesh.centers.iter().map(|c| c.iter().all(|&x| x < lim)).collect()
        }
        NormRegion::Node => mesh.region.iter().map(|r| *r == Region::Node).collect(),
    };
    if !mask.iter().any(|&b| b) {
        return invalid(format!("region {region:?} holds no voxels at eps = {eps}"));
    }
    Ok(mask)
}

/// Cell gradient: central differences, one-sided next to the boundary. Exact for
/// linear fields.
pub fn cell_gradient(mesh: &JunctionMesh, u: &[f64]) -> Vec<[f64; 3]> {
    let h = mesh.h;
    (0..mesh.n_voxels())
        .map(|v| {
            [0, 1, 2].map(|a| {
                match (mesh.neighbor(v, 2 * a), mesh.neighbor(v, 2 * a + 1)) {
                    (Some(m), Some(p)) => (u[p] - u[m]) / (2.0 * h),
                    (None, Some(p)) => (u[p] - u[v]) / h,
                    (Some(m), None) => (u[v] - u[m]) / h,
                    (None, None) => 0.0,
                }
            })
        })
        .collect()
}

/// `(||u||^2_{L2}, ||grad u||^2_{L2})` over the masked voxels.
pub fn spatial_sq(mesh: &JunctionMesh, u: &[f64], mask: &[bool]) -> (f64, f64) {
    let vol = mesh.voxel_volume();
    let g = cell_gradient(mesh, u);
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for v in 0..mesh.n_voxels() {
        if mask[v] {
            l2 += vol * u[v] * u[v];
            h1 += vol * (g[v][0] * g[v][0] + g[v][1] * g[v][1] + g[v][2] * g[v][2]);
        }
    }
    (l2, h1)
}

/// Norm of the field given level by level; trapezoid rule in time.
pub fn norm_levels(
    mesh: &JunctionMesh,
    times: &[f64],
    level: impl Fn(usize) -> Vec<f64>,
    region: NormRegion,
    kind: NormKind,
) -> Result<f64> {
    let mask = region_mask(mesh, region)?;
    let per: Vec<(f64, f64)> = (0..times.len())
        .map(|k| spatial_sq(mesh, &level(k), &mask))
        .collect();
    Ok(match kind {
        NormKind::MaxL2 => per.iter().map(|p| p.0).fold(0.0, f64::max).sqrt(),
        NormKind::L2H1 => trapezoid(times, |k| per[k].0 + per[k].1).sqrt(),
        NormKind::L2Gradient => trapezoid(times, |k| per[k].1).sqrt(),
    })
}

fn trapezoid(times: &[f64], g: impl Fn(usize) -> f64) -> f64 {
    (1..times.len())
        .map(|k| 0.5 * (times[k] - times[k - 1]) * (g(k - 1) + g(k)))
        .sum()
}

fn check_levels(mesh: &JunctionMesh, s: &TimeSeriesField) -> Result<()> {
    if s.levels.len() != s.times.len() || s.levels.iter().any(|l| l.len() != mesh.n_voxels()) {
        return invalid("time series does not match the mesh");
    }
    Ok(())
}

pub fn field_norm(
    mesh: &JunctionMesh,
    s: &TimeSeriesField,
    region: NormRegion,
    kind: NormKind,
) -> Result<f64> {
    check_levels(mesh, s)?;
    norm_levels(mesh, &s.times, |k| s.levels[k].clone(), region, kind)
}

/// Norm of `a - b`; both series must share the mesh and the time grid.
pub fn difference_norm(
    mesh: &JunctionMesh,
    a: &TimeSeriesField,
    b: &TimeSeriesField,
    region: NormRegion,
    kind: NormKind,
) -> Result<f64> {
    check_levels(mesh, a)?;
    check_levels(mesh, b)?;
    if a.times.len() != b.times.len()
        || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs()))
    {
        return invalid("time grids differ");
    }
    norm_levels(
        mesh,
        &a.times,
        |k| a.levels[k].iter().zip(&b.levels[k]).map(|(x, y)| x - y).collect(),
        region,
        kind,
    )
}

/// `eps^-3 int_0^T int_node u^2`.
pub fn node_smallness(mesh: &JunctionMesh, s: &TimeSeriesField) -> Result<f64> {
    check_levels(mesh, s)?;
    let vol = mesh.voxel_volume();
    let node = mesh.node_voxels();
    let per: Vec<f64> = s
        .levels
        .iter()
        .map(|u| u[node.clone()].iter().map(|x| vol * x * x).sum())
        .collect();
    Ok(trapezoid(&s.times, |k| per[k]) / mesh.epsilon.powi(3))
}

/// Summary of a reference run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionSummary {
    pub epsilon: f64,
    pub h: f64,
    pub resolution: usize,
    pub voxels: usize,
    pub time_steps: usize,
    pub horizon: f64,
    #[serde(rename = "maxL2")]
    pub max_l2: f64,
    #[serde(rename = "L2H1")]
    pub l2_h1: f64,
    pub node_smallness: f64,
    pub stats: RunStats,
}

pub fn summarize(run: &JunctionRun) -> Result<JunctionSummary> {
    let m = &run.mesh;
    let s = &run.series;
    Ok(JunctionSummary {
        epsilon: m.epsilon,
        h: m.h,
        resolution: m.resolution,
        voxels: m.n_voxels(),
        time_steps: s.n_levels().saturating_sub(1),
        horizon: *s.times.last().unwrap_or(&0.0),
        max_l2: field_norm(m, s, NormRegion::All, NormKind::MaxL2)?,
        l2_h1: field_norm(m, s, NormRegion::All, NormKind::L2H1)?,
        node_smallness: node_smallness(m, s)?,
        stats: run.stats,
    })
}

pub fn write_summary_json(path: &Path, summary: &JunctionSummary) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

/// Writes `u` in the flat binary field format, restricted to voxels whose centre
/// coordinates are all below `extent` (the full mesh bounding box is mostly empty).
pub fn write_junction_field_binary(
    path: &Path,
    mesh: &JunctionMesh,
    u: &[f64],
    extent: f64,
) -> Result<()> {
    let d = DenseField::from_lattice(&mesh.index, mesh.lattice_corner(), mesh.h, u, |v| {
        mesh.centers[v].iter().all(|&x| x <= extent)
    })?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    d.write(&mut w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::build_junction_mesh;
    use crate::model::JunctionGeometry;

    #[test]
    fn constant_on_one_prism() {
        let m = build_junction_mesh(&JunctionGeometry::standard(), 0.25, 4).unwrap();
        let mut u = vec![0.0; m.n_voxels()];
        for v in m.edge_voxels(1) {
            u[v] = 1.0;
        }
        let mask = region_mask(&m, NormRegion::All).unwrap();
        let (l2, _) = spatial_sq(&m, &u, &mask);
        let side = 0.25 * 0.25;
        let len = 1.0 - 0.25 * 0.25;
        assert!((l2 - side * side * len).abs() < 1e-14);
    }

    #[test]
    fn far_edge_region_can_be_empty_only_for_tiny_lengths() {
        let m = build_junction_mesh(&JunctionGeometry::standard(), 0.25, 4).unwrap();
        assert!(region_mask(&m, NormRegion::EdgeBeyond { edge: 0, a: 0.75 }).is_ok());
        assert!(region_mask(&m, NormRegion::EdgeBeyond { edge: 3, a: 0.75 }).is_err());
    }
}
