//! Error norms of an approximation against a reference solution and the
//! cross-sectional averaging operator.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::junction::{difference_norm, JunctionMesh, NormKind, NormRegion, TimeSeriesField};
use crate::model::RegimeParams;

use super::approx::ApproximationField;
use super::rates::mu_of_epsilon;

/// One row of an error report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub epsilon: f64,
    /// `max_t ||u - U||_{L2(Omega_eps)}`.
    #[serde(rename = "maxL2")]
    pub max_l2: f64,
    /// `||u - U||_{L2(0,T; H1(Omega_eps))}`.
    #[serde(rename = "L2H1")]
    pub l2h1: f64,
    /// `||grad u - grad U||` over the node neighbourhood `{x_i < 2 l0 eps}` and `(0, T)`.
    #[serde(rename = "nodeGrad")]
    pub node_grad: f64,
    /// Rate of the regime's approximation theorem at `epsilon`.
    pub mu: f64,
}

/// Norms of `u - U` on a common mesh and time grid.
pub fn error_norms(
    mesh: &JunctionMesh,
    u: &TimeSeriesField,
    approx: &ApproximationField,
    regime: &RegimeParams,
    a: f64,
) -> Result<ErrorEntry> {
    let s = &approx.series;
    Ok(ErrorEntry {
        epsilon: mesh.epsilon,
        max_l2: difference_norm(mesh, u, s, NormRegion::All, NormKind::MaxL2)?,
        l2h1: difference_norm(mesh, u, s, NormRegion::All, NormKind::L2H1)?,
        node_grad: difference_norm(mesh, u, s, NormRegion::NodeNeighborhood, NormKind::L2Gradient)?,
        mu: mu_of_epsilon(regime, a, mesh.epsilon)?,
    })
}

/// Cross-sectional means of a field along one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAverage {
    pub edge: usize,
    /// Slice centres `x_i`.
    pub x: Vec<f64>,
    /// Means per time level and slice.
    pub values: Vec<Vec<f64>>,
}

/// The averaging operator `E^{(i)}`: the mean over each cross-section of edge `edge`.
pub fn average_e(mesh: &JunctionMesh, u: &TimeSeriesField, edge: usize) -> Result<EdgeAverage> {
    if edge > 2 {
        return invalid(format!("edge index {edge} out of range"));
    }
    let ns = mesh.n_slices(edge);
    let per = mesh.slice(edge, 0).len();
    if (0..ns).any(|k| mesh.slice(edge, k).len() != per) {
        return invalid("averaging needs a constant cross-section");
    }
    if u.levels.iter().any(|l| l.len() != mesh.n_voxels()) {
        return invalid("time series does not match the mesh");
    }
    let x = (0..ns).map(|k| mesh.slice_coordinate(k)).collect();
    let values = u
        .levels
        .iter()
        .map(|lev| {
            (0..ns)
                .map(|k| lev[mesh.slice(edge, k)].iter().sum::<f64>() / per as f64)
                .collect()
        })
        .collect();
    Ok(EdgeAverage { edge, x, values })
}
