//! JSON problem configuration and its validated runtime form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::{DataFunctions, Expr};
use super::geometry::{CrossSectionProfile, Edge, JunctionGeometry, ProfileKind};
use super::grid::TimeGrid;
use super::nonlinearity::{EdgeNonlinearity, NonlinearitySet, Preset, ScalarNonlinearity};
use super::regime::{classify_regime, RegimeParams};
use crate::error::{Error, Result};

/// Shipped default study configuration (regime A, smooth data).
pub const DEFAULT_CONFIG: &str = include_str!("../../../../configs/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    /// `(x, size)` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub length: f64,
    pub profile: ProfileConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub ell0: f64,
    pub edges: [EdgeConfig; 3],
    #[serde(default)]
    pub circular_as_square: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub k: serde_json::Value,
    pub kappa0: serde_json::Value,
    pub kappa: [serde_json::Value; 3],
    pub k_plus: f64,
    #[serde(default)]
    pub k_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub f: Expr,
    pub phi0: Expr,
    pub phi: [Expr; 3],
}

/// Grid parameters for the individual solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    /// Finite-volume cells per edge for graph problems.
    pub graph_cells: usize,
    /// Voxel size of the inner cell problems.
    pub cell_hv: f64,
    /// Truncation radius of the inner cell problems.
    pub cell_radius: f64,
    /// Voxels across the thinnest edge in the 3D reference solver.
    pub junction_resolution: usize,
    /// Quadrature points on cross-section contours.
    pub contour_points: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            graph_cells: 256,
            cell_hv: 1.0 / 16.0,
            cell_radius: 8.0,
            junction_resolution: 4,
            contour_points: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticOptions {
    /// Cutoff exponent, strictly inside (2/3, 1).
    pub a: f64,
    /// Weight the edge slopes in the V formulas by the port areas.
    pub v_formula_area_weights: bool,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self {
            a: 0.75,
            v_formula_area_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub geometry: GeometryConfig,
    pub regime: RegimeConfig,
    pub nonlinearities: NonlinearityConfig,
    pub data: DataConfig,
    pub time: TimeGrid,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub asymptotics: AsymptoticOptions,
}

impl ProblemConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn default_study() -> Self {
        Self::from_json_str(DEFAULT_CONFIG).expect("shipped default config parses")
    }

    pub fn build(&self) -> Result<Problem> {
        Problem::from_config(self)
    }
}

/// Validated problem ready for the solvers.
#[derive(Debug, Clone)]
pub struct Problem {
    pub geometry: JunctionGeometry,
    pub regime: RegimeParams,
    pub nonlinearities: NonlinearitySet,
    pub data: DataFunctions,
    pub time: TimeGrid,
    pub discretization: Discretization,
    pub asymptotics: AsymptoticOptions,
}

fn parse_preset(v: &serde_json::Value, slot: &str) -> Result<Preset> {
    if v.get("preset").and_then(|p| p.as_str()) == Some("custom") {
        return Err(Error::Config(format!(
            "{slot}: custom nonlinearities are only available through the library API"
        )));
    }
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("{slot}: {e}")))
}

fn build_profile(p: &ProfileConfig, slot: &str) -> Result<CrossSectionProfile> {
    let r = match (&p.size, &p.table) {
        (Some(s), None) => CrossSectionProfile::constant(p.kind, *s),
        (None, Some(t)) => CrossSectionProfile::tabulated(
            p.kind,
            t.iter().map(|r| r[0]).collect(),
            t.iter().map(|r| r[1]).collect(),
        ),
        _ => {
            return Err(Error::Config(format!(
                "{slot}: give exactly one of `size` or `table`"
            )))
        }
    };
    r.map_err(|e| Error::Config(format!("{slot}: {e}")))
}

impl Problem {
    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        let g = &cfg.geometry;
        let mk_edge = |i: usize| -> Result<Edge> {
            Ok(Edge {
                length: g.edges[i].length,
                profile: build_profile(&g.edges[i].profile, &format!("edge {}", i + 1))?,
            })
        };
        let mut geometry = JunctionGeometry::new(g.ell0, [mk_edge(0)?, mk_edge(1)?, mk_edge(2)?])
            .map_err(|e| Error::Config(e.to_string()))?;
        geometry.circular_as_square = g.circular_as_square;

        let regime = classify_regime(cfg.regime.alpha, cfg.regime.beta)
            .map_err(|e| Error::Config(e.to_string()))?;
        regime.require_supported()?;

        let n = &cfg.nonlinearities;
        if !(n.k_plus.is_finite() && n.k_plus > 0.0) {
            return Err(Error::Config("k_plus must be positive".into()));
        }
        let nonlinearities = NonlinearitySet {
            k: ScalarNonlinearity::Preset(parse_preset(&n.k, "k")?),
            kappa0: ScalarNonlinearity::Preset(parse_preset(&n.kappa0, "kappa0")?),
            kappa: [
                EdgeNonlinearity::Preset(parse_preset(&n.kappa[0], "kappa1")?),
                EdgeNonlinearity::Preset(parse_preset(&n.kappa[1], "kappa2")?),
                EdgeNonlinearity::Preset(parse_preset(&n.kappa[2], "kappa3")?),
            ],
            k_plus: n.k_plus,
            k_minus: n.k_minus,
        };

        let time = TimeGrid::new(cfg.time.horizon, cfg.time.steps)
            .map_err(|e| Error::Config(e.to_string()))?;
        let data = DataFunctions::from_exprs(&cfg.data.f, &cfg.data.phi0, &cfg.data.phi, time.horizon)?;

        let a = cfg.asymptotics.a;
        if !(a > 2.0 / 3.0 && a < 1.0) {
            return Err(Error::Config(format!("cutoff exponent a = {a} must lie in (2/3, 1)")));
        }
        let d = &cfg.discretization;
        if d.graph_cells < 3 || !(d.cell_hv > 0.0) || d.junction_resolution < 4 {
            return Err(Error::Config("invalid discretization block".into()));
        }
        Ok(Self {
            geometry,
            regime,
            nonlinearities,
            data,
            time,
            discretization: *d,
            asymptotics: cfg.asymptotics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::regime::Regime;

    #[test]
    fn default_config_builds() {
        let p = ProblemConfig::default_study().build().unwrap();
        assert_eq!(p.regime.regime, Regime::A);
        assert_eq!(p.time.steps, 200);
    }

    #[test]
    fn custom_preset_rejected() {
        let mut cfg = ProblemConfig::default_study();
        cfg.nonlinearities.k = serde_json::json!({"preset": "custom"});
        let err = cfg.build().unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("custom"));
    }

    #[test]
    fn unsupported_regime_rejected() {
        let mut cfg = ProblemConfig::default_study();
        cfg.regime.alpha = [0.0, 0.5, 1.0, 1.0];
        assert!(matches!(cfg.build(), Err(Error::Unsupported(_))));
    }
}
