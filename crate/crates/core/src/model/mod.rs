//! Problem statement: geometry, exponents, nonlinearities, data and grids.

pub mod config;
pub mod data;
pub mod geometry;
pub mod grid;
pub mod nonlinearity;
pub mod regime;

pub use config::{AsymptoticOptions, Discretization, Problem, ProblemConfig};
pub use data::{DataFunctions, Expr};
pub use geometry::{
    cross_section_data, CrossSectionProfile, Edge, JunctionGeometry, ProfileKind, ProfileShape,
    SectionData,
};
pub use grid::{EdgeGrid, TimeGrid};
pub use nonlinearity::{
    default_probes, validate_nonlinearities, Derivs, EdgeNonlinearity, NonlinearityReport,
    NonlinearitySet, Preset, Probe, ScalarNonlinearity,
};
pub use regime::{classify_regime, kron, Regime, RegimeParams};
