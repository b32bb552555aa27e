//! Full three-dimensional reference solver on the thin junction `Omega_eps`.
//!
//! The domain is voxelised exactly (box node, square prisms), time is discretised
//! by implicit Euler and each step is solved by Newton's method with a
//! preconditioned conjugate-gradient inner solver.

pub mod mesh;
pub mod norms;
pub mod solver;

pub use mesh::{
    build_junction_mesh, JunctionFacet, JunctionFacetKind, JunctionMesh, MAX_EPSILON, MAX_VOXELS,
    MIN_RESOLUTION,
};
pub use norms::{
    cell_gradient, difference_norm, field_norm, node_smallness, norm_levels, region_mask,
    spatial_sq, summarize, write_junction_field_binary, write_summary_json, JunctionSummary,
    NormKind, NormRegion,
};
pub use solver::{
    operator_pairing, solve_junction, solve_on_mesh, JunctionOperator, JunctionRun,
    JunctionStepper, RunStats, SampledData, StepStats, TimeSeriesField, NEWTON_MAX_ITER,
    NEWTON_TOL,
};
