//! Inner-layer problems on the truncated unbounded junction domain.
//!
//! The domain is the node box with three straight square outlets cut at distance
//! `R`, voxelised exactly. The special solutions (Neumann pair, Robin triple) grow
//! linearly in the outlets and are realised by prescribed end-cap fluxes; the
//! inhomogeneous remainders decay exponentially and get homogeneous caps.

pub mod export;
pub mod inner;
pub mod mesh;
pub mod operator;

pub use export::{write_far_field_json, write_field_binary, write_field_slice_csv, DenseField};
pub use inner::{
    compute_delta_green, inner_bc, inner_rhs_for, solve_inner, InnerCutoff, InnerInputs, InnerRhs,
    InnerSolution, SpecialSolutions, SOLVABILITY_TOL,
};
pub use mesh::{
    boundary_measures, build_inner_mesh, BoundaryFacet, BoundaryMeasures, FacetKind,
    InnerDomainSpec, Outlet, Region, VoxelMesh,
};
pub use operator::{
    far_field, solve_special_neumann, solve_special_robin, special_neumann, special_robin, CellBc,
    CellField, CellOperator, FarFieldReport, OutletFarField,
};
