//! Asymptotic approximations on the thin junction and their errors.
//!
//! The regular terms `omega_n` live on the edges and are blended with the inner terms
//! `N_n(x / eps, t)` of the node through cutoffs switching on at distance
//! `2 l0 eps^a .. 3 l0 eps^a` from the vertex. Error norms compare the blended field
//! with a reference solution on the same voxel mesh; orders are fitted in log-log.

pub mod approx;
pub mod errors;
pub mod inner;
pub mod rates;

pub use approx::{
    assemble_u, ApproxOrder, ApproximationField, AsymptoticTerms, Provenance, VERTEX_TRACE_TOL,
};
pub use errors::{average_e, error_norms, EdgeAverage, ErrorEntry};
pub use inner::InnerSeries;
pub use rates::{
    check_cutoff_exponent, cutoff_chi, cutoff_chi_derivative, fit_eoc, mu_of_epsilon,
    running_orders, OrderFit, DEFAULT_A,
};
