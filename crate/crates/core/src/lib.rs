//! Solvers for semilinear parabolic problems on thin star-shaped junctions.
//!
//! The crate is organised along the asymptotic construction:
//!
//! * [`model`] holds the problem statement (geometry, exponents, nonlinearities, data).
//! * [`graph`] solves the one-dimensional limit and corrector problems on the star graph.
//! * [`cell`] solves the inner-layer problems on the truncated unbounded junction.
//! * [`junction`] is the full three-dimensional reference solver on the thin domain.
//! * [`assembly`] blends regular and inner terms into approximations and measures errors.
//! * [`harness`] orders the computations, runs convergence studies and validation suites.

pub mod assembly;
pub mod cell;
pub mod error;
pub mod graph;
pub mod harness;
pub mod junction;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
