//! Orchestration: dependency-ordered term computation, convergence studies,
//! validation suites and report output.

pub mod plot;
pub mod scheduler;
pub mod study;
pub mod validate;

pub use scheduler::{cell_operator, run_term_scheduler, StageRecord, TermBundle};
pub use study::{
    convergence_csv, run_convergence, ConvergenceReport, StudyFits, StudyPlan, StudyRow,
    Synthetic, FIELD_EXTENT,
};
pub use validate::{run_validation, Bound, Check, ValidationReport};
