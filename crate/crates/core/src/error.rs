//! Error type shared by all modules.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the admissible set of the model (bad exponents, bad geometry, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration file could not be turned into a problem.
    #[error("configuration error: {0}")]
    Config(String),

    /// The exponent combination belongs to a case the solvers do not cover.
    #[error("unsupported regime: {0}")]
    Unsupported(String),

    /// Newton iteration failed to converge.
    #[error("Newton iteration did not converge at step {step} (t = {time}): residual {residual:e} after {iterations} iterations")]
    NewtonFailure {
        step: usize,
        time: f64,
        iterations: usize,
        residual: f64,
    },

    /// Iterative linear solver breakdown or stagnation.
    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    /// A Neumann-type inner problem violates its compatibility condition.
    #[error("solvability condition violated: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Solvability { residual: f64, tolerance: f64 },

    /// A computation was requested before the terms it depends on.
    #[error("dependency error: {0}")]
    Dependency(String),

    /// A pipeline stage failed; carries the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the name of the stage that produced it.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the input rather than by a solver.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Unsupported(_) | Error::Json(_) => {
                true
            }
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
