use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("validation failed: {what} (residual {residual:.3e})")]
    ValidationFailed { what: String, residual: f64 },

    #[error("{re}{im:+}i is not an eigenvalue (nearest distance {distance:.3e})")]
    NotAnEigenvalue { re: f64, im: f64, distance: f64 },

    #[error("unsupported realization: {0}")]
    UnsupportedRealization(String),

    #[error("step rejected at t = {time}: invariant residual {residual:.3e} (reduce dt)")]
    StepRejected { time: f64, residual: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("search budget exhausted, best residual {best_residual:.3e}")]
    BudgetExhausted { best_residual: f64 },

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Module-qualified error code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "input.invalid",
            Error::ValidationFailed { .. } => "validation.failed",
            Error::NotAnEigenvalue { .. } => "decomposition.not_an_eigenvalue",
            Error::UnsupportedRealization(_) => "simulator.unsupported_realization",
            Error::StepRejected { .. } => "simulator.step_rejected",
            Error::InsufficientSamples(_) => "reach.insufficient_samples",
            Error::BudgetExhausted { .. } => "reach.budget_exhausted",
            Error::Parse { .. } => "spec.parse_error",
            Error::Io(_) => "io.error",
        }
    }

    pub(crate) fn validation(what: impl Into<String>, residual: f64) -> Self {
        Error::ValidationFailed {
            what: what.into(),
            residual,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
