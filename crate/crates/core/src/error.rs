use thiserror::Error;

/// Errors produced by the lattice, kernel, energy and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A point, field or table does not belong to the expected lattice box.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An operation precondition does not hold for the supplied input.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The model failed one of the structural hypotheses.
    #[error("model rejected: ({hypothesis}) {detail}")]
    ModelRejected { hypothesis: String, detail: String },
    /// Observed behaviour contradicts what an admissible model guarantees.
    #[error("model violation: {0}")]
    ModelViolation(String),
    /// No solver start reached the stopping criteria.
    #[error("no start converged: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
