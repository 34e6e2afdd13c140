use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// A precondition on the inputs does not hold.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Cauchy problem has no solution on the requested domain, or lies
    /// too close to the blow-up boundary to be resolved on a grid.
    #[error("existence condition violated: margin {margin:e} (required > {required:e})")]
    ExistenceViolated { margin: f64, required: f64 },

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations: last change {last_change:e}, {detail}")]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        detail: String,
    },
}

impl LabError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::InvalidArgument(_) => "invalid_argument",
            LabError::ExistenceViolated { .. } => "existence_violated",
            LabError::NonConvergence { .. } => "non_convergence",
        }
    }
}
