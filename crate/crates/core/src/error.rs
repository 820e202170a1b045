use thiserror::Error;

/// Errors raised by the bound machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MerspError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    /// No orientation/scaling makes the relaxation convex.
    #[error("ill-posed instance: {0}")]
    IllPosed(String),

    #[error("no well-posed subset of the requested size")]
    Infeasible,

    #[error("enumeration too large: {count} subsets exceeds the guard of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("instance generation failed: {0}")]
    GenerationFailed(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MerspError {
    fn from(e: std::io::Error) -> Self {
        MerspError::Io(e.to_string())
    }
}

impl MerspError {
    /// Process exit code: 2 for bad input, 3 for ill-posed instances,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            MerspError::Parse { .. }
            | MerspError::Io(_)
            | MerspError::InvalidArgument(_)
            | MerspError::TooLarge { .. } => 2,
            MerspError::NotPositiveDefinite(_)
            | MerspError::DomainError(_)
            | MerspError::DegenerateInstance(_)
            | MerspError::IllPosed(_)
            | MerspError::Infeasible => 3,
            MerspError::NumericalFailure(_) | MerspError::GenerationFailed(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, MerspError>;
