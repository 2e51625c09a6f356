use thiserror::Error;

/// Errors across the solver/verification pipeline.
#[derive(Debug, Error)]
pub enum EdlError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("level-set extraction error: {0}")]
    Extraction(String),

    #[error("solver did not converge: relative residual {final_residual:.3e} after {iterations} iterations")]
    NonConvergence {
        final_residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("check failed: {0}")]
    CheckFailure(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EdlError {
    /// Process exit code contract: 0 = all pass, 1 = check failure,
    /// 2 = configuration error, 3 = numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            EdlError::CheckFailure(_) => 1,
            EdlError::NonConvergence { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, EdlError>;
