use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("solver error: {0}")]
    Solver(#[from] capcert_core::Error),

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for unusable input, 3 for solver and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) | CliError::Output(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
