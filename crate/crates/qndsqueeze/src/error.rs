use std::io;

use qndsqueeze_core::Error as CoreError;

/// Exit code for bad input or configuration.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for a numerical-invariant violation.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code when a run completes but misses its acceptance threshold.
pub const EXIT_THRESHOLD: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Threshold(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::Threshold(_) => EXIT_THRESHOLD,
            CliError::Io(_) => 1,
        }
    }
}
