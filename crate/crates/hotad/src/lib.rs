//! Benchmark and verification front end for `hotad-core`.

pub mod bench;
pub mod check;
pub mod cli;

use hotad_core::DEFAULT_DENSE_CAP;

/// Environment variable overriding the dense-tensor cap.
pub const DENSE_CAP_VAR: &str = "HOTAD_DENSE_CAP";

/// Errors surfaced by the commands, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hotad_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hotad_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::UnknownProblem(_) | E::Parameter(_)) => 2,
            _ => 3,
        }
    }
}

/// The dense cap from [`DENSE_CAP_VAR`], or the library default.
pub fn dense_cap_from_env() -> Result<u128, CliError> {
    match std::env::var(DENSE_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|c| c.is_finite() && *c >= 1.0)
            .map(|c| c as u128)
            .ok_or_else(|| CliError::Usage(format!("{DENSE_CAP_VAR}: not a positive number: {v}"))),
        Err(_) => Ok(DEFAULT_DENSE_CAP),
    }
}
