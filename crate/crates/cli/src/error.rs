use std::fmt;

use dirichlet_lab::LabError;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags, config or arguments rejected by a precondition.
    Config(String),
    /// A computation failed after validation.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::NonConvergence { .. } | LabError::SolverFailure { .. } | LabError::NonFinite(_) => {
                CliError::Compute(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(format!("i/o: {e}"))
    }
}
