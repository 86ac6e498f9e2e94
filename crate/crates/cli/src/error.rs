//! CLI error classes mapped onto process exit codes.

use std::fmt;

/// Exit codes: 0 success, 2 input error, 3 non-convergence,
/// 4 verification breach.
#[derive(Debug, Clone)]
pub enum CliError {
    /// Bad usage, unreadable/invalid files, inconsistent configuration.
    Input(String),
    /// The solver exhausted its step halvings or hit non-finite state.
    NonConvergence(String),
    /// A verification check exceeded its tolerance.
    VerificationBreach(String),
}

impl CliError {
    pub fn input(message: String) -> Self {
        CliError::Input(message)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::VerificationBreach(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::NonConvergence(m) => write!(f, "did not converge: {m}"),
            CliError::VerificationBreach(m) => write!(f, "verification breach: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
