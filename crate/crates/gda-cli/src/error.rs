use gda_core::Error as CoreError;

/// CLI failure modes, each mapped to a documented process exit code:
/// configuration problems exit 2, external-solver problems exit 3, and
/// runtime or invariant failures exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Solver(String),

    #[error("{0} invariant(s) failed; see the audit report")]
    AuditFailed(usize),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::AuditFailed(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) => CliError::Config(e.to_string()),
            CoreError::Solver(_) | CoreError::Certificate(_) => CliError::Solver(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
