use thiserror::Error;

/// Failure of a subcommand; [`CliError::exit_code`] maps it to the process status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration.
    #[error("invalid config: {0}")]
    Config(String),
    /// Malformed input data such as a history CSV.
    #[error("parse error: {0}")]
    Parse(String),
    /// The numerical work failed; artifacts may be partial.
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
