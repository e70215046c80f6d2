use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] sinr_core::Error),
    #[error("verification failed:\n  {}", .0.join("\n  "))]
    Verification(Vec<String>),
}

impl CliError {
    /// 0 is success; 1 is a verification or feasibility failure; 2 is bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Json { .. } | CliError::Input(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) | CliError::Verification(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
