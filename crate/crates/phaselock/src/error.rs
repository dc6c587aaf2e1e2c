use std::path::PathBuf;

/// Problems with what the user asked for, before any mathematics runs.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },

    #[error("unsupported schema {found}, expected {expected}")]
    Schema { found: u64, expected: u64 },

    #[error("cannot evaluate expression {0:?}")]
    Expression(String),

    #[error("{0}")]
    Invalid(String),
}

/// Anything a subcommand can fail with, sorted by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Domain(#[from] phaselock_core::Error),

    /// A report assertion that did not hold.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Domain(_) | CliError::Check(_) => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Domain(e) => e.code(),
            CliError::Check(_) => "check_failed",
        }
    }
}
