use std::io;
use std::path::{Path, PathBuf};

/// Exit status for a malformed or inconsistent configuration.
pub const EXIT_CONFIG: u8 = 65;
/// Exit status for unreadable inputs or unwritable outputs.
pub const EXIT_IO: u8 = 74;
/// Exit status when at least one search ended without finding the link.
pub const EXIT_EXHAUSTED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("search exhausted without finding the link in {failures} of {trials} trials")]
    Exhausted { failures: u64, trials: u64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Exhausted { .. } => EXIT_EXHAUSTED,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<beamtrain::Error> for CliError {
    fn from(e: beamtrain::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
