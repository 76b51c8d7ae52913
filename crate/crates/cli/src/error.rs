use firm_core::FirmError;
use thiserror::Error;

/// Exit status for bad command-line usage (clap uses the same value).
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable or invalid input files.
pub const EXIT_INPUT: i32 = 3;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefix the message with where it happened.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{ctx}: {m}")),
            CliError::Input(m) => CliError::Input(format!("{ctx}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{ctx}: {m}")),
            io => io,
        }
    }
}

impl From<FirmError> for CliError {
    fn from(e: FirmError) -> Self {
        match e {
            FirmError::SolverFailure { .. }
            | FirmError::NonPositiveVariance(_)
            | FirmError::UndefinedMeasure { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
