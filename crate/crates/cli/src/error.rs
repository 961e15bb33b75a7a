use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const UNSUPPORTED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: modalbridge::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("validation failed: {0}")]
    Validation(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use modalbridge::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Model { source, .. } => match source {
                E::Parameter { .. } | E::Syntax { .. } | E::UnknownIdentifier { .. } => exit::CONFIG,
                E::Unsupported(_) => exit::UNSUPPORTED,
                E::Domain(_) | E::NonConvergence { .. } | E::NotPositiveDefinite { .. } | E::Evaluation(_) => {
                    exit::NUMERICAL
                }
            },
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Attach a location (config block or operation) to library errors.
pub(crate) trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for modalbridge::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Model {
            context: what.to_string(),
            source,
        })
    }
}
