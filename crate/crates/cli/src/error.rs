use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_METHOD: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] ensemblekit::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use ensemblekit::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::UnknownStrategy { .. } | E::InvalidParam(_)) => EXIT_CONFIG,
            CliError::Core(e) if e.is_data_error() => EXIT_DATA,
            CliError::Core(E::SingleClass(_) | E::ClassTooSmall { .. } | E::Empty(_)) => EXIT_DATA,
            CliError::Core(_) => EXIT_METHOD,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
