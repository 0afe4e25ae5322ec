use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("missing artifact: {0}")]
    Missing(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) | CliError::Io(_) => 2,
            CliError::Missing(_) => 3,
        }
    }
}

impl From<clockvmc::error::Error> for CliError {
    fn from(e: clockvmc::error::Error) -> Self {
        use clockvmc::error::Error as E;
        match e {
            E::Domain(_) | E::DenseCap { .. } | E::Format(_) => CliError::Config(e.to_string()),
            E::Io(io) => CliError::Io(io),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e.to_string()))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e.to_string()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
