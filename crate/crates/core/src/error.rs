use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dense operation was requested above the configured dimension cap.
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DenseCap { dim: usize, cap: usize },

    /// Eigensolver or other numerical failure.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The ground space is (numerically) degenerate.
    #[error("spectral gap {gap:e} above the ground energy is below {min:e}")]
    Degenerate { gap: f64, min: f64 },

    /// Every configuration in a batch had zero amplitude.
    #[error("no sample with nonzero amplitude ({excluded} excluded)")]
    EmptyEstimate { excluded: usize },

    /// The sampler could not find a configuration with nonzero amplitude.
    #[error("sampler found no configuration with nonzero amplitude after {0} attempts")]
    SamplerStuck(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
