use thiserror::Error;

/// Errors raised across the library.
///
/// The variants are grouped so the CLI can map them onto exit codes:
/// parameter/regime problems, numerical instability, and everything else.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's domain, or outside the asymptotic regime
    /// a parameter selection is defined for.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("series did not converge after {terms} terms (last tail estimate {last_tail:e})")]
    NonConvergence { terms: usize, last_tail: f64 },

    /// A recursion or fixed point left its stable region.
    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("estimated memory {needed} bytes exceeds limit {limit} bytes")]
    MemoryLimit { needed: u64, limit: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for parameter, regime and resource problems,
    /// 3 for numerical instability, 1 for I/O and serialization failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::MemoryLimit { .. } => 2,
            Error::Instability(_) | Error::NonConvergence { .. } => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
