use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (unknown identifiers, bad probabilities, ...).
    #[error("input error: {0}")]
    Input(String),

    /// An exhaustive enumeration would exceed its configured size limit.
    #[error("capacity error: {what} is {actual}, limit is {limit}")]
    Capacity {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    /// Conditioning on an observation that has probability zero.
    #[error("conditioning error: observation has zero probability")]
    Conditioning,

    #[error("degenerate bound: {0}")]
    DegenerateBound(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn capacity(what: &'static str, actual: usize, limit: usize) -> Self {
        Error::Capacity {
            what,
            actual,
            limit,
        }
    }

    pub(crate) fn check_cap(what: &'static str, actual: usize, limit: usize) -> Result<()> {
        if actual > limit {
            Err(Self::capacity(what, actual, limit))
        } else {
            Ok(())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
