use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// Conditioning, factorization or PSD repair failed. `round` is filled in
    /// by callers that know which optimization round was being processed.
    #[error("numerical error{}: {message}", round.map(|r| format!(" in round {r}")).unwrap_or_default())]
    Numerical { round: Option<usize>, message: String },

    #[error("domain too large for exact enumeration: {states} states exceeds {limit}")]
    TooLarge { states: u128, limit: u128 },

    #[error("index {index} out of range for a domain of {size} points")]
    IndexOutOfRange { index: usize, size: usize },
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            round: None,
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    /// Attaches the optimization round to a numerical error.
    pub fn in_round(self, t: usize) -> Self {
        match self {
            Error::Numerical { message, .. } => Error::Numerical {
                round: Some(t),
                message,
            },
            other => other,
        }
    }
}
