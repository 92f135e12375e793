use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameters or options that cannot be used together.
    #[error("configuration error: {0}")]
    Config(String),
    /// A documented precondition does not hold for the supplied input.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("state space too large: {states} states (limit {limit})")]
    StateSpace { states: u128, limit: u128 },
    #[error("singular system: {0}")]
    Singular(String),
    /// Strict-mode checks that cannot be honoured at the given parameters.
    #[error("refused: {0}")]
    Refused(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
