use thiserror::Error;

/// Errors raised across the relay laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input vectors have incompatible lengths or shapes.
    #[error("input shape: {0}")]
    InputShape(String),
    /// A parameter is outside its valid domain.
    #[error("configuration: {0}")]
    Config(String),
    /// An end node was asked to act without the state it needs.
    #[error("node state: {0}")]
    State(String),
    /// The queue chain has no unique stationary distribution.
    #[error("non-ergodic chain: {0}")]
    NonErgodic(String),
    /// A numerical routine failed to produce a finite answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonErgodic(_) | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
