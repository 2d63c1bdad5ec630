use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The graph handed to the spanning-tree decomposition is not connected.
    #[error("graph is disconnected into {} components: {components:?}", components.len())]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag used by the CLI error line and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InvalidData(_) => "invalid-data",
            Error::InvalidState(_) => "invalid-state",
            Error::Disconnected { .. } => "structural",
            Error::UndefinedRatio(_) => "undefined-ratio",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }
}
