use thiserror::Error;

/// Errors raised by the library and surfaced by the command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outcome y={outcome} has zero marginal probability; conditioning on it is undefined")]
    DegenerateOutcome { outcome: usize },

    #[error("every action has zero probability under the induced distribution")]
    DegeneratePolicy,

    #[error("cannot estimate a model from an empty dataset without smoothing")]
    DegenerateEstimate,

    #[error("observation has zero likelihood under every support model")]
    ImpossibleObservation,

    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Schema(_) => 2,
            Error::DegenerateOutcome { .. }
            | Error::DegeneratePolicy
            | Error::DegenerateEstimate
            | Error::ImpossibleObservation => 3,
            Error::Io(_) => 4,
            Error::Json(_) | Error::Csv(_) => 5,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
