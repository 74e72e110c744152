//! Error type shared across the pipeline stages.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Malformed or missing input data (bad header, missing metadata file, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Recognized container but an unsupported variant (e.g. Y4M chroma mode).
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// Caller passed values that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input too small or empty for the operation to be meaningful.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Bad configuration value or unknown configuration key.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage failed; carries the stage name for diagnostics.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
