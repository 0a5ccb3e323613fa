use thiserror::Error;

/// Errors raised by the path construction and certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("t = {t} lies outside the domain ({lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("pipeline failed at stage `{stage}`: {message}")]
    Pipeline { stage: &'static str, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
