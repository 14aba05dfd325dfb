use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A bounded search gave up without a certificate.
    #[error("unresolved: {0}")]
    Unresolved(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(
        "ħ = {hbar} is above ħ₀ = {hbar0} for component {component}: \
         N = {level} is below the conductor {conductor}"
    )]
    BelowConductor {
        component: usize,
        hbar: f64,
        hbar0: f64,
        level: i64,
        conductor: u64,
    },

    #[error("E not in Σ_ℋ: {0}")]
    NotInSigma(String),

    #[error("empty projection: {0}")]
    EmptyProjection(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
