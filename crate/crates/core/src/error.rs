use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation: {family} is not defined at x = {x}")]
    DomainViolation { family: String, x: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("singular design: {0}")]
    SingularGrid(String),

    #[error("could not parse function spec `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn domain(family: impl Into<String>, x: f64) -> Self {
        Error::DomainViolation {
            family: family.into(),
            x,
        }
    }

    pub(crate) fn too_few(needed: usize, have: usize) -> Self {
        Error::InsufficientSamples(format!("need at least {needed}, have {have}"))
    }

    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
