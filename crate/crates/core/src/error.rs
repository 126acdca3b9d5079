use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid game structure: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
