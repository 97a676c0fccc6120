use thiserror::Error;

/// Errors raised by the library. Every variant is a domain error: the CLI maps
/// all of them to exit code 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("species error: {0}")]
    Species(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("test not applicable: {0}")]
    InapplicableTest(String),
    #[error("rank undefined: {0}")]
    RankUndefined(String),
    #[error("ambiguous rank: {0}")]
    AmbiguousRank(String),
    #[error("width undefined: {0}")]
    WidthUndefined(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
