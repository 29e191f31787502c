use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A set or index lies outside the carrier it is applied to.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a carrier do not.
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),

    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Exhaustive enumeration would exceed a size limit.
    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("internal error: {0}")]
    Internal(String),
}
