use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A family of subspaces (or vectors) is numerically linearly dependent.
    #[error("linear dependence: {0}")]
    LinearDependence(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An ε-net failed its certification probe.
    #[error("net validity: {0}")]
    NetValidity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
