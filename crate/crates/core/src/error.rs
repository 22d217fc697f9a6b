use thiserror::Error;

/// Errors reported by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter combination that cannot describe a valid run.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// An argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request is well formed but exceeds what the operation will compute
    /// (enumeration guards, unresolvable quantiles).
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
