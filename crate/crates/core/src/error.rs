use thiserror::Error;

/// Errors raised by the pricing toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration value breaks a type invariant.
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    /// A quantity was requested in a state where it is undefined (e.g. an empty scheme).
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// A menu or query sequence does not satisfy the screening constraints.
    #[error("contract violation: {0}")]
    ContractViolation(String),
    /// An internal guarantee failed; always a bug.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("instance too large: {what} = {value} exceeds {limit}")]
    SizeLimit { what: &'static str, value: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { field, reason: reason.into() }
}
