use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured cap (primes, scan length, exponents, bignum size) was hit.
    #[error("resource limit: {0}")]
    Resource(String),
    /// An interval comparison stayed ambiguous after every precision escalation.
    #[error("undecidable at {bits} bits: {what}")]
    Undecidable { what: String, bits: u32 },
    /// A proven property failed to hold; this is a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn resource(msg: impl Into<String>) -> Error {
    Error::Resource(msg.into())
}

pub(crate) fn invariant(msg: impl Into<String>) -> Error {
    Error::Invariant(msg.into())
}
