//! Error taxonomy shared by every module.
//!
//! Variants mirror the failure classes of the operation contracts:
//! configuration, domain, numeric, resource, model, range, statistics and
//! contract errors. The CLI maps all of them to exit code 1; statistical
//! *failures* (a fit that does not pass) are not errors and exit with 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent specification (bad moments, malformed config).
    #[error("configuration error: {0}")]
    Config(String),
    /// Parameter outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Numerical procedure failed to converge or produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Hard resource cap exceeded (enumeration sizes, spin counts).
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Inputs outside what the model supports (multiplicities, missing moments).
    #[error("model error: {0}")]
    Model(String),
    /// Lookup beyond a precomputed table.
    #[error("range error: {0}")]
    Range(String),
    /// Sample set unusable for the requested statistic.
    #[error("statistics error: {0}")]
    Statistics(String),
    /// Caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
