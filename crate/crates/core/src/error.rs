use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector shapes are incompatible with the operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A parameter value is outside the accepted range.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Inputs are syntactically valid but outside the supported domain
    /// (for example a sample count below the minimum the formulas require).
    #[error("domain error: {0}")]
    Domain(String),
    /// Input data failed a structural check (orthonormality, symmetry,
    /// normalization, finiteness).
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical routine could not produce a usable result.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The call is missing information it needs (for example labels).
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
