use thiserror::Error;

/// Errors raised across the crate.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameter `{key}` = {value}: expected {expected}")]
    InvalidParams {
        key: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("argument `{arg}` = {value} outside the domain {expected}")]
    Domain {
        arg: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("singular evaluation at r = 0")]
    Singular,

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (partial estimate {estimate:e}, error bound {abs_err:e})"
    )]
    Quadrature {
        estimate: f64,
        abs_err: f64,
        subdivisions: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not in the domain")]
    NotInDomain,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("no interior ball witness needed or available: {0}")]
    NoWitness(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Green function is not integrable: {0}")]
    NonIntegrable(&'static str),

    #[error("incompatible configuration: {0}")]
    Incompatible(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
