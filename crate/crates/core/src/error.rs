//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A column cannot be standardized (zero variance or zero norm).
    #[error("column {index} is degenerate: {reason}")]
    DegenerateColumn { index: usize, reason: &'static str },

    /// More coefficients were requested than rows are available.
    #[error("support of size {support} exceeds the {n} available rows")]
    OverParameterized { support: usize, n: usize },

    /// A covariance block that must be inverted is singular or has a
    /// condition number beyond 1e12.
    #[error("singular or ill-conditioned block: {context}")]
    SingularBlock { context: String },

    /// An exhaustive enumeration would visit more subsets than allowed.
    #[error("{required} candidate subsets exceed the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    /// A covariance specification does not define a valid covariance matrix.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// The design is too degenerate for the requested quantity.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
}

pub type Result<T> = std::result::Result<T, Error>;
