use thiserror::Error;

#[derive(Debug, Error)]
pub enum CfError {
    /// Input data violates a structural precondition (empty term list,
    /// a set that does not contain the origin, a non-convex function, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Parameters of a condition check are outside their admissible range.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// Parse / serialization problems on the CLI boundary.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CfError>;
