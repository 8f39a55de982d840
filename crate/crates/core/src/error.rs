use thiserror::Error;

/// Errors raised across the crate.
///
/// Verification failures are never errors: they are carried as report
/// content. Errors are reserved for malformed input, exhausted resource
/// caps and requests outside a certificate's certified scope.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("resource cap exceeded: {what} needs more than {cap} elements")]
    ResourceCap { what: String, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("outside certified scope: {0}")]
    Scope(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("component at level {level} is unbounded (infinite quotient)")]
    UnboundedComponent { level: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
