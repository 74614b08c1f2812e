use thiserror::Error;

/// Errors raised by grid, state, and propagation operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Incompatible configuration (scheme/boundary mismatch, unstable step, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// Field length does not match the grid or trajectory shape.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    /// Input is degenerate for the requested operation (zero field, unnormalized state, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A requested tolerance or step size is outside the reliable range.
    #[error("unreliable tolerance: {0}")]
    Tolerance(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: usize, actual: usize) -> Self {
        Error::Shape { expected, actual }
    }
}
