use thiserror::Error;

/// Errors raised by the estimation and classification kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpikeError {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The noise-reduced eigenvalue of the named (1-based) component vanished.
    #[error("degenerate spike at component {component}: noise-reduced eigenvalue {value:e} is not positive")]
    DegenerateSpike { component: usize, value: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),
}

pub type Result<T> = std::result::Result<T, SpikeError>;
