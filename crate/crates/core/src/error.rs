use thiserror::Error;

/// Errors from every layer of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("state is not defined on this grid")]
    GridMismatch,

    #[error("operation requires the co-moving frame")]
    FrameMismatch,

    #[error("component {0} has zero norm")]
    ZeroNorm(u8),

    #[error("mean spin length is consistent with zero")]
    ZeroSpinLength,

    #[error("non-finite value encountered at t = {time:.6e} s{}", trajectory.map(|t| format!(" (trajectory {t})")).unwrap_or_default())]
    NonFinite { time: f64, trajectory: Option<u64> },

    #[error("aliasing guard: momentum support {k_support:.3e} 1/m exceeds half Nyquist {k_limit:.3e} 1/m")]
    Aliasing { k_support: f64, k_limit: f64 },

    #[error("groundstate did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("at least {needed} trajectories required, got {got}")]
    InsufficientTrajectories { needed: usize, got: usize },

    #[error("signal slope is consistent with zero")]
    ZeroSlope,

    #[error("malformed pulse sequence: {0}")]
    MalformedSequence(String),

    #[error("incomplete results: {0}")]
    Incomplete(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
