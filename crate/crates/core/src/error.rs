use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown level `{label}` in subsystem `{subsystem}`")]
    UnknownLevel { subsystem: String, label: String },

    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("mixing angle undefined at t = {0}: both pulse amplitudes vanish")]
    DegenerateAngle(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("step size underflow at t = {t} (h = {h:e}, error norm {err:e})")]
    StepSize { t: f64, h: f64, err: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
