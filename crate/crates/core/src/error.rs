use thiserror::Error;

/// Errors raised by the simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZenoError {
    /// An argument is out of range, non-finite or otherwise malformed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The arguments are valid numbers but fall outside the regime where
    /// the requested quantity is defined (e.g. an underdamped decay rate).
    #[error("domain error: {0}")]
    Domain(String),
    /// A simulation configuration violates a step-size or consistency guard.
    #[error("configuration error: {0}")]
    Configuration(String),
}

impl ZenoError {
    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            ZenoError::InvalidArgument(_) => "invalid-argument",
            ZenoError::Domain(_) => "domain",
            ZenoError::Configuration(_) => "configuration",
        }
    }
}

pub type Result<T, E = ZenoError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> ZenoError {
    ZenoError::InvalidArgument(msg.into())
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {x}")))
    }
}
