use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("integrator failed at t = {t} ns: {reason}")]
    IntegratorFailure { t: f64, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("no quasi-bound mode: {0}")]
    NoBoundMode(String),

    #[error("no side peaks available for normalization")]
    NoSidePeaks,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Returns an [`Error::InvalidParameter`] unless `value` is finite and `>= 0`.
pub(crate) fn ensure_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::invalid(name, format!("must be finite, got {value}")));
    }
    if value < 0.0 {
        return Err(Error::invalid(name, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::invalid(name, format!("must be > 0, got {value}")));
    }
    Ok(())
}
