use thiserror::Error;

/// Errors produced while building boundaries, evaluating kernels or reducing diffusions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("start point {x0} is not strictly inside the band ({lower}, {upper}) at t = 0")]
    StartOutsideBand { x0: f64, lower: f64, upper: f64 },

    #[error("boundary evaluation failed at t = {t}: {reason}")]
    Evaluation { t: f64, reason: String },

    #[error("invalid boundaries: {0}")]
    InvalidBoundaries(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("index {index} out of range ({detail})")]
    IndexOutOfRange { index: usize, detail: String },

    #[error("numeric failure: {0}")]
    NumericFailure(String),
}

pub type Result<T> = std::result::Result<T, BcpError>;

impl BcpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        BcpError::InvalidArgument(msg.into())
    }
}
