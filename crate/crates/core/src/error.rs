use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target concentration {target} is unreachable: {reason}")]
    UnreachableConcentration { target: f64, reason: String },

    #[error("infeasible balance sheet: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("calibration did not converge: {0}")]
    NonConvergence(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
