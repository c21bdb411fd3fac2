use thiserror::Error;

use crate::spectroscopy::FitError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension {0} is not supported (only 2 or 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not unitary (max |U†U - I| = {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("operator is not Hermitian (max asymmetry = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("expectation value has imaginary part {0:e}")]
    NonRealExpectation(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("environment state must be diagonal in the σz basis for the closed form")]
    NonDiagonalEnvironment,

    #[error("timeline needs DD pulses, kicks, or both")]
    EmptyTimeline,

    #[error("averaged evolution supports only ideal π pulses on the system qubit")]
    UnsupportedPulse,

    #[error("linear system is singular (pivot {pivot:e} at rank {rank})")]
    SingularSystem { rank: usize, pivot: f64 },

    #[error("reconstruction residual {residual:e} exceeds {threshold:e}")]
    ResidualTooLarge { residual: f64, threshold: f64 },

    #[error("all {n} sweep points failed to fit")]
    AllPointsFailed { n: usize },

    #[error(transparent)]
    Fit(#[from] FitError),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
