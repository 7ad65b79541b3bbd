//! Error type shared by the numerical modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NoiseError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    /// An argument lies outside the domain of the quantity being evaluated.
    #[error("{quantity} out of domain: {value} ({reason})")]
    Domain {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Impedance (or admittance) matrix is not anti-Hermitian within tolerance.
    #[error("matrix is not reactive: relative residual |Z + Z^H| / |Z| = {residual:e}")]
    NonReactive { residual: f64 },

    #[error("(z + 1) is numerically singular: condition estimate {condition:e}")]
    Singular { condition: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown port or line `{0}`")]
    UnknownLine(String),

    #[error("line `{0}` enters the readout conjugated and cannot be used as a port")]
    ConjugatedPort(String),

    #[error("gain magnitude {0} is below unity; model attenuation as a passive network")]
    GainBelowUnity(f64),

    #[error("signal coefficient is zero: the estimator is undefined")]
    ZeroSignal,

    #[error("noise pair violates the Heisenberg bound: occupation {occupation} < 1/2")]
    Heisenberg { occupation: f64 },

    #[error("input lines {0} and {1} are correlated; per-source budgets need uncorrelated inputs")]
    CorrelatedInputs(String, String),

    #[error("invalid model: {0}")]
    Model(String),
}

pub(crate) fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(NoiseError::Domain {
            quantity,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn non_negative(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(NoiseError::Domain {
            quantity,
            value,
            reason: "must be non-negative and finite",
        })
    }
}
