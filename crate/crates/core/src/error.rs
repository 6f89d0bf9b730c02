//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by parameter derivation, gain synthesis, reference
/// generation and closed-loop simulation.
#[derive(Debug, Error)]
pub enum VesselError {
    /// A value is outside the domain required by a formula (non-positive
    /// mass, non-positive time step, ...).
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// The reference trajectory or its inputs violate the standing
    /// boundedness/persistence assumption.
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    /// One or more hard gain inequalities failed during synthesis.
    #[error("gain constraints violated: {}", failures.join("; "))]
    ConstraintViolation { failures: Vec<String> },

    /// An assembled control input exceeded its actuator ceiling. This
    /// signals a misconfigured ceiling or a violated budget condition.
    #[error(
        "saturation budget exceeded at s={time}: |{channel}|={value:.6e} > ceiling {ceiling:.6e}"
    )]
    SaturationBudget {
        time: f64,
        channel: &'static str,
        value: f64,
        ceiling: f64,
    },

    /// The integrator produced a non-finite state or the state magnitude
    /// exceeded the divergence guard.
    #[error("simulation diverged at s={time}")]
    Divergence { time: f64 },

    /// Malformed input data (non-uniform sampling, ragged series, ...).
    #[error("input format error: {0}")]
    InputFormat(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl VesselError {
    pub fn domain(msg: impl Into<String>) -> Self {
        VesselError::ParameterDomain(msg.into())
    }

    pub fn assumption(msg: impl Into<String>) -> Self {
        VesselError::AssumptionViolation(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        VesselError::InputFormat(msg.into())
    }
}
