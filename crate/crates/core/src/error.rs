use thiserror::Error;

/// Errors surfaced by the security calculus, channel model and optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The X-basis single-photon bound collapsed to zero, so the phase
    /// error rate is undefined; callers treat the key length as zero.
    #[error("insufficient statistics: X-basis single-photon bound is zero")]
    InsufficientStatistics,

    /// Grid search found no parameter point with a positive key rate.
    #[error("no positive key anywhere in the search range")]
    NoPositiveKey,

    /// The two key-rate curves never intersect in the search interval.
    #[error("no crossover between dimensions in [{lo} dB, {hi} dB]")]
    NoCrossover { lo: f64, hi: f64 },
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }
}
