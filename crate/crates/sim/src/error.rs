use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cross-correlation peak not significant enough to trust.
    #[error("acquisition failed: correlation peak significance {significance:.2} below threshold {threshold:.2}")]
    AcquisitionFailed { significance: f64, threshold: f64 },

    /// Arrival-phase histogram too distorted to localize the peak.
    #[error("tracking peak lost (significance {significance:.2})")]
    PeakLost { significance: f64 },

    /// QBER stayed at the decorrelated level over the whole scan range.
    #[error("cycle slip not recovered within ±{scanned} clock cycles")]
    SlipUnrecovered { scanned: i64 },

    #[error("offset series too short: need at least {needed} samples at this tau, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error("phase lock lost: QBER above escape threshold for {dwell} steps")]
    LockLost { dwell: u32 },

    /// Tag stream cannot be matched to the symbol sequence.
    #[error("unsynchronized tag stream: {0}")]
    Unsynchronized(String),
}

impl SimError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SimError::InvalidArgument(msg.into())
    }
}
