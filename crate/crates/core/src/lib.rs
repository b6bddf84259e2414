//! Finite-key security calculus and link model for high-dimensional
//! time-bin QKD with one decoy state.
//!
//! The crate is organized around three layers:
//!
//! * [`security`] — pure functions mapping an [`ObservedBlock`] of sifted
//!   detection/error counts to a [`SecurityResult`] (vacuum and
//!   single-photon bounds, phase error rate, secret key length and rate).
//! * [`channel`] — an analytic model of the lossy channel and the
//!   detectors (dead time, dark counts, interferometric post-selection)
//!   that produces expected blocks and key-rate-vs-attenuation curves.
//! * [`optimize`] — deterministic grid search over source parameters,
//!   dimension comparison, dead-time crossover finding, and
//!   attenuation-binned key extraction from telemetry samples.
//!
//! Everything here is pure and reentrant; no global state, no RNG.

pub mod binning;
pub mod channel;
pub mod error;
pub mod optimize;
pub mod params;
pub mod security;

pub use binning::{bin_and_key, AttenuationSample, BinReport};
pub use channel::{
    db_to_transmittance, dead_time_coefficient, transmittance_to_db, LinkModel,
};
pub use error::CoreError;
pub use params::{
    Basis, ChannelParams, ErrorModel, Intensity, PostselectionSchedule, ProtocolParams,
};
pub use security::{secret_key_length, shannon_entropy_d, ObservedBlock, SecurityResult};
