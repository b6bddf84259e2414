//! Monte Carlo simulator of the emission–channel–detection chain and
//! the quantum-signal stabilization backbone.
//!
//! [`session`] draws time tags carrying ground truth (source photon
//! number, symbol index, dark-count origin) so the finite-key bounds in
//! `hdqkd-core` can be checked against an independent oracle. [`sync`],
//! [`tdev`] and [`lock`] implement the self-referenced stabilization:
//! coarse offset acquisition by cross-correlation, drift tracking,
//! cycle-slip recovery, Allan time deviation, and QBER-feedback phase
//! locking.

pub mod clock;
pub mod confusion;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod lock;
pub mod sequence;
pub mod session;
pub mod sift;
pub mod sync;
pub mod tdev;

pub use clock::ClockModel;
pub use confusion::{overlap_from_confusion, ConfusionMatrix};
pub use error::SimError;
pub use filter::apply_time_filter;
pub use geometry::TimebinGeometry;
pub use sequence::{generate_sequence, Symbol, SymbolSequence};
pub use session::{simulate_counts, simulate_session, CountsBlock, SessionConfig, TagRecord, TagTruth};
pub use sift::{sift_and_count, SiftOutcome};
pub use sync::{coarse_acquire, AcquireConfig, SyncState, TrackConfig};
pub use tdev::allan_tdev;
