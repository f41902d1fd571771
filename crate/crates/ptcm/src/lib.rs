//! Punctured trellis-coded modulation (TCM) over channels with intersymbol
//! interference.
//!
//! Puncturing a convolutional code under a TCM mapping yields fractional
//! rates, but the kept output bits no longer align with symbol boundaries:
//! bits straddle symbols and must be carried as *pending* state, which turns
//! the code trellis into a periodically time-variant trellis. This crate
//! builds that trellis, folds channel memory into it, and decodes with full
//! maximum-likelihood sequence estimation (MLSE) or with reduced-state
//! schemes (DDFSE, RSSE) that shrink the state space via set-partition
//! subset histories and per-survivor decision feedback.
//!
//! Module map:
//!
//! * [`constellation`]: PAM/PSK/QAM constellations and Ungerboeck set
//!   partitioning (labels encode the partition path, LSB first).
//! * [`code`]: convolutional encoders (feedforward and recursive),
//!   puncturing patterns, and the per-period rate plan that schedules
//!   encoder steps against symbol boundaries.
//! * [`trellis`]: the time-variant symbol trellis, depth schedules, the
//!   joint code-and-channel trellis, and free-distance searches.
//! * [`channel`]: FIR channels with AWGN, seeded and reproducible.
//! * [`decode`]: the Viterbi engine shared by MLSE/DDFSE/RSSE, with exact
//!   complexity counters.
//! * [`sim`]: deterministic Monte-Carlo BER sweeps, JSON configuration, CSV
//!   output, and the command-line interface.
//!
//! ```
//! use ptcm::constellation::{build_constellation, build_partition_tree, ConstellationKind};
//!
//! let c = build_constellation(ConstellationKind::Psk, 8).unwrap();
//! let tree = build_partition_tree(&c);
//! // Intra-subset minimum distances grow as the partition refines.
//! assert!(tree.delta()[0] < tree.delta()[2]);
//! ```

pub mod channel;
pub mod code;
pub mod constellation;
pub mod decode;
pub mod sim;
pub mod trellis;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("rate incompatibility: {n_kept} kept bits per period is not a multiple of m={m} label bits per symbol")]
    RateIncompatible { n_kept: usize, m: usize },
    #[error("invalid depth schedule; violations at (phase, delay): {0:?}")]
    InvalidDepths(Vec<(usize, usize)>),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("capacity exceeded: {requested} states, cap {cap}")]
    Capacity { requested: u64, cap: u64 },
    #[error("distance search exhausted {0} expansions without a remerging pair")]
    DistanceSearch(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
