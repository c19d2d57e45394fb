//! Simulation laboratory for sliding-window random linear network coding
//! over lossy links with high RTT variance.
//!
//! The crate provides:
//!
//! - [`gf256`]: GF(2^8) arithmetic and payload combination primitives.
//! - [`linalg`]: incremental Gaussian elimination (reduced row-echelon
//!   form) used by every receiver.
//! - [`packet`]: source/coded packet and feedback records.
//! - [`channel`]: slotted erasure/RTT channels; trace replay,
//!   Gilbert-Elliott synthesis and parameter fitting.
//! - [`scheme`]: the four sender schedulers (plain ARQ, rateless batch
//!   RLNC, fixed and adaptive sliding-window RLNC).
//! - [`sim`]: the slot-driven experience/datapoint engine.
//! - [`analysis`]: erasure-rate confidence bounds, in-order delay upper
//!   bounds, empirical CDFs and latency-class tagging.
//! - [`config`] and [`report`]: run configuration and report emission
//!   for the `swnc` command-line tool.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod gf256;
pub mod linalg;
pub mod packet;
pub mod report;
pub mod scheme;
pub mod sim;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("payload length {got} does not match receiver state length {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("coefficient vector must contain at least one element")]
    EmptyCoeffVector,
    #[error("coefficient count {coeffs} does not match window size {window}")]
    WindowMismatch { coeffs: usize, window: usize },
    #[error("encode window must be non-empty")]
    EmptyWindow,
    #[error("source window must be contiguous starting at its first index")]
    NonContiguousWindow,
    #[error("Gilbert-Elliott parameters degenerate: s + q must be positive")]
    DegenerateGe,
    #[error("parameter {name} = {value} outside {range}")]
    ParamRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("channel profile must contain at least one slot")]
    EmptyProfile,
    #[error("cannot fit Gilbert-Elliott parameters: {reason}")]
    FitDegenerate { reason: &'static str },
    #[error("channel profile exhausted at slot {slot}")]
    ProfileExhausted { slot: u64 },
    #[error("trace parse error at line {line}: {reason}")]
    TraceParse { line: usize, reason: String },
    #[error("no experience completed for this datapoint")]
    NoCompletedExperience,
    #[error("empty sample")]
    EmptySample,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
