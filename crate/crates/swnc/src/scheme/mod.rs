//! Sender-side schedulers for the four evaluated schemes.
//!
//! Each scheme is driven slot by slot: the engine first delivers any
//! acknowledgments that are due, then asks for at most one transmission.
//! Schemes may leave a slot idle (batch waits, drained windows); idle
//! slots cost time but no throughput.

mod arq;
mod asw;
mod estimator;
mod fsw;
mod rrlnc;

pub use arq::{ArqBaseline, ArqMode};
pub use asw::{aswrlnc_decide, AdaptiveSwRlnc, AswParams, Decision};
pub use estimator::{ChannelEstimate, ErasureEstimator};
pub use fsw::FixedSwRlnc;
pub use rrlnc::RatelessRlnc;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::packet::{CodedPacket, FeedbackMsg, SourcePacket};

/// Link constants a scheduler needs: transfer size, nominal RTT and the
/// NACK timeout (a transmission with no acknowledgment by
/// `tx + 1 + timeout` is declared lost).
#[derive(Debug, Clone, Copy)]
pub struct LinkParams {
    pub n_packets: u32,
    pub rtt_slots: u64,
    pub timeout_slots: u64,
}

/// A sender scheduler: consumes acknowledgments, emits transmissions.
pub trait Scheme {
    /// Deliver one acknowledgment. Called for every feedback message due
    /// in the current slot, before [`Scheme::next_packet`].
    fn on_feedback(&mut self, fb: &FeedbackMsg, now: u64);

    /// Ask for this slot's transmission; `None` leaves the slot idle.
    fn next_packet(&mut self, now: u64) -> Option<CodedPacket>;

    fn algorithm(&self) -> &'static str;

    /// Whether the receiving side consumes the stream strictly in order,
    /// discarding anything past a gap. True for the whole-file ARQ
    /// baseline (a plain UDP file receiver has no resequencing buffer);
    /// every coded scheme banks out-of-order degrees of freedom.
    fn receiver_in_order_only(&self) -> bool {
        false
    }
}

/// Scheme selector used by configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Arq,
    Rrlnc,
    FswRlnc,
    AswRlnc,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Arq,
        SchemeKind::Rrlnc,
        SchemeKind::FswRlnc,
        SchemeKind::AswRlnc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Arq => "arq",
            SchemeKind::Rrlnc => "rrlnc",
            SchemeKind::FswRlnc => "fsw-rlnc",
            SchemeKind::AswRlnc => "asw-rlnc",
        }
    }
}

/// Per-scheme tuning knobs; defaults follow the evaluation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    /// ARQ: restart the remaining file on loss, or retransmit selectively.
    pub arq_mode: ArqMode,
    /// Rateless batch size `n`.
    pub batch_size: u32,
    /// Rateless packets per round `m` (`m >= n`).
    pub round_size: Option<u32>,
    /// Fixed sliding window: one a-priori FEC packet per `fec_every` new
    /// packets; 0 disables periodic redundancy.
    pub fec_every: u32,
    /// Adaptive sliding window knobs.
    pub asw: AswParams,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            arq_mode: ArqMode::RestartFromOldest,
            batch_size: 10,
            round_size: None,
            fec_every: 4,
            asw: AswParams::default(),
        }
    }
}

/// Instantiate a scheduler over a shared source file.
pub fn build_scheme(
    kind: SchemeKind,
    params: &SchemeParams,
    sources: Arc<Vec<SourcePacket>>,
    link: LinkParams,
    seed: u64,
) -> Box<dyn Scheme> {
    match kind {
        SchemeKind::Arq => Box::new(ArqBaseline::new(sources, link, params.arq_mode)),
        SchemeKind::Rrlnc => Box::new(RatelessRlnc::new(
            sources,
            link,
            params.batch_size,
            params.round_size.unwrap_or(params.batch_size),
            seed,
        )),
        SchemeKind::FswRlnc => Box::new(FixedSwRlnc::new(sources, link, params.fec_every, seed)),
        SchemeKind::AswRlnc => Box::new(AdaptiveSwRlnc::new(sources, link, params.asw, seed)),
    }
}
