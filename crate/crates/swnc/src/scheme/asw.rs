//! Adaptive and causal sliding-window RLNC.
//!
//! Every slot the sender either admits a new source packet into the
//! window or repeats the current window with fresh coefficients. The
//! choice follows the retransmission condition
//!
//! `1 - d - eps_max_alpha > th`
//!
//! where `d` is the DoF rate: degrees of freedom the receiver still
//! needs for the transmitted window (net of new-information packets in
//! flight) over the degrees of freedom added by FEC repeats. Repeats are
//! the a-posteriori FEC; on top of them, after every `m` new packets
//! the sender inserts `ceil(m * eps / (1 - eps))` a-priori FEC repeats
//! sized by the running mean erasure estimate, paying throughput ahead
//! of losses to cut the feedback round trip out of the recovery path.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::CoeffVector;
use crate::packet::{encode, CodedPacket, FeedbackMsg, PacketKind, SourcePacket};

use super::{ErasureEstimator, LinkParams, Scheme};

/// Adaptive scheduler knobs. `None` fields default from the link RTT:
/// window cap `2 * RTT` packets, a-priori period `RTT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AswParams {
    /// Threshold of the retransmission condition.
    pub th: f64,
    /// Confidence factor on the erasure-rate deviation.
    pub alpha: f64,
    pub max_window: Option<u32>,
    pub apriori_period: Option<u32>,
}

impl Default for AswParams {
    fn default() -> Self {
        Self {
            th: 0.0,
            alpha: 2.0,
            max_window: None,
            apriori_period: None,
        }
    }
}

/// Outcome of the per-slot scheduling decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Admit a new source packet into the window.
    SendNew,
    /// Repeat the current window (same packets, fresh coefficients).
    SendSame,
}

/// The retransmission condition: send new information only when the DoF
/// margin clears the threshold and the window can still grow.
pub fn aswrlnc_decide(
    d: f64,
    eps_max_alpha: f64,
    th: f64,
    window_cap_reached: bool,
    new_remaining: bool,
) -> Decision {
    if (1.0 - d - eps_max_alpha) > th && !window_cap_reached && new_remaining {
        Decision::SendNew
    } else {
        Decision::SendSame
    }
}

#[derive(Debug, Clone, Copy)]
struct TxRec {
    hi: u32,
    kind: PacketKind,
    due: u64,
}

pub struct AdaptiveSwRlnc {
    sources: Arc<Vec<SourcePacket>>,
    link: LinkParams,
    th: f64,
    alpha: f64,
    max_window: u32,
    apriori_period: u32,
    w_min: u32,
    w_max: u32,
    seen_dof: u32,
    decoded_upto: u32,
    new_since_fec: u32,
    apriori_queue: u32,
    /// DoFs added: FEC repeats counted for the current window. Grows on
    /// every repeat sent, shrinks when a repeat is confirmed erased, and
    /// is rebased to the in-flight repeats when the window floor moves.
    dof_added: u32,
    outstanding: BTreeMap<u64, TxRec>,
    /// Transmissions already declared erased, kept so a late
    /// acknowledgment (recorded RTT above nominal) can be reconciled.
    declared_erased: BTreeMap<u64, TxRec>,
    estimator: ErasureEstimator,
    rng: ChaCha8Rng,
}

fn is_repair(kind: PacketKind) -> bool {
    matches!(
        kind,
        PacketKind::Repeat | PacketKind::AprioriFec | PacketKind::AposterioriFec
    )
}

impl AdaptiveSwRlnc {
    pub fn new(
        sources: Arc<Vec<SourcePacket>>,
        link: LinkParams,
        params: AswParams,
        seed: u64,
    ) -> Self {
        let max_window = params
            .max_window
            .unwrap_or((2 * link.rtt_slots).max(2) as u32);
        let apriori_period = params.apriori_period.unwrap_or(link.rtt_slots.max(1) as u32);
        Self {
            sources,
            link,
            th: params.th,
            alpha: params.alpha,
            max_window,
            apriori_period,
            w_min: 1,
            w_max: 0,
            seen_dof: 0,
            decoded_upto: 0,
            new_since_fec: 0,
            apriori_queue: 0,
            dof_added: 0,
            outstanding: BTreeMap::new(),
            declared_erased: BTreeMap::new(),
            estimator: ErasureEstimator::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A-priori FEC count for one period: `ceil(m * eps / (1 - eps))`,
    /// with the estimate clamped away from one to keep the rule finite.
    fn apriori_count(&self, eps_mean: f64) -> u32 {
        let eps = eps_mean.clamp(0.0, 0.8);
        if eps == 0.0 {
            return 0;
        }
        (self.apriori_period as f64 * eps / (1.0 - eps)).ceil() as u32
    }

    fn window_size(&self) -> u32 {
        if self.w_max >= self.w_min {
            self.w_max - self.w_min + 1
        } else {
            0
        }
    }

    /// DoFs the receiver still needs for the transmitted window, beyond
    /// what the in-flight new-information stream will deliver. Repeats in
    /// flight deliberately do not count: they are the DoFs *added*.
    fn dof_needed(&self) -> u32 {
        let seen_win = self.seen_dof.saturating_sub(self.w_min.saturating_sub(1));
        let newinfo_in_flight = self
            .outstanding
            .values()
            .filter(|r| r.kind == PacketKind::NewInfo && r.hi >= self.w_min)
            .count() as u32;
        self.window_size()
            .saturating_sub(seen_win + newinfo_in_flight)
    }

    fn rebase_dof_added(&mut self) {
        self.dof_added = self
            .outstanding
            .values()
            .filter(|r| is_repair(r.kind) && r.hi >= self.w_min)
            .count() as u32;
    }

    fn resolve_due(&mut self, now: u64) {
        let due: Vec<u64> = self
            .outstanding
            .iter()
            .filter(|(_, rec)| rec.due <= now)
            .map(|(&slot, _)| slot)
            .collect();
        for slot in due {
            let rec = self.outstanding.remove(&slot).unwrap();
            self.estimator.record_erased(slot);
            if is_repair(rec.kind) && rec.hi >= self.w_min {
                self.dof_added = self.dof_added.saturating_sub(1);
            }
            self.declared_erased.insert(slot, rec);
        }
    }

    fn emit(&mut self, kind: PacketKind, now: u64) -> CodedPacket {
        let (lo, hi) = (self.w_min, self.w_max);
        let len = (hi - lo + 1) as usize;
        let coeffs = CoeffVector::random(lo, len, &mut self.rng);
        let window = &self.sources[(lo - 1) as usize..hi as usize];
        let pkt = encode(window, &coeffs, kind, now).expect("window encode cannot fail");
        self.outstanding.insert(
            now,
            TxRec {
                hi,
                kind,
                due: now + self.link.rtt_slots,
            },
        );
        pkt
    }

    /// Current channel estimate, exposed for reporting.
    pub fn channel_estimate(&self) -> super::ChannelEstimate {
        self.estimator.estimate(self.link.rtt_slots, self.alpha)
    }
}

impl Scheme for AdaptiveSwRlnc {
    fn on_feedback(&mut self, fb: &FeedbackMsg, _now: u64) {
        if !fb.is_ack {
            return;
        }
        if let Some(_rec) = self.outstanding.remove(&fb.tx_slot_echo) {
            self.estimator.record_acked(fb.tx_slot_echo);
        } else if let Some(rec) = self.declared_erased.remove(&fb.tx_slot_echo) {
            // Late acknowledgment: undo the erasure verdict.
            self.estimator.record_acked(fb.tx_slot_echo);
            if is_repair(rec.kind) && rec.hi >= self.w_min {
                self.dof_added += 1;
            }
        }
        self.seen_dof = self.seen_dof.max(fb.seen_dof);
        self.decoded_upto = self.decoded_upto.max(fb.decoded_upto);
        if self.decoded_upto + 1 > self.w_min {
            self.w_min = self.decoded_upto + 1;
            self.rebase_dof_added();
        }
    }

    fn next_packet(&mut self, now: u64) -> Option<CodedPacket> {
        self.resolve_due(now);

        if self.apriori_queue > 0 && self.w_min <= self.w_max {
            self.apriori_queue -= 1;
            self.dof_added += 1;
            return Some(self.emit(PacketKind::AprioriFec, now));
        }

        let needed = self.dof_needed();
        let d = needed as f64 / self.dof_added.max(1) as f64;
        let est = self.estimator.estimate(self.link.rtt_slots, self.alpha);
        let cap_reached = self.window_size() >= self.max_window;
        let new_remaining = self.w_max < self.link.n_packets;
        let margin_ok = (1.0 - d - est.eps_max_alpha) > self.th;

        match aswrlnc_decide(d, est.eps_max_alpha, self.th, cap_reached, new_remaining) {
            Decision::SendNew => {
                self.w_max += 1;
                self.new_since_fec += 1;
                let pkt = self.emit(PacketKind::NewInfo, now);
                if self.new_since_fec >= self.apriori_period {
                    self.new_since_fec = 0;
                    self.apriori_queue = self.apriori_count(est.eps_mean);
                }
                Some(pkt)
            }
            Decision::SendSame => {
                if (!margin_ok || needed > 0) && self.w_min <= self.w_max {
                    self.dof_added += 1;
                    Some(self.emit(PacketKind::AposterioriFec, now))
                } else {
                    // Margin fine and no DoF missing: the window is only
                    // blocked on feedback (cap reached or sources
                    // exhausted), and a repeat would add nothing the
                    // in-flight stream does not already carry.
                    None
                }
            }
        }
    }

    fn algorithm(&self) -> &'static str {
        "asw-rlnc"
    }
}
