//! Fixed sliding-window RLNC.
//!
//! New combinations extend the window one source packet at a time; after
//! every `fec_every` new packets one a-priori FEC repeat of the current
//! window goes out. The redundancy rate is the whole loss story: the
//! scheme never reacts to individual losses, so burst recovery is paced
//! by the FEC cadence rather than by feedback. Once the file is fully
//! admitted, repeats continue at the same fixed cadence (started by the
//! first NACK timeout) until the window drains, so transfers complete
//! without the rate ever adapting.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::CoeffVector;
use crate::packet::{encode, CodedPacket, FeedbackMsg, PacketKind, SourcePacket};

use super::{LinkParams, Scheme};

pub struct FixedSwRlnc {
    sources: Arc<Vec<SourcePacket>>,
    link: LinkParams,
    fec_every: u32,
    w_min: u32,
    w_max: u32,
    new_since_fec: u32,
    /// tx slot -> NACK deadline; only consulted to start the tail flush.
    outstanding: BTreeMap<u64, u64>,
    /// Slot of the next tail repeat once the flush cadence is running.
    tail_next_repeat: Option<u64>,
    rng: ChaCha8Rng,
}

impl FixedSwRlnc {
    pub fn new(sources: Arc<Vec<SourcePacket>>, link: LinkParams, fec_every: u32, seed: u64) -> Self {
        Self {
            sources,
            link,
            fec_every,
            w_min: 1,
            w_max: 0,
            new_since_fec: 0,
            outstanding: BTreeMap::new(),
            tail_next_repeat: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Slots between tail repeats: the mid-stream redundancy period, or
    /// one repeat per timeout when periodic FEC is disabled.
    fn tail_period(&self) -> u64 {
        if self.fec_every > 0 {
            self.fec_every as u64 + 1
        } else {
            1 + self.link.timeout_slots
        }
    }

    fn emit_window(&mut self, kind: PacketKind, now: u64) -> CodedPacket {
        let (lo, hi) = (self.w_min, self.w_max);
        let len = (hi - lo + 1) as usize;
        let coeffs = if len == 1 && kind == PacketKind::NewInfo {
            // A window of one carries the packet itself.
            CoeffVector::unit(lo)
        } else {
            CoeffVector::random(lo, len, &mut self.rng)
        };
        let window = &self.sources[(lo - 1) as usize..hi as usize];
        let pkt = encode(window, &coeffs, kind, now).expect("window encode cannot fail");
        self.outstanding.insert(now, now + 1 + self.link.timeout_slots);
        pkt
    }
}

impl Scheme for FixedSwRlnc {
    fn on_feedback(&mut self, fb: &FeedbackMsg, _now: u64) {
        if fb.is_ack {
            self.outstanding.remove(&fb.tx_slot_echo);
            self.w_min = self.w_min.max(fb.decoded_upto + 1);
        }
    }

    fn next_packet(&mut self, now: u64) -> Option<CodedPacket> {
        if self.w_min > self.w_max && self.w_max == self.link.n_packets {
            return None;
        }
        if self.fec_every > 0 && self.new_since_fec >= self.fec_every && self.w_min <= self.w_max {
            self.new_since_fec = 0;
            return Some(self.emit_window(PacketKind::AprioriFec, now));
        }
        if self.w_max < self.link.n_packets {
            self.w_max += 1;
            self.new_since_fec += 1;
            return Some(self.emit_window(PacketKind::NewInfo, now));
        }
        // Tail: sources exhausted, window still open. The fixed cadence
        // simply keeps running, one repeat per period, whether or not the
        // in-flight tail would have closed the window on its own. With
        // periodic FEC disabled there is no cadence, so the flush falls
        // back to one repeat per timeout.
        match self.tail_next_repeat {
            Some(next) if now >= next => {
                self.tail_next_repeat = Some(now + self.tail_period());
                Some(self.emit_window(PacketKind::Repeat, now))
            }
            Some(_) => None,
            None => {
                let start_flush = self.fec_every > 0
                    || self.outstanding.values().any(|&deadline| deadline <= now);
                if start_flush {
                    self.tail_next_repeat = Some(now + self.tail_period());
                    Some(self.emit_window(PacketKind::Repeat, now))
                } else {
                    None
                }
            }
        }
    }

    fn algorithm(&self) -> &'static str {
        "fsw-rlnc"
    }
}
