//! Plain ARQ baseline ("UDP transmission").
//!
//! Uncoded packets stream out in order; a NACK (no acknowledgment by
//! `tx + 1 + timeout`) triggers retransmission. The default restarts the
//! entire remaining file from the oldest unacknowledged packet, which is
//! what makes the baseline collapse on lossy links; a selective mode
//! retransmits only the timed-out packet.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::CoeffVector;
use crate::packet::{encode, CodedPacket, FeedbackMsg, PacketKind, SourcePacket};

use super::{LinkParams, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArqMode {
    /// Restart transmission of the whole remaining file on any NACK.
    #[default]
    RestartFromOldest,
    /// Retransmit only the timed-out packet.
    Selective,
}

pub struct ArqBaseline {
    sources: Arc<Vec<SourcePacket>>,
    link: LinkParams,
    mode: ArqMode,
    /// Next packet index that has never been sent in the current pass.
    next: u32,
    /// Highest in-order index the receiver has confirmed.
    cum_acked: u32,
    /// tx slot -> (source index, NACK deadline).
    outstanding: BTreeMap<u64, (u32, u64)>,
    retransmit_queue: VecDeque<u32>,
}

impl ArqBaseline {
    pub fn new(sources: Arc<Vec<SourcePacket>>, link: LinkParams, mode: ArqMode) -> Self {
        Self {
            sources,
            link,
            mode,
            next: 1,
            cum_acked: 0,
            outstanding: BTreeMap::new(),
            retransmit_queue: VecDeque::new(),
        }
    }

    fn send(&mut self, index: u32, now: u64) -> CodedPacket {
        let src = &self.sources[(index - 1) as usize];
        let pkt = encode(
            std::slice::from_ref(src),
            &CoeffVector::unit(index),
            PacketKind::Uncoded,
            now,
        )
        .expect("unit encode cannot fail");
        self.outstanding
            .insert(now, (index, now + 1 + self.link.timeout_slots));
        pkt
    }
}

impl Scheme for ArqBaseline {
    fn on_feedback(&mut self, fb: &FeedbackMsg, _now: u64) {
        if fb.is_ack {
            self.outstanding.remove(&fb.tx_slot_echo);
            self.cum_acked = self.cum_acked.max(fb.decoded_upto);
        }
    }

    fn next_packet(&mut self, now: u64) -> Option<CodedPacket> {
        let expired: Vec<(u64, u32)> = self
            .outstanding
            .iter()
            .filter(|(_, (_, deadline))| *deadline <= now)
            .map(|(&slot, &(idx, _))| (slot, idx))
            .collect();
        if !expired.is_empty() {
            match self.mode {
                ArqMode::RestartFromOldest => {
                    // Whole-file-oriented retransmission: every declared
                    // NACK rewinds to the oldest unacknowledged packet
                    // and the remaining file goes out again. Pending
                    // deadlines stay armed, so a lossy stretch keeps the
                    // sender rewinding until acknowledgments catch up.
                    for (slot, _) in expired {
                        self.outstanding.remove(&slot);
                    }
                    self.next = self.cum_acked + 1;
                    self.retransmit_queue.clear();
                }
                ArqMode::Selective => {
                    for (slot, idx) in expired {
                        self.outstanding.remove(&slot);
                        if idx > self.cum_acked && !self.retransmit_queue.contains(&idx) {
                            self.retransmit_queue.push_back(idx);
                        }
                    }
                }
            }
        }

        while let Some(idx) = self.retransmit_queue.pop_front() {
            if idx > self.cum_acked {
                return Some(self.send(idx, now));
            }
        }
        if self.next <= self.cum_acked {
            self.next = self.cum_acked + 1;
        }
        if self.next <= self.link.n_packets {
            let idx = self.next;
            self.next += 1;
            return Some(self.send(idx, now));
        }
        None
    }

    fn algorithm(&self) -> &'static str {
        "arq"
    }

    fn receiver_in_order_only(&self) -> bool {
        // Restart mode models a UDP file transfer: the receiver writes
        // sequentially and cannot bank data beyond a gap, which is what
        // makes whole-file retransmission so expensive on lossy links.
        self.mode == ArqMode::RestartFromOldest
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make(n: u32, mode: ArqMode) -> ArqBaseline {
        let sources = Arc::new(crate::packet::generate_sources(n, 4, 1));
        ArqBaseline::new(
            sources,
            LinkParams {
                n_packets: n,
                rtt_slots: 16,
                timeout_slots: 32,
            },
            mode,
        )
    }

    #[test]
    fn streams_packets_in_order_without_feedback_pressure() {
        let mut arq = make(5, ArqMode::RestartFromOldest);
        for (slot, want) in (0..5).zip(1..=5u32) {
            let pkt = arq.next_packet(slot).unwrap();
            assert_eq!(pkt.kind, PacketKind::Uncoded);
            assert_eq!(pkt.w_min(), want);
            assert_eq!(pkt.w_max(), want);
        }
        assert!(arq.next_packet(5).is_none());
    }

    #[test]
    fn timeout_restarts_from_oldest_unacked() {
        let mut arq = make(5, ArqMode::RestartFromOldest);
        for slot in 0..5 {
            arq.next_packet(slot).unwrap();
        }
        // Packets 2..5 acknowledged; packet 1 (tx slot 0) lost.
        for slot in 1..5u64 {
            arq.on_feedback(
                &FeedbackMsg {
                    tx_slot_echo: slot,
                    seen_dof: slot as u32,
                    decoded_upto: 0,
                    is_ack: true,
                },
                slot + 16,
            );
        }
        // NACK deadline for tx 0 is 0 + 1 + 32 = 33.
        assert!(arq.next_packet(20).is_none());
        let pkt = arq.next_packet(33).unwrap();
        assert_eq!(pkt.w_min(), 1);
        // Restart resends the already-delivered tail as well.
        assert_eq!(arq.next_packet(34).unwrap().w_min(), 2);
    }

    #[test]
    fn selective_mode_resends_only_the_lost_packet() {
        let mut arq = make(5, ArqMode::Selective);
        for slot in 0..5 {
            arq.next_packet(slot).unwrap();
        }
        for slot in 1..5u64 {
            arq.on_feedback(
                &FeedbackMsg {
                    tx_slot_echo: slot,
                    seen_dof: slot as u32,
                    decoded_upto: 0,
                    is_ack: true,
                },
                slot + 16,
            );
        }
        let pkt = arq.next_packet(33).unwrap();
        assert_eq!(pkt.w_min(), 1);
        assert!(arq.next_packet(34).is_none());
    }
}
