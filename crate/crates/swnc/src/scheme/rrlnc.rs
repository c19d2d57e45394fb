//! Rateless batch RLNC.
//!
//! Sources are split into fixed batches of `n`. Each round sends random
//! combinations over the whole batch; if no acknowledgment shows the
//! batch decodable by one timeout after the round ends, another round of
//! `n` goes out for the same batch. The sender only advances once
//! decodability is acknowledged, which is what pins the per-packet
//! in-order delay to at least the batch span.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::CoeffVector;
use crate::packet::{encode, CodedPacket, FeedbackMsg, PacketKind, SourcePacket};

use super::{LinkParams, Scheme};

#[derive(Debug, Clone, Copy)]
enum Phase {
    /// `left` packets remaining in the current round.
    Sending { left: u32 },
    /// Round finished; NACK the round at `deadline` if still undecoded.
    Waiting { deadline: u64 },
}

pub struct RatelessRlnc {
    sources: Arc<Vec<SourcePacket>>,
    link: LinkParams,
    batch_size: u32,
    round_size: u32,
    /// 0-based index of the current batch.
    batch: u32,
    first_round: bool,
    phase: Phase,
    decoded_upto: u32,
    rng: ChaCha8Rng,
}

impl RatelessRlnc {
    pub fn new(
        sources: Arc<Vec<SourcePacket>>,
        link: LinkParams,
        batch_size: u32,
        round_size: u32,
        seed: u64,
    ) -> Self {
        assert!(batch_size >= 1);
        assert!(round_size >= batch_size, "round size must be at least n");
        Self {
            sources,
            link,
            batch_size,
            round_size,
            batch: 0,
            first_round: true,
            phase: Phase::Sending { left: round_size },
            decoded_upto: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn batch_bounds(&self) -> (u32, u32) {
        let start = self.batch * self.batch_size + 1;
        let end = (start + self.batch_size - 1).min(self.link.n_packets);
        (start, end)
    }

    fn advance_decoded_batches(&mut self) {
        loop {
            let (start, end) = self.batch_bounds();
            if start > self.link.n_packets {
                return;
            }
            if self.decoded_upto >= end {
                self.batch += 1;
                self.first_round = true;
                self.phase = Phase::Sending {
                    left: self.round_size,
                };
            } else {
                return;
            }
        }
    }

    fn emit(&mut self, now: u64) -> CodedPacket {
        let (start, end) = self.batch_bounds();
        let len = (end - start + 1) as usize;
        let coeffs = CoeffVector::random(start, len, &mut self.rng);
        let kind = if self.first_round {
            PacketKind::NewInfo
        } else {
            PacketKind::Repeat
        };
        let window = &self.sources[(start - 1) as usize..end as usize];
        encode(window, &coeffs, kind, now).expect("batch encode cannot fail")
    }
}

impl Scheme for RatelessRlnc {
    fn on_feedback(&mut self, fb: &FeedbackMsg, _now: u64) {
        if fb.is_ack {
            self.decoded_upto = self.decoded_upto.max(fb.decoded_upto);
        }
    }

    fn next_packet(&mut self, now: u64) -> Option<CodedPacket> {
        self.advance_decoded_batches();
        let (start, _) = self.batch_bounds();
        if start > self.link.n_packets {
            return None;
        }
        match self.phase {
            Phase::Sending { left } => {
                let pkt = self.emit(now);
                if left == 1 {
                    self.first_round = false;
                    self.phase = Phase::Waiting {
                        deadline: now + 1 + self.link.timeout_slots,
                    };
                } else {
                    self.phase = Phase::Sending { left: left - 1 };
                }
                Some(pkt)
            }
            Phase::Waiting { deadline } => {
                if now >= deadline {
                    // Round NACKed: send another n combinations.
                    let pkt = self.emit(now);
                    self.phase = if self.batch_size == 1 {
                        Phase::Waiting {
                            deadline: now + 1 + self.link.timeout_slots,
                        }
                    } else {
                        Phase::Sending {
                            left: self.batch_size - 1,
                        }
                    };
                    Some(pkt)
                } else {
                    None
                }
            }
        }
    }

    fn algorithm(&self) -> &'static str {
        "rrlnc"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make(n: u32, batch: u32) -> RatelessRlnc {
        let sources = Arc::new(crate::packet::generate_sources(n, 4, 1));
        RatelessRlnc::new(
            sources,
            LinkParams {
                n_packets: n,
                rtt_slots: 16,
                timeout_slots: 32,
            },
            batch,
            batch,
            9,
        )
    }

    #[test]
    fn first_round_spans_the_whole_batch() {
        let mut r = make(20, 10);
        for slot in 0..10 {
            let pkt = r.next_packet(slot).unwrap();
            assert_eq!(pkt.kind, PacketKind::NewInfo);
            assert_eq!(pkt.w_min(), 1);
            assert_eq!(pkt.w_max(), 10);
        }
        // Round over: waits for feedback.
        assert!(r.next_packet(10).is_none());
    }

    #[test]
    fn advances_batch_only_after_decodable_ack() {
        let mut r = make(20, 10);
        for slot in 0..10 {
            r.next_packet(slot).unwrap();
        }
        r.on_feedback(
            &FeedbackMsg {
                tx_slot_echo: 9,
                seen_dof: 10,
                decoded_upto: 10,
                is_ack: true,
            },
            25,
        );
        let pkt = r.next_packet(25).unwrap();
        assert_eq!(pkt.w_min(), 11);
        assert_eq!(pkt.w_max(), 20);
        assert_eq!(pkt.kind, PacketKind::NewInfo);
    }

    #[test]
    fn timeout_triggers_a_repeat_round() {
        let mut r = make(10, 10);
        for slot in 0..10 {
            r.next_packet(slot).unwrap();
        }
        // Deadline = 9 + 1 + 32 = 42.
        assert!(r.next_packet(41).is_none());
        let pkt = r.next_packet(42).unwrap();
        assert_eq!(pkt.kind, PacketKind::Repeat);
        assert_eq!(pkt.w_min(), 1);
        assert_eq!(pkt.w_max(), 10);
        // Repeat round has n packets total.
        for slot in 43..52 {
            assert!(r.next_packet(slot).is_some(), "slot {slot}");
        }
        assert!(r.next_packet(52).is_none());
    }

    #[test]
    fn short_final_batch_is_supported() {
        let mut r = make(15, 10);
        r.on_feedback(
            &FeedbackMsg {
                tx_slot_echo: 0,
                seen_dof: 10,
                decoded_upto: 10,
                is_ack: true,
            },
            0,
        );
        let pkt = r.next_packet(0).unwrap();
        assert_eq!(pkt.w_min(), 11);
        assert_eq!(pkt.w_max(), 15);
    }
}
