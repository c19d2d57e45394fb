//! Packet and feedback records exchanged between sender and receiver.

use serde::{Deserialize, Serialize};

use crate::gf256::axpy_bytes;
use crate::linalg::CoeffVector;
use crate::{Error, Result};

/// One raw datagram of the file being transferred. Indices are 1-based
/// and contiguous; all packets of a transfer share the same length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePacket {
    pub index: u32,
    pub payload: Vec<u8>,
}

/// What a transmission contributes to the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PacketKind {
    /// A combination that admits a new source packet into the window.
    NewInfo,
    /// A fresh combination over an unchanged window (retry rounds, timeout repairs).
    Repeat,
    /// Redundancy scheduled ahead of losses.
    AprioriFec,
    /// Redundancy sent in reaction to reported losses.
    AposterioriFec,
    /// A single uncoded source packet (ARQ baseline).
    Uncoded,
}

/// A transmitted linear combination over the window
/// `[coeffs.offset(), coeffs.last_index()]`.
#[derive(Debug, Clone)]
pub struct CodedPacket {
    pub coeffs: CoeffVector,
    pub payload: Vec<u8>,
    pub kind: PacketKind,
    pub tx_slot: u64,
}

impl CodedPacket {
    pub fn w_min(&self) -> u32 {
        self.coeffs.offset()
    }

    pub fn w_max(&self) -> u32 {
        self.coeffs.last_index()
    }
}

/// Cumulative receiver feedback: rank seen so far plus the highest
/// in-order decoded index. Both are non-decreasing over a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackMsg {
    /// Slot of the acknowledged transmission.
    pub tx_slot_echo: u64,
    /// Receiver rank (degrees of freedom) at the time of receipt.
    pub seen_dof: u32,
    /// Highest source index decoded in order.
    pub decoded_upto: u32,
    pub is_ack: bool,
}

/// Build the GF-linear combination of `window` under `coeffs`.
///
/// The window must be contiguous and aligned with the coefficient
/// vector's offset.
pub fn encode(
    window: &[SourcePacket],
    coeffs: &CoeffVector,
    kind: PacketKind,
    tx_slot: u64,
) -> Result<CodedPacket> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if coeffs.len() != window.len() {
        return Err(Error::WindowMismatch {
            coeffs: coeffs.len(),
            window: window.len(),
        });
    }
    for (i, pkt) in window.iter().enumerate() {
        if pkt.index != coeffs.offset() + i as u32 {
            return Err(Error::NonContiguousWindow);
        }
    }
    let len = window[0].payload.len();
    let mut payload = vec![0u8; len];
    for (pkt, &c) in window.iter().zip(coeffs.elems()) {
        if pkt.payload.len() != len {
            return Err(Error::PayloadLength {
                expected: len,
                got: pkt.payload.len(),
            });
        }
        axpy_bytes(&mut payload, c, &pkt.payload);
    }
    Ok(CodedPacket {
        coeffs: coeffs.clone(),
        payload,
        kind,
        tx_slot,
    })
}

/// Deterministic pseudo-random file content for one transfer.
pub fn generate_sources(n_packets: u32, packet_bytes: usize, seed: u64) -> Vec<SourcePacket> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (1..=n_packets)
        .map(|index| SourcePacket {
            index,
            payload: (0..packet_bytes).map(|_| rng.gen()).collect(),
        })
        .collect()
}
