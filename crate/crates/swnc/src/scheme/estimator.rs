//! Feedback-driven erasure-rate estimation.
//!
//! Acknowledgments for a transmission are due one RTT after it leaves;
//! a transmission with no acknowledgment by then is counted as erased.
//! The mean erasure rate is `1 - acked / resolved` over all resolved
//! transmissions, and the variance is taken over the most recent RTT of
//! them (Bernoulli fallback while fewer samples exist). Late
//! acknowledgments, possible when the recorded RTT fluctuates above the
//! nominal value, flip the sample back.

use std::collections::BTreeMap;

use crate::analysis::eps_max_alpha;

/// Snapshot of the channel estimate at some slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub eps_mean: f64,
    pub nu: f64,
    pub eps_max_alpha: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ErasureEstimator {
    /// tx slot -> acknowledged, for transmissions whose feedback is due.
    resolved: BTreeMap<u64, bool>,
    acked: u64,
}

impl ErasureEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record that a transmission's feedback window elapsed without an ACK.
    pub fn record_erased(&mut self, tx_slot: u64) {
        self.resolved.entry(tx_slot).or_insert(false);
    }

    /// Record an acknowledged transmission; flips an earlier erasure
    /// verdict if the acknowledgment arrived late.
    pub fn record_acked(&mut self, tx_slot: u64) {
        match self.resolved.insert(tx_slot, true) {
            Some(true) => {}
            _ => self.acked += 1,
        }
    }

    pub fn resolved_count(&self) -> u64 {
        self.resolved.len() as u64
    }

    /// Mean erasure rate over every resolved transmission; zero before
    /// any feedback is due.
    pub fn eps_mean(&self) -> f64 {
        if self.resolved.is_empty() {
            return 0.0;
        }
        1.0 - self.acked as f64 / self.resolved.len() as f64
    }

    /// Erasure-indicator variance over one RTT period, from the last
    /// `rtt_slots` resolved samples when available.
    pub fn nu(&self, rtt_slots: u64) -> f64 {
        let n = self.resolved.len() as u64;
        let eps = if n < rtt_slots {
            self.eps_mean()
        } else {
            let window = self
                .resolved
                .values()
                .rev()
                .take(rtt_slots as usize)
                .filter(|acked| !**acked)
                .count();
            window as f64 / rtt_slots as f64
        };
        (eps - eps * eps) * rtt_slots as f64
    }

    /// The (eps_mean, nu, eps_max) triple used by the adaptive scheduler.
    pub fn estimate(&self, rtt_slots: u64, alpha: f64) -> ChannelEstimate {
        let eps_mean = self.eps_mean();
        let nu = self.nu(rtt_slots);
        ChannelEstimate {
            eps_mean,
            nu,
            eps_max_alpha: eps_max_alpha(eps_mean, nu, rtt_slots as u32, alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_acked_means_zero_erasure() {
        let mut est = ErasureEstimator::new();
        for slot in 0..40 {
            est.record_acked(slot);
        }
        assert_eq!(est.eps_mean(), 0.0);
        let e = est.estimate(16, 3.0);
        assert_eq!(e.eps_max_alpha, 0.0);
    }

    #[test]
    fn mean_matches_direct_substitution() {
        // 100 resolved transmissions, 90 acked.
        let mut est = ErasureEstimator::new();
        for slot in 0..100u64 {
            if slot < 90 {
                est.record_acked(slot);
            } else {
                est.record_erased(slot);
            }
        }
        assert!((est.eps_mean() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn no_resolved_feedback_returns_prior_defaults() {
        let est = ErasureEstimator::new();
        let e = est.estimate(16, 3.0);
        assert_eq!(e.eps_mean, 0.0);
        assert_eq!(e.nu, 0.0);
        assert_eq!(e.eps_max_alpha, 0.0);
    }

    #[test]
    fn bernoulli_fallback_matches_closed_form() {
        let mut est = ErasureEstimator::new();
        // Fewer than RTT samples: fall back to eps(1-eps)*RTT.
        for slot in 0..10u64 {
            if slot == 0 {
                est.record_erased(slot);
            } else {
                est.record_acked(slot);
            }
        }
        let eps = est.eps_mean();
        assert!((est.nu(16) - (eps - eps * eps) * 16.0).abs() < 1e-12);
    }

    #[test]
    fn windowed_variance_uses_recent_samples_only() {
        let mut est = ErasureEstimator::new();
        // Old erasures followed by a clean RTT window.
        for slot in 0..16u64 {
            est.record_erased(slot);
        }
        for slot in 16..32u64 {
            est.record_acked(slot);
        }
        assert_eq!(est.nu(16), 0.0);
        assert!((est.eps_mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn late_ack_flips_the_verdict() {
        let mut est = ErasureEstimator::new();
        est.record_erased(5);
        assert_eq!(est.eps_mean(), 1.0);
        est.record_acked(5);
        assert_eq!(est.eps_mean(), 0.0);
    }
}
