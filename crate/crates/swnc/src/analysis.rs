//! Theory-side tools: confidence-scaled erasure rates, in-order delay
//! upper bounds over the Gilbert-Elliott channel, empirical delay
//! distributions, extreme-value overlays and latency-class tagging.

use crate::report::ReportRow;
use crate::{Error, Result};

/// Euler-Mascheroni constant, used by the Gumbel moment fit.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Inputs for the in-order delay upper bound.
#[derive(Debug, Clone, Copy)]
pub struct DelayBoundInput {
    /// Mean erasure rate.
    pub eps_mean: f64,
    /// Erasure-indicator variance over one RTT period.
    pub nu: f64,
    pub rtt_slots: u32,
    /// Confidence factor of the deviation rule.
    pub alpha: f64,
    /// Throughput-delay threshold of the retransmission condition.
    pub th: f64,
    /// Degrees-of-freedom rate (needed over added).
    pub d: f64,
    /// Burst-end probability of the GE channel.
    pub s: f64,
}

/// Confidence-scaled erasure rate: `eps_mean + alpha * sqrt(nu) / rtt`,
/// clamped to [0, 1].
pub fn eps_max_alpha(eps_mean: f64, nu: f64, rtt_slots: u32, alpha: f64) -> f64 {
    assert!(rtt_slots > 0, "rtt_slots must be positive");
    (eps_mean + alpha * nu.sqrt() / rtt_slots as f64).clamp(0.0, 1.0)
}

/// Stationary erasure-indicator variance over one RTT period:
/// `(pi_b * eps_b - (pi_b * eps_b)^2) * rtt`.
pub fn ge_variance(pi_b: f64, eps_b: f64, rtt_slots: u32) -> f64 {
    let p = pi_b * eps_b;
    (p - p * p) * rtt_slots as f64
}

/// Retransmission scaling term of the GE channel:
/// `(1 / (1 - s)) * (1 / s - s) - 1`.
///
/// Evaluated as written; defined for `s` in `(0, 1 - 1e-9]`.
pub fn ge_scaling(s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0 - 1e-9) {
        return Err(Error::ParamRange {
            name: "s",
            value: s,
            range: "(0, 1 - 1e-9]",
        });
    }
    Ok((1.0 / (1.0 - s)) * (1.0 / s - s) - 1.0)
}

/// Result of the delay bound: a finite slot count, or infeasible when
/// the retransmission condition cannot hold for any DoF rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayBound {
    Slots(f64),
    /// No feasible operating point: `1 - d - eps_max <= th` even at `d = 0`.
    Infeasible,
}

impl DelayBound {
    pub fn as_slots(&self) -> Option<f64> {
        match self {
            DelayBound::Slots(v) => Some(*v),
            DelayBound::Infeasible => None,
        }
    }
}

/// Upper bound on the in-order delivery delay, in slots.
///
/// The confidence-scaled erasure rate replaces the mean in the
/// retransmission probability, each retransmission round costs one RTT,
/// and rounds are inflated by the GE retransmission scaling term:
///
/// `D = (RTT + RTT * eps_max * scaling(s)) * (1 + d) / (1 - th)`
///
/// With no losses this collapses to one RTT. The bound is reported as
/// infeasible when `1 - eps_max <= th`, where the scheme would repair
/// forever even with every needed DoF already added.
pub fn delay_upper_bound(input: &DelayBoundInput) -> Result<DelayBound> {
    let eps_max = eps_max_alpha(input.eps_mean, input.nu, input.rtt_slots, input.alpha);
    if input.th >= 1.0 || 1.0 - input.d - eps_max <= input.th {
        return Ok(DelayBound::Infeasible);
    }
    let scaling = ge_scaling(input.s)?;
    let rtt = input.rtt_slots as f64;
    let rounds = rtt + rtt * eps_max * scaling;
    Ok(DelayBound::Slots(
        rounds * (1.0 + input.d) / (1.0 - input.th),
    ))
}

/// Bound curve over a mean-erasure-rate grid for one confidence factor,
/// with the GE closed-form variance at each grid point.
pub fn ge_delay_bound_curve(
    s: f64,
    rtt_slots: u32,
    alpha: f64,
    th: f64,
    d: f64,
    eps_grid: &[f64],
) -> Result<Vec<(f64, DelayBound)>> {
    eps_grid
        .iter()
        .map(|&eps| {
            let nu = ge_variance(eps, 1.0, rtt_slots);
            let bound = delay_upper_bound(&DelayBoundInput {
                eps_mean: eps,
                nu,
                rtt_slots,
                alpha,
                th,
                d,
                s,
            })?;
            Ok((eps, bound))
        })
        .collect()
}

/// Nearest-rank percentile of a sorted sample: the `ceil(p * n)`-th
/// order statistic, no interpolation.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// An empirical distribution over delay samples.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut sorted: Vec<f64> = samples.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::EmptySample);
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite delay sample"));
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .sorted
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / self.sorted.len() as f64;
        var.sqrt()
    }

    /// Right-continuous CDF: fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        percentile_nearest_rank(&self.sorted, p)
    }
}

/// Fraction of delay samples at or below the bound; the empirical
/// success probability of the bound.
pub fn coverage(dist: &EmpiricalDistribution, bound_slots: f64) -> f64 {
    dist.cdf(bound_slots)
}

/// Type-1 extreme value (Gumbel) CDF fitted by the method of moments:
/// `scale = sigma * sqrt(6) / pi`, `location = mu - scale * gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelFit {
    pub location: f64,
    pub scale: f64,
}

impl GumbelFit {
    pub fn from_moments(mean: f64, std_dev: f64) -> Self {
        let scale = std_dev * 6f64.sqrt() / std::f64::consts::PI;
        Self {
            location: mean - scale * EULER_GAMMA,
            scale,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.scale == 0.0 {
            // Zero-variance sample: degenerate step at the location.
            return if x >= self.location { 1.0 } else { 0.0 };
        }
        (-(-(x - self.location) / self.scale).exp()).exp()
    }

    /// Inverse CDF, handy for sampling in round-trip checks.
    pub fn quantile(&self, p: f64) -> f64 {
        self.location - self.scale * (-p.ln()).ln()
    }
}

/// Fit the Gumbel overlay to an empirical delay distribution.
pub fn gumbel_overlay(dist: &EmpiricalDistribution) -> GumbelFit {
    GumbelFit::from_moments(dist.mean(), dist.std_dev())
}

/// Latency-class tags for one (mode, algorithm) summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceTags {
    pub mode: String,
    pub algorithm: String,
    /// Mean in-order delay within the 10 ms budget.
    pub llc: bool,
    /// P99 of the max in-order delay within the 10 ms budget.
    pub urllc: bool,
}

/// The 10 ms latency budget expressed in whole slots.
pub fn latency_budget_slots(slot_duration_us: u32) -> f64 {
    (10_000 / slot_duration_us) as f64
}

/// Tag summary rows: LLC when the mean of the mean in-order delay fits
/// the budget, URLLC when the P99 of the max in-order delay does.
pub fn classify_llc_urllc(rows: &[ReportRow], slot_duration_us: u32) -> Vec<ServiceTags> {
    let budget = latency_budget_slots(slot_duration_us);
    let mut keys: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.mode.clone(), row.algorithm.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(mode, algorithm)| {
            let find = |metric: &str| {
                rows.iter()
                    .find(|r| r.mode == mode && r.algorithm == algorithm && r.metric == metric)
            };
            let llc = find(crate::report::METRIC_MEAN_DELAY)
                .map(|r| r.mean <= budget)
                .unwrap_or(false);
            let urllc = find(crate::report::METRIC_MAX_DELAY)
                .map(|r| r.p99 <= budget)
                .unwrap_or(false);
            ServiceTags {
                mode,
                algorithm,
                llc,
                urllc,
            }
        })
        .collect()
}
