//! Slotted erasure/RTT channels.
//!
//! A channel is a finite sequence of per-slot `(rtt_us, lost)` records,
//! either replayed from a recorded trace or synthesized from a two-state
//! Gilbert-Elliott (GE) chain. The forward channel erases packets; the
//! feedback channel is loss-free by default.
//!
//! On the GE chain, `s` is the probability that the bad (burst) state
//! ends in a slot and `q` the probability that the good state ends, so
//! the stationary split is `pi_g = s / (s + q)` and the mean burst
//! length is `1/s`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default slot duration in microseconds.
pub const DEFAULT_SLOT_US: u32 = 450;

/// One slot of channel behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    /// Round-trip time seen by a packet sent in this slot, in microseconds.
    pub rtt_us: u32,
    /// Whether the forward transmission of this slot is erased.
    pub lost: bool,
}

/// A recorded or synthesized channel: ordered slot records plus the slot
/// duration they were sampled at. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelProfile {
    pub slot_duration_us: u32,
    pub label: String,
    records: Vec<SlotRecord>,
}

impl ChannelProfile {
    pub fn new(slot_duration_us: u32, label: impl Into<String>, records: Vec<SlotRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if slot_duration_us == 0 {
            return Err(Error::ParamRange {
                name: "slot_duration_us",
                value: 0.0,
                range: "> 0",
            });
        }
        if let Some(bad) = records.iter().find(|r| r.rtt_us == 0) {
            return Err(Error::ParamRange {
                name: "rtt_us",
                value: bad.rtt_us as f64,
                range: "> 0",
            });
        }
        Ok(Self {
            slot_duration_us,
            label: label.into(),
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    pub fn record(&self, slot: u64) -> Option<&SlotRecord> {
        self.records.get(slot as usize)
    }

    /// RTT of `record` expressed in slots (rounded, at least one).
    pub fn rtt_slots_of(&self, record: &SlotRecord) -> u64 {
        let half = self.slot_duration_us as u64 / 2;
        ((record.rtt_us as u64 + half) / self.slot_duration_us as u64).max(1)
    }

    pub fn max_rtt_slots(&self) -> u64 {
        self.records
            .iter()
            .map(|r| self.rtt_slots_of(r))
            .max()
            .unwrap_or(1)
    }

    /// Median RTT in slots; schemes use it as the nominal feedback horizon.
    pub fn nominal_rtt_slots(&self) -> u64 {
        let mut rtts: Vec<u64> = self.records.iter().map(|r| self.rtt_slots_of(r)).collect();
        rtts.sort_unstable();
        rtts[rtts.len() / 2]
    }

    /// Timeout default: twice the largest observed RTT.
    pub fn default_timeout_slots(&self) -> u64 {
        2 * self.max_rtt_slots()
    }

    pub fn loss_fraction(&self) -> f64 {
        self.records.iter().filter(|r| r.lost).count() as f64 / self.records.len() as f64
    }

    /// Serialize in the trace format: a `# slot_us=.. label=..` comment,
    /// a `slot,rtt_us,lost` header, then one row per slot.
    pub fn to_trace_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# slot_us={} label={}", self.slot_duration_us, self.label);
        out.push_str("slot,rtt_us,lost\n");
        for (i, r) in self.records.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i, r.rtt_us, u8::from(r.lost));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_trace_string())?;
        Ok(())
    }

    pub fn from_trace_reader<R: Read>(reader: R) -> Result<Self> {
        let mut slot_us = DEFAULT_SLOT_US;
        let mut label = String::new();
        let mut records = Vec::new();
        let mut seen_header = false;
        for (line_no, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                for token in comment.split_whitespace() {
                    if let Some(v) = token.strip_prefix("slot_us=") {
                        slot_us = v.parse().map_err(|_| Error::TraceParse {
                            line: line_no + 1,
                            reason: format!("bad slot_us value {v:?}"),
                        })?;
                    } else if let Some(v) = token.strip_prefix("label=") {
                        label = v.to_string();
                    }
                }
                continue;
            }
            if !seen_header {
                if trimmed != "slot,rtt_us,lost" {
                    return Err(Error::TraceParse {
                        line: line_no + 1,
                        reason: format!("expected header `slot,rtt_us,lost`, found {trimmed:?}"),
                    });
                }
                seen_header = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let parse_err = |reason: String| Error::TraceParse {
                line: line_no + 1,
                reason,
            };
            let slot: u64 = fields
                .next()
                .ok_or_else(|| parse_err("missing slot".into()))?
                .parse()
                .map_err(|e| parse_err(format!("bad slot: {e}")))?;
            if slot != records.len() as u64 {
                return Err(parse_err(format!(
                    "non-sequential slot index {slot}, expected {}",
                    records.len()
                )));
            }
            let rtt_us: u32 = fields
                .next()
                .ok_or_else(|| parse_err("missing rtt_us".into()))?
                .parse()
                .map_err(|e| parse_err(format!("bad rtt_us: {e}")))?;
            let lost = match fields.next() {
                Some("0") => false,
                Some("1") => true,
                other => return Err(parse_err(format!("bad lost flag {other:?}"))),
            };
            if fields.next().is_some() {
                return Err(parse_err("trailing fields".into()));
            }
            records.push(SlotRecord { rtt_us, lost });
        }
        Self::new(slot_us, label, records)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_trace_reader(file)
    }
}

/// Gilbert-Elliott channel parameters.
///
/// Defaults model pure burst erasure: erasure probability zero in the
/// good state and one in the bad state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeParams {
    /// P(bad -> good): the burst ends.
    pub s: f64,
    /// P(good -> bad): a burst starts.
    pub q: f64,
    /// Erasure probability in the good state.
    pub eps_good: f64,
    /// Erasure probability in the bad state.
    pub eps_bad: f64,
}

impl GeParams {
    pub fn new(s: f64, q: f64, eps_good: f64, eps_bad: f64) -> Result<Self> {
        for (name, value) in [
            ("s", s),
            ("q", q),
            ("eps_good", eps_good),
            ("eps_bad", eps_bad),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::ParamRange {
                    name: match name {
                        "s" => "s",
                        "q" => "q",
                        "eps_good" => "eps_good",
                        _ => "eps_bad",
                    },
                    value,
                    range: "[0, 1]",
                });
            }
        }
        Ok(Self {
            s,
            q,
            eps_good,
            eps_bad,
        })
    }

    /// Pure burst-erasure chain: `eps_good = 0`, `eps_bad = 1`.
    pub fn bursty(s: f64, q: f64) -> Result<Self> {
        Self::new(s, q, 0.0, 1.0)
    }

    /// Mean length of a bad-state visit.
    pub fn mean_burst(&self) -> f64 {
        1.0 / self.s
    }
}

/// Stationary distribution `(pi_g, pi_b)` and the mean erasure rate
/// `pi_b * eps_bad` (the good state contributes `pi_g * eps_good`, zero
/// under the burst-erasure defaults).
pub fn ge_stationary(p: &GeParams) -> Result<(f64, f64, f64)> {
    if p.s + p.q <= 0.0 {
        return Err(Error::DegenerateGe);
    }
    let pi_g = p.s / (p.s + p.q);
    let pi_b = 1.0 - pi_g;
    let eps_mean = pi_b * p.eps_bad + pi_g * p.eps_good;
    Ok((pi_g, pi_b, eps_mean))
}

/// Synthesize a profile by simulating the GE chain for `n_slots`,
/// starting from the stationary distribution. RTT is constant; the GE
/// abstraction does not model RTT variance. Deterministic per seed.
pub fn ge_generate(
    p: &GeParams,
    n_slots: usize,
    rtt_us: u32,
    slot_duration_us: u32,
    seed: u64,
) -> Result<ChannelProfile> {
    if n_slots == 0 {
        return Err(Error::EmptyProfile);
    }
    let (_, pi_b, _) = ge_stationary(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = rng.gen_bool(pi_b);
    let mut records = Vec::with_capacity(n_slots);
    for _ in 0..n_slots {
        let eps = if bad { p.eps_bad } else { p.eps_good };
        let lost = match eps {
            e if e <= 0.0 => false,
            e if e >= 1.0 => true,
            e => rng.gen_bool(e),
        };
        records.push(SlotRecord { rtt_us, lost });
        let flip = if bad { p.s } else { p.q };
        if flip > 0.0 && (flip >= 1.0 || rng.gen_bool(flip)) {
            bad = !bad;
        }
    }
    ChannelProfile::new(slot_duration_us, "ge", records)
}

/// Fit burst-erasure GE parameters from a recorded profile: `s` is the
/// reciprocal mean loss-run length, the loss fraction gives `pi_b`, and
/// `q = s * pi_b / pi_g`.
pub fn fit_ge(profile: &ChannelProfile) -> Result<GeParams> {
    let mut runs = 0u64;
    let mut lost_slots = 0u64;
    let mut prev_lost = false;
    for r in profile.records() {
        if r.lost {
            lost_slots += 1;
            if !prev_lost {
                runs += 1;
            }
        }
        prev_lost = r.lost;
    }
    if lost_slots == 0 {
        return Err(Error::FitDegenerate {
            reason: "profile contains no lost slots",
        });
    }
    if lost_slots == profile.len() as u64 {
        return Err(Error::FitDegenerate {
            reason: "profile contains no clear slots",
        });
    }
    let mean_burst = lost_slots as f64 / runs as f64;
    let s = 1.0 / mean_burst;
    let eps_mean = lost_slots as f64 / profile.len() as f64;
    let pi_b = eps_mean;
    let q = s * pi_b / (1.0 - pi_b);
    GeParams::bursty(s, q.min(1.0))
}

/// Outcome of pushing one packet into the forward channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transmit {
    /// Delivered; the receiver decodes at `arrival_slot` and the sender
    /// hears the acknowledgment at `feedback_slot`.
    Delivered { arrival_slot: u64, feedback_slot: u64 },
    /// Erased; the packet never arrives and no acknowledgment is generated.
    Erased,
}

/// Transmit in `slot`. The feedback lands a full RTT after the sending
/// slot; the receiver-side arrival sits one transmission delay plus one
/// propagation delay in, i.e. `ceil((rtt_slots + 1) / 2)`.
pub fn channel_transmit(profile: &ChannelProfile, slot: u64) -> Result<Transmit> {
    let record = profile
        .record(slot)
        .ok_or(Error::ProfileExhausted { slot })?;
    if record.lost {
        return Ok(Transmit::Erased);
    }
    let rtt_slots = profile.rtt_slots_of(record);
    let one_way = rtt_slots.div_ceil(2);
    Ok(Transmit::Delivered {
        arrival_slot: slot + one_way,
        feedback_slot: slot + rtt_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clear(rtt_us: u32) -> SlotRecord {
        SlotRecord { rtt_us, lost: false }
    }

    fn lost(rtt_us: u32) -> SlotRecord {
        SlotRecord { rtt_us, lost: true }
    }

    #[test]
    fn stationary_examples() {
        let p = GeParams::bursty(0.17, 0.019).unwrap();
        let (pi_g, pi_b, eps) = ge_stationary(&p).unwrap();
        assert!((pi_g - 0.899).abs() < 1e-3, "pi_g = {pi_g}");
        assert!((pi_b - 0.1005).abs() < 1e-3);
        assert!((eps - 0.1005).abs() < 1e-3);

        let never_bad = GeParams::bursty(0.3, 0.0).unwrap();
        let (_, pi_b, eps) = ge_stationary(&never_bad).unwrap();
        assert_eq!(pi_b, 0.0);
        assert_eq!(eps, 0.0);

        let sym = GeParams::bursty(0.25, 0.25).unwrap();
        let (pi_g, pi_b, _) = ge_stationary(&sym).unwrap();
        assert_eq!(pi_g, 0.5);
        assert_eq!(pi_b, 0.5);

        assert!(matches!(
            ge_stationary(&GeParams::bursty(0.0, 0.0).unwrap()),
            Err(Error::DegenerateGe)
        ));
    }

    #[test]
    fn generate_with_zero_bad_erasure_is_all_clear() {
        let p = GeParams::new(0.2, 0.1, 0.0, 0.0).unwrap();
        let profile = ge_generate(&p, 1000, 7200, 450, 1).unwrap();
        assert!(profile.records().iter().all(|r| !r.lost));
    }

    #[test]
    fn generate_is_deterministic_per_seed() {
        let p = GeParams::bursty(0.17, 0.019).unwrap();
        let a = ge_generate(&p, 5000, 7200, 450, 99).unwrap();
        let b = ge_generate(&p, 5000, 7200, 450, 99).unwrap();
        let c = ge_generate(&p, 5000, 7200, 450, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generate_long_run_statistics_match_stationary_math() {
        let p = GeParams::bursty(0.17, 0.019).unwrap();
        let profile = ge_generate(&p, 1_000_000, 7200, 450, 7).unwrap();
        let loss = profile.loss_fraction();
        assert!((loss - 0.1).abs() < 0.01, "loss = {loss}");

        let mut runs = 0u64;
        let mut lost_total = 0u64;
        let mut prev = false;
        for r in profile.records() {
            if r.lost {
                lost_total += 1;
                if !prev {
                    runs += 1;
                }
            }
            prev = r.lost;
        }
        let mean_burst = lost_total as f64 / runs as f64;
        assert!((mean_burst - 1.0 / 0.17).abs() < 0.5, "burst = {mean_burst}");
    }

    #[test]
    fn fit_recovers_constructed_run_pattern() {
        // 5 lost then 45 clear, repeated: s = 0.2, eps = 0.1, q ~ 0.0222.
        let mut records = Vec::new();
        for _ in 0..100 {
            records.extend(vec![lost(450); 5]);
            records.extend(vec![clear(450); 45]);
        }
        let profile = ChannelProfile::new(450, "synthetic", records).unwrap();
        let fitted = fit_ge(&profile).unwrap();
        assert!((fitted.s - 0.2).abs() < 1e-12);
        let (_, pi_b, eps) = ge_stationary(&fitted).unwrap();
        assert!((eps - 0.1).abs() < 1e-9, "eps = {eps}");
        assert!((pi_b - 0.1).abs() < 1e-9);
        assert!((fitted.q - 0.2 * 0.1 / 0.9).abs() < 1e-9, "q = {}", fitted.q);
    }

    #[test]
    fn fit_single_isolated_losses() {
        let mut records = Vec::new();
        for _ in 0..50 {
            records.push(lost(450));
            records.extend(vec![clear(450); 99]);
        }
        let profile = ChannelProfile::new(450, "iso", records).unwrap();
        let fitted = fit_ge(&profile).unwrap();
        assert_eq!(fitted.s, 1.0);
        let (_, _, eps) = ge_stationary(&fitted).unwrap();
        assert!((eps - 0.01).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_degenerate_profiles() {
        let all_clear = ChannelProfile::new(450, "", vec![clear(450); 10]).unwrap();
        assert!(matches!(
            fit_ge(&all_clear),
            Err(Error::FitDegenerate { .. })
        ));
        let all_lost = ChannelProfile::new(450, "", vec![lost(450); 10]).unwrap();
        assert!(matches!(fit_ge(&all_lost), Err(Error::FitDegenerate { .. })));
    }

    #[test]
    fn fit_round_trips_generated_trace() {
        let p = GeParams::bursty(0.17, 0.019).unwrap();
        let profile = ge_generate(&p, 100_000, 7200, 450, 3).unwrap();
        let fitted = fit_ge(&profile).unwrap();
        assert!((fitted.s - 0.17).abs() < 0.02, "s = {}", fitted.s);
        let (_, _, eps) = ge_stationary(&fitted).unwrap();
        assert!((eps - 0.1).abs() < 0.01, "eps = {eps}");
    }

    #[test]
    fn transmit_timing_matches_rtt_arithmetic() {
        let profile = ChannelProfile::new(450, "", vec![clear(7200); 40]).unwrap();
        // 7200 / 450 = 16 slots round trip; feedback 16 slots after tx.
        match channel_transmit(&profile, 10).unwrap() {
            Transmit::Delivered {
                arrival_slot,
                feedback_slot,
            } => {
                assert_eq!(feedback_slot, 26);
                assert_eq!(arrival_slot, 18);
            }
            Transmit::Erased => panic!("expected delivery"),
        }
    }

    #[test]
    fn transmit_one_slot_rtt_floor() {
        let profile = ChannelProfile::new(450, "", vec![clear(450); 4]).unwrap();
        match channel_transmit(&profile, 0).unwrap() {
            Transmit::Delivered {
                arrival_slot,
                feedback_slot,
            } => {
                assert_eq!(feedback_slot, 1);
                assert_eq!(arrival_slot, 1);
            }
            Transmit::Erased => panic!(),
        }
    }

    #[test]
    fn transmit_erased_and_exhausted() {
        let profile = ChannelProfile::new(450, "", vec![lost(900)]).unwrap();
        assert_eq!(channel_transmit(&profile, 0).unwrap(), Transmit::Erased);
        assert!(matches!(
            channel_transmit(&profile, 1),
            Err(Error::ProfileExhausted { slot: 1 })
        ));
    }

    #[test]
    fn feedback_slots_do_not_reorder_under_constant_rtt() {
        let profile = ChannelProfile::new(450, "", vec![clear(7200); 200]).unwrap();
        let mut last = 0;
        for slot in 0..200 {
            if let Transmit::Delivered { feedback_slot, .. } =
                channel_transmit(&profile, slot).unwrap()
            {
                assert!(feedback_slot >= last);
                last = feedback_slot;
            }
        }
    }

    #[test]
    fn trace_round_trip_is_bit_exact() {
        let p = GeParams::bursty(0.3, 0.05).unwrap();
        let profile = ge_generate(&p, 500, 3600, 450, 11).unwrap();
        let text = profile.to_trace_string();
        assert!(text.starts_with("# slot_us=450 label=ge\nslot,rtt_us,lost\n"));
        let parsed = ChannelProfile::from_trace_reader(text.as_bytes()).unwrap();
        assert_eq!(parsed, profile);
        assert_eq!(parsed.to_trace_string(), text);
    }

    #[test]
    fn trace_parse_errors_carry_line_numbers() {
        let bad_header = "# slot_us=450 label=x\nwrong,header\n";
        assert!(matches!(
            ChannelProfile::from_trace_reader(bad_header.as_bytes()),
            Err(Error::TraceParse { line: 2, .. })
        ));
        let bad_flag = "# slot_us=450 label=x\nslot,rtt_us,lost\n0,450,2\n";
        assert!(matches!(
            ChannelProfile::from_trace_reader(bad_flag.as_bytes()),
            Err(Error::TraceParse { line: 3, .. })
        ));
        let bad_order = "# slot_us=450 label=x\nslot,rtt_us,lost\n1,450,0\n";
        assert!(matches!(
            ChannelProfile::from_trace_reader(bad_order.as_bytes()),
            Err(Error::TraceParse { line: 3, .. })
        ));
    }

    #[test]
    fn loss_run_lengths_pass_chi_square_against_geometric() {
        // Bad-state visits are geometric with parameter s; bin the
        // observed run lengths and test at the 1% level.
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let s = 0.3;
        let p = GeParams::bursty(s, 0.05).unwrap();
        let profile = ge_generate(&p, 1_000_000, 7200, 450, 17).unwrap();

        let mut runs: Vec<u64> = Vec::new();
        let mut current = 0u64;
        for r in profile.records() {
            if r.lost {
                current += 1;
            } else if current > 0 {
                runs.push(current);
                current = 0;
            }
        }
        let n = runs.len() as f64;
        assert!(n > 10_000.0);

        // Bins 1..=9 plus a tail bin for >= 10.
        let max_bin = 10usize;
        let mut observed = vec![0f64; max_bin];
        for &len in &runs {
            let idx = (len as usize).min(max_bin) - 1;
            observed[idx] += 1.0;
        }
        let mut chi2 = 0.0;
        for (i, obs) in observed.iter().enumerate() {
            let k = i + 1;
            let prob = if k < max_bin {
                (1.0 - s).powi(k as i32 - 1) * s
            } else {
                (1.0 - s).powi(max_bin as i32 - 1)
            };
            let expected = prob * n;
            chi2 += (obs - expected) * (obs - expected) / expected;
        }
        let critical = ChiSquared::new((max_bin - 1) as f64)
            .unwrap()
            .inverse_cdf(0.99);
        assert!(
            chi2 < critical,
            "chi2 = {chi2:.2} over critical {critical:.2}"
        );
    }

    #[test]
    fn nominal_rtt_uses_median_slot_count() {
        let mut records = vec![clear(7200); 5];
        records.extend(vec![clear(900); 2]);
        let profile = ChannelProfile::new(450, "", records).unwrap();
        assert_eq!(profile.nominal_rtt_slots(), 16);
        assert_eq!(profile.max_rtt_slots(), 16);
        assert_eq!(profile.default_timeout_slots(), 32);
    }
}
