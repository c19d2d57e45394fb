//! The slotted experience/datapoint engine.
//!
//! One experience transfers the whole file over one channel segment:
//! each slot delivers due packets to the receiver, hands due
//! acknowledgments to the scheduler, then asks the scheduler for at most
//! one transmission. An experience yields the (normalized throughput,
//! mean in-order delay, max in-order delay) triple; a datapoint averages
//! the triple over a fixed number of experiences. Everything is
//! deterministic in (config, seed), independent of thread layout.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_transmit, ge_generate, ChannelProfile, GeParams, Transmit};
use crate::linalg::EliminationState;
use crate::packet::{generate_sources, CodedPacket, FeedbackMsg, PacketKind};
use crate::report::{ReportRow, METRIC_MAX_DELAY, METRIC_MEAN_DELAY, METRIC_THROUGHPUT};
use crate::scheme::{build_scheme, LinkParams, SchemeKind, SchemeParams};
use crate::{Error, Result};

/// Seed domains so channel, payload, coefficient and feedback streams
/// never alias.
const SALT_SOURCES: u64 = 0x5eed_0001;
const SALT_SCHEME: u64 = 0x5eed_0002;
const SALT_FEEDBACK: u64 = 0x5eed_0003;
const SALT_CHANNEL: u64 = 0x5eed_0004;

/// Where the per-slot channel behavior comes from.
#[derive(Debug, Clone)]
pub enum ChannelSource {
    /// Replay one recorded profile; consecutive experiences of a
    /// datapoint consume consecutive segments.
    Trace(Arc<ChannelProfile>),
    /// Synthesize a fresh GE profile per experience.
    Ge {
        params: GeParams,
        rtt_us: u32,
        slot_us: u32,
    },
}

/// Full description of one simulation cell.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_packets: u32,
    pub packet_bytes: usize,
    pub scheme: SchemeKind,
    pub scheme_params: SchemeParams,
    pub channel: ChannelSource,
    /// NACK timeout; defaults to twice the profile's largest RTT.
    pub timeout_slots: Option<u64>,
    /// Nominal RTT used by schedulers; defaults to the profile median.
    pub rtt_slots: Option<u64>,
    /// Probability that one acknowledgment is lost (default lossless).
    pub feedback_loss: f64,
    pub seed: u64,
    pub experiences_per_datapoint: u32,
    /// Horizon per experience; runs that exceed it are incomplete.
    pub max_slots: u64,
}

impl SimConfig {
    pub fn new(scheme: SchemeKind, channel: ChannelSource, seed: u64) -> Self {
        Self {
            n_packets: 100,
            packet_bytes: 1000,
            scheme,
            scheme_params: SchemeParams::default(),
            channel,
            timeout_slots: None,
            rtt_slots: None,
            feedback_loss: 0.0,
            seed,
            experiences_per_datapoint: 10,
            max_slots: 100_000,
        }
    }
}

/// Metrics of one completed (or truncated) experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceResult {
    pub normalized_throughput: f64,
    pub mean_inorder_delay_slots: f64,
    pub max_inorder_delay_slots: f64,
    pub per_packet_delays: Vec<u64>,
    pub slots_consumed: u64,
    pub transmissions: u64,
    /// False when the profile or the slot horizon ran out first.
    pub complete: bool,
}

/// The triple averaged over the experiences of one datapoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Datapoint {
    pub throughput: f64,
    pub mean_delay_slots: f64,
    pub max_delay_slots: f64,
    pub experiences: u32,
    /// Experiences dropped because the channel ran out.
    pub incomplete: u32,
}

/// One experience as recorded in run output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRecord {
    pub mode: String,
    pub algorithm: String,
    pub datapoint: u32,
    pub experience: u32,
    pub seed: u64,
    pub throughput: f64,
    pub mean_delay_slots: f64,
    pub max_delay_slots: f64,
    pub slots_consumed: u64,
    pub transmissions: u64,
    pub complete: bool,
    pub per_packet_delays: Vec<u64>,
}

/// One datapoint as recorded in run output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatapointRecord {
    pub mode: String,
    pub algorithm: String,
    pub datapoint: u32,
    pub throughput: f64,
    pub mean_delay_slots: f64,
    pub max_delay_slots: f64,
}

/// Run one experience over `profile[offset..]`. Local slot numbering
/// starts at zero; `offset` only shifts the channel lookup.
pub fn run_experience(
    config: &SimConfig,
    profile: &ChannelProfile,
    offset: u64,
    seed: u64,
) -> Result<ExperienceResult> {
    let n = config.n_packets;
    let sources = Arc::new(generate_sources(
        n,
        config.packet_bytes,
        seed ^ SALT_SOURCES,
    ));
    let link = LinkParams {
        n_packets: n,
        rtt_slots: config.rtt_slots.unwrap_or_else(|| profile.nominal_rtt_slots()),
        timeout_slots: config
            .timeout_slots
            .unwrap_or_else(|| profile.default_timeout_slots()),
    };
    let mut scheme = build_scheme(
        config.scheme,
        &config.scheme_params,
        Arc::clone(&sources),
        link,
        seed ^ SALT_SCHEME,
    );
    let mut fb_rng = ChaCha8Rng::seed_from_u64(seed ^ SALT_FEEDBACK);

    let mut receiver = EliminationState::new(n);
    let mut decoded_upto: u32 = 0;
    let mut decode_slot: Vec<Option<u64>> = vec![None; n as usize + 1];
    let mut first_tx: Vec<Option<u64>> = vec![None; n as usize + 1];

    let mut arrivals: BTreeMap<u64, Vec<CodedPacket>> = BTreeMap::new();
    let mut feedback: BTreeMap<u64, Vec<FeedbackMsg>> = BTreeMap::new();

    let mut transmissions: u64 = 0;
    let mut complete = false;
    let mut slots_consumed = 0u64;

    let in_order_only = scheme.receiver_in_order_only();
    for slot in 0..config.max_slots {
        if let Some(pkts) = arrivals.remove(&slot) {
            for pkt in pkts {
                // An in-order-only receiver acknowledges every delivery
                // but banks nothing past the first gap.
                let accept = !in_order_only || pkt.w_min() == decoded_upto + 1;
                if accept {
                    receiver.eliminate_insert(&pkt.coeffs, &pkt.payload)?;
                }
                while decoded_upto < n && receiver.is_decoded(decoded_upto + 1) {
                    decoded_upto += 1;
                    decode_slot[decoded_upto as usize] = Some(slot);
                }
                let fb = FeedbackMsg {
                    tx_slot_echo: pkt.tx_slot,
                    seen_dof: receiver.rank() as u32,
                    decoded_upto,
                    is_ack: true,
                };
                let fb_slot = pkt.tx_slot + profile.rtt_slots_of(
                    profile
                        .record(offset + pkt.tx_slot)
                        .expect("transmitted slot exists"),
                );
                let dropped = config.feedback_loss > 0.0
                    && fb_rng.gen_bool(config.feedback_loss.clamp(0.0, 1.0));
                if !dropped {
                    feedback.entry(fb_slot).or_default().push(fb);
                }
            }
        }

        if decoded_upto == n {
            complete = true;
            slots_consumed = slot.max(1);
            break;
        }

        if let Some(msgs) = feedback.remove(&slot) {
            for fb in msgs {
                scheme.on_feedback(&fb, slot);
            }
        }

        if let Some(pkt) = scheme.next_packet(slot) {
            debug_assert_eq!(pkt.tx_slot, slot);
            // Coded windows start at the oldest undecoded packet; the
            // sender's floor may never pass what the receiver confirmed.
            debug_assert!(
                pkt.kind == PacketKind::Uncoded || pkt.w_min() <= decoded_upto + 1,
                "sender window floor {} ahead of receiver decoded_upto {}",
                pkt.w_min(),
                decoded_upto
            );
            match channel_transmit(profile, offset + slot) {
                Ok(outcome) => {
                    transmissions += 1;
                    if matches!(pkt.kind, PacketKind::NewInfo | PacketKind::Uncoded) {
                        for index in pkt.w_min()..=pkt.w_max() {
                            first_tx[index as usize].get_or_insert(slot);
                        }
                    }
                    if let Transmit::Delivered { arrival_slot, .. } = outcome {
                        // channel_transmit speaks profile-relative slots;
                        // the queues here run on experience-local time.
                        arrivals.entry(arrival_slot - offset).or_default().push(pkt);
                    }
                }
                Err(Error::ProfileExhausted { .. }) => {
                    slots_consumed = slot;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        slots_consumed = slot + 1;
    }

    let mut per_packet_delays = Vec::with_capacity(n as usize);
    if complete {
        for index in 1..=n as usize {
            let tx = first_tx[index].expect("decoded packet was transmitted");
            let decoded = decode_slot[index].expect("complete run decoded everything");
            per_packet_delays.push(decoded - tx);
        }
    }
    let mean = if per_packet_delays.is_empty() {
        0.0
    } else {
        per_packet_delays.iter().sum::<u64>() as f64 / per_packet_delays.len() as f64
    };
    let max = per_packet_delays.iter().copied().max().unwrap_or(0) as f64;
    Ok(ExperienceResult {
        // Delivered information over transmitted information; for a
        // truncated run only the in-order-delivered prefix counts.
        normalized_throughput: if transmissions == 0 {
            0.0
        } else {
            decoded_upto as f64 / transmissions as f64
        },
        mean_inorder_delay_slots: mean,
        max_inorder_delay_slots: max,
        per_packet_delays,
        slots_consumed,
        transmissions,
        complete,
    })
}

/// Experiences of one datapoint, in seed order. Trace channels advance
/// through the profile segment by segment; GE channels synthesize a
/// fresh profile per experience.
pub fn run_datapoint_experiences(config: &SimConfig) -> Result<Vec<ExperienceResult>> {
    if config.experiences_per_datapoint == 0 {
        return Err(Error::Config(
            "experiences_per_datapoint must be at least 1".into(),
        ));
    }
    let mut results = Vec::with_capacity(config.experiences_per_datapoint as usize);
    let mut trace_offset = 0u64;
    for i in 0..config.experiences_per_datapoint {
        let seed = config.seed.wrapping_add(i as u64);
        let result = match &config.channel {
            ChannelSource::Trace(profile) => {
                if trace_offset >= profile.len() as u64 {
                    // Channel profile exhausted: stop collecting.
                    break;
                }
                let r = run_experience(config, profile, trace_offset, seed)?;
                trace_offset += r.slots_consumed;
                r
            }
            ChannelSource::Ge {
                params,
                rtt_us,
                slot_us,
            } => {
                let profile = ge_generate(
                    params,
                    config.max_slots as usize,
                    *rtt_us,
                    *slot_us,
                    seed ^ SALT_CHANNEL,
                )?;
                run_experience(config, &profile, 0, seed)?
            }
        };
        results.push(result);
    }
    Ok(results)
}

/// Mean of each metric over the completed experiences.
pub fn run_datapoint(config: &SimConfig) -> Result<Datapoint> {
    let results = run_datapoint_experiences(config)?;
    datapoint_from(&results)
}

pub fn datapoint_from(results: &[ExperienceResult]) -> Result<Datapoint> {
    let completed: Vec<&ExperienceResult> = results.iter().filter(|r| r.complete).collect();
    if completed.is_empty() {
        return Err(Error::NoCompletedExperience);
    }
    let n = completed.len() as f64;
    Ok(Datapoint {
        throughput: completed.iter().map(|r| r.normalized_throughput).sum::<f64>() / n,
        mean_delay_slots: completed
            .iter()
            .map(|r| r.mean_inorder_delay_slots)
            .sum::<f64>()
            / n,
        max_delay_slots: completed
            .iter()
            .map(|r| r.max_inorder_delay_slots)
            .sum::<f64>()
            / n,
        experiences: completed.len() as u32,
        incomplete: (results.len() - completed.len()) as u32,
    })
}

/// One sweep cell: a labelled config plus how many datapoints to run.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub mode: String,
    pub config: SimConfig,
    pub datapoints: u32,
}

/// Everything a sweep produced for one cell.
#[derive(Debug, Clone)]
pub struct SweepCellOutput {
    pub mode: String,
    pub algorithm: String,
    pub experiences: Vec<ExperienceRecord>,
    pub datapoints: Vec<DatapointRecord>,
}

/// Sweep result: summary rows plus the full per-experience trail.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ReportRow>,
    pub experiences: Vec<ExperienceRecord>,
    pub datapoints: Vec<DatapointRecord>,
    /// Per-cell errors, reported without aborting the sweep.
    pub errors: Vec<(String, String)>,
}

fn sample_stdev(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    var.sqrt()
}

fn summarize_metric(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let stdev = sample_stdev(values, mean);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let p99 = crate::analysis::percentile_nearest_rank(&sorted, 0.99);
    (mean, stdev, p99)
}

fn run_cell(entry: &SweepEntry) -> Result<SweepCellOutput> {
    let algorithm = entry.config.scheme.name().to_string();
    let mut experiences = Vec::new();
    let mut datapoints = Vec::new();
    let mut config = entry.config.clone();
    for dp in 0..entry.datapoints {
        config.seed = entry
            .config
            .seed
            .wrapping_add((dp * entry.config.experiences_per_datapoint) as u64);
        let results = run_datapoint_experiences(&config)?;
        for (i, r) in results.iter().enumerate() {
            experiences.push(ExperienceRecord {
                mode: entry.mode.clone(),
                algorithm: algorithm.clone(),
                datapoint: dp,
                experience: i as u32,
                seed: config.seed.wrapping_add(i as u64),
                throughput: r.normalized_throughput,
                mean_delay_slots: r.mean_inorder_delay_slots,
                max_delay_slots: r.max_inorder_delay_slots,
                slots_consumed: r.slots_consumed,
                transmissions: r.transmissions,
                complete: r.complete,
                per_packet_delays: r.per_packet_delays.clone(),
            });
        }
        let dp_metrics = datapoint_from(&results)?;
        datapoints.push(DatapointRecord {
            mode: entry.mode.clone(),
            algorithm: algorithm.clone(),
            datapoint: dp,
            throughput: dp_metrics.throughput,
            mean_delay_slots: dp_metrics.mean_delay_slots,
            max_delay_slots: dp_metrics.max_delay_slots,
        });
    }
    Ok(SweepCellOutput {
        mode: entry.mode.clone(),
        algorithm,
        experiences,
        datapoints,
    })
}

/// Run every cell (in parallel) and summarize each metric over the
/// cell's datapoints: mean, sample stdev and nearest-rank P99.
pub fn sweep(entries: &[SweepEntry]) -> SweepOutput {
    let cell_results: Vec<(usize, Result<SweepCellOutput>)> = entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| (i, run_cell(entry)))
        .collect();

    let mut rows = Vec::new();
    let mut experiences = Vec::new();
    let mut datapoints = Vec::new();
    let mut errors = Vec::new();
    let mut ordered = cell_results;
    ordered.sort_by_key(|(i, _)| *i);
    for (i, cell) in ordered {
        match cell {
            Ok(cell) => {
                let metric_values = |f: fn(&DatapointRecord) -> f64| {
                    cell.datapoints.iter().map(f).collect::<Vec<f64>>()
                };
                for (metric, values) in [
                    (METRIC_THROUGHPUT, metric_values(|d| d.throughput)),
                    (METRIC_MEAN_DELAY, metric_values(|d| d.mean_delay_slots)),
                    (METRIC_MAX_DELAY, metric_values(|d| d.max_delay_slots)),
                ] {
                    if values.is_empty() {
                        continue;
                    }
                    let (mean, stdev, p99) = summarize_metric(&values);
                    rows.push(ReportRow {
                        mode: cell.mode.clone(),
                        algorithm: cell.algorithm.clone(),
                        metric: metric.to_string(),
                        mean,
                        stdev,
                        p99,
                    });
                }
                experiences.extend(cell.experiences);
                datapoints.extend(cell.datapoints);
            }
            Err(e) => {
                errors.push((
                    format!("{}/{}", entries[i].mode, entries[i].config.scheme.name()),
                    e.to_string(),
                ));
            }
        }
    }
    SweepOutput {
        rows,
        experiences,
        datapoints,
        errors,
    }
}
