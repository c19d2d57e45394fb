//! Run configuration: a flat, diffable TOML document with one section
//! per concern (`[run]`, `[channel]`, `[schemes]`, plus one optional
//! section per scheme).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelProfile, GeParams, DEFAULT_SLOT_US};
use crate::scheme::{ArqMode, AswParams, SchemeKind, SchemeParams};
use crate::sim::{ChannelSource, SimConfig, SweepEntry};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_packets: u32,
    pub packet_bytes: usize,
    pub seed: u64,
    pub experiences_per_datapoint: u32,
    pub datapoints: u32,
    pub max_slots: u64,
    pub label: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_packets: 100,
            packet_bytes: 1000,
            seed: 1,
            experiences_per_datapoint: 10,
            datapoints: 10,
            max_slots: 100_000,
            label: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// "ge" or "trace".
    pub kind: String,
    pub s: f64,
    pub q: f64,
    pub eps_good: f64,
    pub eps_bad: f64,
    pub rtt_us: u32,
    pub slot_us: u32,
    pub trace: Option<PathBuf>,
    pub timeout_slots: Option<u64>,
    pub rtt_slots: Option<u64>,
    pub feedback_loss: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            kind: "ge".into(),
            s: 0.17,
            q: 0.019,
            eps_good: 0.0,
            eps_bad: 1.0,
            rtt_us: 7200,
            slot_us: DEFAULT_SLOT_US,
            trace: None,
            timeout_slots: None,
            rtt_slots: None,
            feedback_loss: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemesSection {
    /// Which schemes to run, in report order.
    pub run: Vec<String>,
}

impl Default for SchemesSection {
    fn default() -> Self {
        Self {
            run: vec![
                "arq".into(),
                "rrlnc".into(),
                "fsw-rlnc".into(),
                "asw-rlnc".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArqSection {
    pub mode: Option<ArqMode>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RrlncSection {
    pub batch_size: Option<u32>,
    pub round_size: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FswSection {
    pub fec_every: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AswSection {
    pub th: Option<f64>,
    pub alpha: Option<f64>,
    pub max_window: Option<u32>,
    pub apriori_period: Option<u32>,
}

/// The whole configuration document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub channel: ChannelSection,
    pub schemes: SchemesSection,
    pub arq: ArqSection,
    pub rrlnc: RrlncSection,
    pub fsw: FswSection,
    pub asw: AswSection,
}

fn parse_scheme_name(name: &str) -> Result<SchemeKind> {
    match name {
        "arq" => Ok(SchemeKind::Arq),
        "rrlnc" => Ok(SchemeKind::Rrlnc),
        "fsw-rlnc" | "fsw" => Ok(SchemeKind::FswRlnc),
        "asw-rlnc" | "asw" => Ok(SchemeKind::AswRlnc),
        other => Err(Error::Config(format!(
            "unknown scheme {other:?}; expected arq, rrlnc, fsw-rlnc or asw-rlnc"
        ))),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.run.n_packets == 0 {
            return Err(Error::Config("run.n_packets must be at least 1".into()));
        }
        if self.run.packet_bytes == 0 {
            return Err(Error::Config("run.packet_bytes must be at least 1".into()));
        }
        if self.run.experiences_per_datapoint == 0 {
            return Err(Error::Config(
                "run.experiences_per_datapoint must be at least 1".into(),
            ));
        }
        if self.run.datapoints == 0 {
            return Err(Error::Config("run.datapoints must be at least 1".into()));
        }
        match self.channel.kind.as_str() {
            "ge" => {}
            "trace" => {
                if self.channel.trace.is_none() {
                    return Err(Error::Config(
                        "channel.kind = \"trace\" requires channel.trace".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown channel.kind {other:?}; expected \"ge\" or \"trace\""
                )));
            }
        }
        if self.schemes.run.is_empty() {
            return Err(Error::Config("schemes.run must name at least one scheme".into()));
        }
        for name in &self.schemes.run {
            parse_scheme_name(name)?;
        }
        Ok(())
    }

    pub fn scheme_params(&self) -> SchemeParams {
        let mut params = SchemeParams::default();
        if let Some(mode) = self.arq.mode {
            params.arq_mode = mode;
        }
        if let Some(batch) = self.rrlnc.batch_size {
            params.batch_size = batch;
        }
        params.round_size = self.rrlnc.round_size;
        if let Some(fec_every) = self.fsw.fec_every {
            params.fec_every = fec_every;
        }
        let mut asw = AswParams::default();
        if let Some(th) = self.asw.th {
            asw.th = th;
        }
        if let Some(alpha) = self.asw.alpha {
            asw.alpha = alpha;
        }
        asw.max_window = self.asw.max_window;
        asw.apriori_period = self.asw.apriori_period;
        params.asw = asw;
        params
    }

    /// Channel source plus the label reports carry in their mode column.
    pub fn channel_source(&self, config_dir: &Path) -> Result<(ChannelSource, String)> {
        match self.channel.kind.as_str() {
            "ge" => {
                let params = GeParams::new(
                    self.channel.s,
                    self.channel.q,
                    self.channel.eps_good,
                    self.channel.eps_bad,
                )?;
                let label = self
                    .run
                    .label
                    .clone()
                    .unwrap_or_else(|| format!("ge-s{}-q{}", self.channel.s, self.channel.q));
                Ok((
                    ChannelSource::Ge {
                        params,
                        rtt_us: self.channel.rtt_us,
                        slot_us: self.channel.slot_us,
                    },
                    label,
                ))
            }
            "trace" => {
                let rel = self.channel.trace.as_ref().expect("validated");
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    config_dir.join(rel)
                };
                let profile = ChannelProfile::load(&path)?;
                let label = self.run.label.clone().unwrap_or_else(|| {
                    if profile.label.is_empty() {
                        "trace".to_string()
                    } else {
                        profile.label.clone()
                    }
                });
                Ok((ChannelSource::Trace(Arc::new(profile)), label))
            }
            _ => unreachable!("validated"),
        }
    }

    /// Expand into one sweep entry per requested scheme.
    pub fn sweep_entries(&self, config_dir: &Path) -> Result<Vec<SweepEntry>> {
        let (source, label) = self.channel_source(config_dir)?;
        let params = self.scheme_params();
        self.schemes
            .run
            .iter()
            .map(|name| {
                let kind = parse_scheme_name(name)?;
                let mut sim = SimConfig::new(kind, source.clone(), self.run.seed);
                sim.n_packets = self.run.n_packets;
                sim.packet_bytes = self.run.packet_bytes;
                sim.scheme_params = params.clone();
                sim.timeout_slots = self.channel.timeout_slots;
                sim.rtt_slots = self.channel.rtt_slots;
                sim.feedback_loss = self.channel.feedback_loss;
                sim.experiences_per_datapoint = self.run.experiences_per_datapoint;
                sim.max_slots = self.run.max_slots;
                Ok(SweepEntry {
                    mode: label.clone(),
                    config: sim,
                    datapoints: self.run.datapoints,
                })
            })
            .collect()
    }

    pub fn slot_us(&self) -> u32 {
        self.channel.slot_us
    }
}
