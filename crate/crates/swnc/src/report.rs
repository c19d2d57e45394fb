//! Report rows, CSV/JSON emission and the run manifest.
//!
//! Everything written here is deterministic for a given (config, seed,
//! inputs) tuple: no timestamps, stable field order, stable float
//! formatting.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sim::{DatapointRecord, ExperienceRecord};
use crate::Result;

pub const METRIC_THROUGHPUT: &str = "throughput";
pub const METRIC_MEAN_DELAY: &str = "mean_in_order_delay_slots";
pub const METRIC_MAX_DELAY: &str = "max_in_order_delay_slots";

/// One summary row: statistics of one metric for one (mode, algorithm)
/// pair over its datapoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: String,
    pub algorithm: String,
    pub metric: String,
    pub mean: f64,
    pub stdev: f64,
    pub p99: f64,
}

fn fmt_value(v: f64) -> String {
    // Shortest representation that round-trips; keeps CSVs diffable.
    let mut s = format!("{v}");
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Render summary rows as CSV with the fixed column set
/// `mode,algorithm,metric,mean,stdev,p99`.
pub fn summary_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("mode,algorithm,metric,mean,stdev,p99\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.mode,
            r.algorithm,
            r.metric,
            fmt_value(r.mean),
            fmt_value(r.stdev),
            fmt_value(r.p99)
        );
    }
    out
}

/// Parse a summary CSV produced by [`summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "mode,algorithm,metric,mean,stdev,p99" {
                return Err(crate::Error::Config(format!(
                    "unexpected summary header: {line:?}"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(crate::Error::Config(format!(
                "summary line {} has {} fields",
                i + 1,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| crate::Error::Config(format!("bad number {s:?}: {e}")))
        };
        rows.push(ReportRow {
            mode: fields[0].into(),
            algorithm: fields[1].into(),
            metric: fields[2].into(),
            mean: num(fields[3])?,
            stdev: num(fields[4])?,
            p99: num(fields[5])?,
        });
    }
    Ok(rows)
}

/// Per-experience records as JSON lines.
pub fn experiences_jsonl(records: &[ExperienceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("experience record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_experiences_jsonl(text: &str) -> Result<Vec<ExperienceRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| crate::Error::Config(format!("bad experience record: {e}")))
        })
        .collect()
}

/// Checksum of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Every emitted report references the manifest that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Verbatim configuration text the run was started with.
    pub config: String,
    pub base_seed: u64,
    pub seeds_used: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Human-readable run table: one block per metric with delays shown in
/// both slots and milliseconds, plus LLC/URLLC tags.
pub fn render_table(rows: &[ReportRow], datapoints: &[DatapointRecord], slot_us: u32) -> String {
    use crate::analysis::classify_llc_urllc;
    let tags = classify_llc_urllc(rows, slot_us);
    let slots_to_ms = |slots: f64| slots * slot_us as f64 / 1000.0;
    let mut out = String::new();
    let _ = writeln!(out, "slot duration: {slot_us} us; datapoints: {}", datapoints.len());
    let _ = writeln!(
        out,
        "{:<10} {:<10} {:<28} {:>12} {:>12} {:>12} {:>10}",
        "mode", "algorithm", "metric", "mean", "stdev", "p99", "mean_ms"
    );
    for r in rows {
        let ms = if r.metric == METRIC_THROUGHPUT {
            "-".to_string()
        } else {
            format!("{:.3}", slots_to_ms(r.mean))
        };
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:<28} {:>12.4} {:>12.4} {:>12.4} {:>10}",
            r.mode, r.algorithm, r.metric, r.mean, r.stdev, r.p99, ms
        );
    }
    let _ = writeln!(out, "\nservice classes (budget {} slots):", crate::analysis::latency_budget_slots(slot_us));
    for t in tags {
        let class = match (t.llc, t.urllc) {
            (true, true) => "LLC+URLLC",
            (true, false) => "LLC",
            (false, true) => "URLLC",
            (false, false) => "-",
        };
        let _ = writeln!(out, "{:<10} {:<10} {}", t.mode, t.algorithm, class);
    }
    out
}
