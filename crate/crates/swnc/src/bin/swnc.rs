//! `swnc`: sliding-window network coding simulation lab.
//!
//! Subcommands: `simulate` (run a config, emit reports), `gen-trace`
//! (synthesize a Gilbert-Elliott channel trace), `fit` (fit GE
//! parameters to a trace), `bounds` (in-order delay upper-bound curves)
//! and `report` (re-render a finished run). Every command is
//! deterministic in its flags, seed and inputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swnc::analysis::{ge_delay_bound_curve, DelayBound};
use swnc::channel::{fit_ge, ge_generate, ge_stationary, ChannelProfile, GeParams, DEFAULT_SLOT_US};
use swnc::config::RunConfig;
use swnc::report::{
    digest_file, experiences_jsonl, parse_experiences_jsonl, parse_summary_csv, render_table,
    sha256_hex, summary_csv, RunManifest,
};
use swnc::sim::{sweep, DatapointRecord};

#[derive(Parser)]
#[command(name = "swnc", version, about = "Sliding-window network coding simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the schemes described by a config file and write reports.
    Simulate(SimulateArgs),
    /// Synthesize a Gilbert-Elliott channel trace.
    GenTrace(GenTraceArgs),
    /// Fit Gilbert-Elliott parameters to a recorded trace.
    Fit(FitArgs),
    /// Emit in-order delay upper-bound curves over an erasure-rate grid.
    Bounds(BoundsArgs),
    /// Re-render the summary table of a finished run.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(long, default_value_t = 0.17)]
    s: f64,
    #[arg(long, default_value_t = 0.019)]
    q: f64,
    #[arg(long, default_value_t = 0.0)]
    eps_good: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_bad: f64,
    #[arg(long, default_value_t = 100_000)]
    slots: usize,
    #[arg(long, default_value_t = 7200)]
    rtt_us: u32,
    #[arg(long, default_value_t = DEFAULT_SLOT_US)]
    slot_us: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "ge")]
    label: String,
    /// Output trace path.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Recorded trace to fit.
    trace: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 0.17)]
    s: f64,
    #[arg(long, default_value_t = 16)]
    rtt: u32,
    /// Confidence factors, one curve each.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    th: f64,
    #[arg(long, default_value_t = 0.0)]
    dof_rate: f64,
    /// Erasure-rate grid upper end (inclusive), stepped by 0.01.
    #[arg(long, default_value_t = 0.4)]
    eps_max: f64,
    /// Output directory for `bounds_alpha*.csv`.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory produced by `simulate`.
    run_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::GenTrace(args) => cmd_gen_trace(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swnc: error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> swnc::Result<()> {
    let config_text = std::fs::read_to_string(&args.config)?;
    let config = RunConfig::from_toml(&config_text)?;
    let config_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    // Validate all inputs (including the trace) before producing output.
    let entries = config.sweep_entries(&config_dir)?;
    let mut inputs = vec![swnc::report::InputDigest {
        path: args.config.display().to_string(),
        sha256: sha256_hex(config_text.as_bytes()),
    }];
    if config.channel.kind == "trace" {
        let rel = config.channel.trace.as_ref().expect("validated");
        let path = if rel.is_absolute() {
            rel.clone()
        } else {
            config_dir.join(rel)
        };
        inputs.push(digest_file(&path)?);
    }

    let output = sweep(&entries);
    for (cell, err) in &output.errors {
        eprintln!("swnc: warning: cell {cell} failed: {err}");
    }
    let incomplete = output.experiences.iter().filter(|e| !e.complete).count();
    if incomplete > 0 {
        eprintln!(
            "swnc: warning: {incomplete} experience(s) ran out of channel and were excluded from datapoints"
        );
    }
    if output.rows.is_empty() {
        return Err(swnc::Error::Config(
            "every sweep cell failed; no report to write".into(),
        ));
    }

    // All computation succeeded: now touch the filesystem.
    std::fs::create_dir_all(&args.out)?;
    let summary_path = args.out.join("summary.csv");
    let experiences_path = args.out.join("experiences.jsonl");
    let datapoints_path = args.out.join("datapoints.csv");
    let manifest_path = args.out.join("manifest.json");

    std::fs::write(&summary_path, summary_csv(&output.rows))?;
    std::fs::write(&experiences_path, experiences_jsonl(&output.experiences))?;
    std::fs::write(&datapoints_path, datapoints_csv(&output.datapoints))?;

    let n_dp_experiences = config.run.experiences_per_datapoint as u64 * config.run.datapoints as u64;
    let manifest = RunManifest {
        tool: "swnc".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config_text,
        base_seed: config.run.seed,
        seeds_used: (0..n_dp_experiences)
            .map(|i| config.run.seed.wrapping_add(i))
            .collect(),
        inputs,
        // File names, not full paths: outputs always sit beside the
        // manifest, and re-runs into a different directory must still be
        // byte-identical.
        outputs: vec![
            "summary.csv".into(),
            "experiences.jsonl".into(),
            "datapoints.csv".into(),
        ],
    };
    std::fs::write(&manifest_path, manifest.to_json())?;

    print!(
        "{}",
        render_table(&output.rows, &output.datapoints, config.slot_us())
    );
    println!("reports written to {}", args.out.display());
    Ok(())
}

fn datapoints_csv(datapoints: &[DatapointRecord]) -> String {
    let mut out = String::from(
        "mode,algorithm,datapoint,throughput,mean_delay_slots,max_delay_slots\n",
    );
    for d in datapoints {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.mode, d.algorithm, d.datapoint, d.throughput, d.mean_delay_slots, d.max_delay_slots
        ));
    }
    out
}

fn cmd_gen_trace(args: &GenTraceArgs) -> swnc::Result<()> {
    let params = GeParams::new(args.s, args.q, args.eps_good, args.eps_bad)?;
    let mut profile = ge_generate(&params, args.slots, args.rtt_us, args.slot_us, args.seed)?;
    profile.label = args.label.clone();
    profile.save(&args.out)?;
    println!("wrote {} slots to {}", profile.len(), args.out.display());
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> swnc::Result<()> {
    let profile = ChannelProfile::load(&args.trace)?;
    let fitted = fit_ge(&profile)?;
    let (pi_g, pi_b, eps_mean) = ge_stationary(&fitted)?;
    let out = serde_json::json!({
        "s": fitted.s,
        "q": fitted.q,
        "eps_good": fitted.eps_good,
        "eps_bad": fitted.eps_bad,
        "pi_g": pi_g,
        "pi_b": pi_b,
        "eps_mean": eps_mean,
        "mean_burst": fitted.mean_burst(),
        "slots": profile.len(),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> swnc::Result<()> {
    if args.alpha.is_empty() {
        return Err(swnc::Error::Config("at least one alpha is required".into()));
    }
    // Validate the domain before writing anything.
    swnc::analysis::ge_scaling(args.s)?;
    let grid: Vec<f64> = (0..=(args.eps_max * 100.0).round() as usize)
        .map(|i| i as f64 / 100.0)
        .collect();
    let mut files = Vec::new();
    for &alpha in &args.alpha {
        let curve = ge_delay_bound_curve(args.s, args.rtt, alpha, args.th, args.dof_rate, &grid)?;
        let mut text = String::from("x,value\n");
        for (eps, bound) in curve {
            match bound {
                DelayBound::Slots(v) => text.push_str(&format!("{eps},{v}\n")),
                DelayBound::Infeasible => text.push_str(&format!("{eps},inf\n")),
            }
        }
        files.push((format!("bounds_alpha{alpha}.csv"), text));
    }
    std::fs::create_dir_all(&args.out)?;
    for (name, text) in files {
        let path = args.out.join(&name);
        std::fs::write(&path, text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> swnc::Result<()> {
    let summary = std::fs::read_to_string(args.run_dir.join("summary.csv"))?;
    let rows = parse_summary_csv(&summary)?;
    let experiences = parse_experiences_jsonl(&std::fs::read_to_string(
        args.run_dir.join("experiences.jsonl"),
    )?)?;
    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(
        args.run_dir.join("manifest.json"),
    )?)
    .map_err(|e| swnc::Error::Config(format!("bad manifest: {e}")))?;
    let config = RunConfig::from_toml(&manifest.config)?;
    // Rebuild datapoint rows from the experience trail.
    let mut datapoints: Vec<DatapointRecord> = Vec::new();
    for exp in &experiences {
        if !exp.complete {
            continue;
        }
        let key = (exp.mode.clone(), exp.algorithm.clone(), exp.datapoint);
        if !datapoints
            .iter()
            .any(|d| (d.mode.clone(), d.algorithm.clone(), d.datapoint) == key)
        {
            let members: Vec<_> = experiences
                .iter()
                .filter(|e| {
                    e.complete
                        && e.mode == exp.mode
                        && e.algorithm == exp.algorithm
                        && e.datapoint == exp.datapoint
                })
                .collect();
            let n = members.len() as f64;
            datapoints.push(DatapointRecord {
                mode: exp.mode.clone(),
                algorithm: exp.algorithm.clone(),
                datapoint: exp.datapoint,
                throughput: members.iter().map(|e| e.throughput).sum::<f64>() / n,
                mean_delay_slots: members.iter().map(|e| e.mean_delay_slots).sum::<f64>() / n,
                max_delay_slots: members.iter().map(|e| e.max_delay_slots).sum::<f64>() / n,
            });
        }
    }
    print!("{}", render_table(&rows, &datapoints, config.slot_us()));
    Ok(())
}
