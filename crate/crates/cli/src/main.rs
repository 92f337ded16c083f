use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use qvx_core::harness::{
    emit_plot_data, ingest_external_counts, parse_qubit_range, run_experiment_with, ExperimentConfig, ExperimentRecord,
    Mode, NoiseSpec, RunOptions, StatisticsBlock,
};
use qvx_core::zne::parse_scale_factors;
use qvx_core::QvError;

#[derive(Parser)]
#[command(
    name = "qvx",
    version,
    about = "Quantum volume experiments with zero-noise extrapolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write the results record.
    Run(RunArgs),
    /// Analyze externally measured counts.
    Ingest {
        counts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write CSV plot data for a results record.
    Plot {
        results: PathBuf,
        #[arg(long, default_value = "plots")]
        out_dir: PathBuf,
    },
    /// Print the achieved volume of a results record.
    Volume {
        results: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Qubit counts, e.g. `2..5` (inclusive) or `2,3,4`.
    #[arg(long)]
    m: Option<String>,
    /// Noise preset: lima, belem, quito or noiseless.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_c: Option<usize>,
    #[arg(long)]
    n_s: Option<u64>,
    /// Comma-separated odd scale factors, e.g. `1,3,5,7,9`.
    #[arg(long)]
    scale_factors: Option<String>,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    group_split: bool,
    /// Results file. An existing partial record with the same configuration is resumed.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ignore an existing results file instead of resuming it.
    #[arg(long)]
    fresh: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).map_err(|e| QvError::schema(path.display().to_string(), e.to_string()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &self.m {
            cfg.m_range = parse_qubit_range(m)?;
        }
        if let Some(n) = &self.noise {
            cfg.noise = NoiseSpec::Preset(n.clone());
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.n_c {
            cfg.n_c = n;
        }
        if let Some(n) = self.n_s {
            cfg.n_s = n;
        }
        if let Some(s) = &self.scale_factors {
            cfg.scale_factors = parse_scale_factors(s)?;
        }
        if let Some(n) = self.resamples {
            cfg.n_resamples = n;
        }
        cfg.group_split |= self.group_split;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn timing_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".timing.json");
    out.with_file_name(name)
}

fn print_block(m: usize, mode: &str, b: &StatisticsBlock) {
    println!(
        "m={m} {mode:<11} h_d={:.4} sigma={:.4} (analytic {:.4}) {}{}",
        b.h_d,
        b.sigma_bootstrap,
        b.sigma_analytic,
        if b.passed { "PASS" } else { "FAIL" },
        if b.conformant { "" } else { " [non-conformant]" },
    );
}

fn print_summary(record: &ExperimentRecord) -> Result<()> {
    for s in &record.sizes {
        if let Some(b) = &s.unmitigated {
            print_block(s.num_qubits, "unmitigated", b);
        }
        if let Some(b) = &s.mitigated {
            print_block(s.num_qubits, "mitigated", b);
        }
    }
    match &record.volume {
        Some(v) => {
            if let Some(r) = v.unmitigated {
                println!(
                    "volume (unmitigated): 2^{} (largest passing m: {})",
                    r.volume, r.max_passing
                );
            }
            if let Some(r) = v.mitigated {
                println!(
                    "volume (mitigated): 2^{} (largest passing m: {})",
                    r.volume, r.max_passing
                );
            }
        }
        None => println!("volume: not determined (qubit counts are not contiguous from 2)"),
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let config = args.config()?;
    let resume = match &args.out {
        Some(path) if path.exists() && !args.fresh => {
            let prev = ExperimentRecord::load(path).with_context(|| format!("loading {}", path.display()))?;
            info!("resuming from {}", path.display());
            Some(prev)
        }
        _ => None,
    };
    let started = unix_seconds();
    let clock = Instant::now();
    let record = run_experiment_with(
        &config,
        RunOptions {
            checkpoint: args.out.clone(),
            resume,
        },
    )?;
    let elapsed = clock.elapsed().as_secs_f64();
    match &args.out {
        Some(path) => {
            let timing = serde_json::json!({
                "started_unix": started,
                "finished_unix": unix_seconds(),
                "elapsed_seconds": elapsed,
            });
            std::fs::write(timing_path(path), serde_json::to_string_pretty(&timing)? + "\n")?;
            info!("wrote {} in {elapsed:.1}s", path.display());
            print_summary(&record)
        }
        None => {
            print!("{}", record.to_json()?);
            Ok(())
        }
    }
}

fn ingest(counts: &Path, out: Option<&Path>) -> Result<()> {
    let record = ingest_external_counts(counts)?;
    match out {
        Some(path) => {
            record.save(path)?;
            print_summary(&record)
        }
        None => {
            print!("{}", record.to_json()?);
            Ok(())
        }
    }
}

fn plot(results: &Path, out_dir: &Path) -> Result<()> {
    let record = ExperimentRecord::load(results)?;
    if !record.complete {
        warn!("{} is a partial record", results.display());
    }
    let files = emit_plot_data(&record, out_dir)?;
    for f in [&files.estimates, &files.constants, &files.convergence] {
        println!("{}", f.display());
    }
    Ok(())
}

fn volume(results: &Path, json: bool) -> Result<()> {
    let record = ExperimentRecord::load(results)?;
    let summary = record.summarize_volume()?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }
    for (mode, r) in [("unmitigated", summary.unmitigated), ("mitigated", summary.mitigated)] {
        if let Some(r) = r {
            let qv = if r.volume == 0 { 0 } else { 1u64 << r.volume };
            println!(
                "{mode}: m = {} (QV {qv}), largest passing m = {}",
                r.volume, r.max_passing
            );
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err
        .chain()
        .filter_map(|e| e.downcast_ref::<QvError>())
        .any(QvError::is_validation);
    if validation {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Ingest { counts, out } => ingest(&counts, out.as_deref()),
        Command::Plot { results, out_dir } => plot(&results, &out_dir),
        Command::Volume { results, json } => volume(&results, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
