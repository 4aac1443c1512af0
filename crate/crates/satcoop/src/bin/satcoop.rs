//! Command-line front end: validates a scenario file, runs the requested
//! experiment with a fixed master seed, and writes deterministic CSV
//! (optionally JSON-mirrored) tables plus a run manifest.

use clap::{Parser, Subcommand, ValueEnum};
use satcoop::experiments::{self, SimContext};
use satcoop::output::OutputTable;
use satcoop::scenario::{self, ConfigError};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "satcoop",
    version,
    about = "Cooperative multi-satellite uplink simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override (defaults to the scenario's master_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Per-step capacity of both cooperation modes for each cluster size.
    CapacityTimeseries,
    /// Time-averaged capacity as a function of cluster size and ε.
    CapacityVsL,
    /// Uncoded BPSK bit error rate as a function of cluster size.
    BerVsL,
    /// Mean capacity over the configured carrier/bandwidth grid.
    BandSweep,
    /// Single-satellite pass without handover.
    BaselineSingle,
    /// Visible-satellite census.
    Visibility,
    /// Data-sharing overhead per mode and cluster size.
    Overhead,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CapacityTimeseries => "capacity-timeseries",
            Command::CapacityVsL => "capacity-vs-l",
            Command::BerVsL => "ber-vs-l",
            Command::BandSweep => "band-sweep",
            Command::BaselineSingle => "baseline-single",
            Command::Visibility => "visibility",
            Command::Overhead => "overhead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    #[value(name = "csv")]
    Csv,
    #[value(name = "csv+json")]
    CsvJson,
}

/// Exit 2 for configuration problems, 3 for runtime failures.
enum AppError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<experiments::ExperimentError> for AppError {
    fn from(e: experiments::ExperimentError) -> Self {
        match e {
            experiments::ExperimentError::InvalidScenario(m) => AppError::Config(m),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

impl From<satcoop::output::OutputError> for AppError {
    fn from(e: satcoop::output::OutputError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            3
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let started = Instant::now();
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| AppError::Config("--config <path> is required".into()))?;
    let (mut cfg, _) = scenario::validate_config(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    // Hash the effective config (seed override applied).
    let canonical = scenario::canonical_toml(&cfg);
    let config_sha256 = scenario::config_sha256(&canonical);
    let seed = cfg.master_seed;

    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| AppError::Runtime(e.to_string()))?;
    }

    std::fs::create_dir_all(&cli.out).map_err(|e| {
        AppError::Runtime(format!("cannot create output dir {}: {e}", cli.out.display()))
    })?;

    let l_values = cfg.l_values.clone();
    let command = cli.command;
    let needs_context = !matches!(command, Command::Overhead);
    let (table, metrics) = if needs_context {
        let ctx = SimContext::new(cfg)?;
        run_experiment(command, &ctx)?
    } else {
        (experiments::overhead_table(&l_values), serde_json::json!({}))
    };

    let base = cli.out.join(command.name());
    let csv_path = base.with_extension("csv");
    table.write_csv(&csv_path)?;
    let mut files = vec![csv_path.display().to_string()];
    if cli.format == Format::CsvJson {
        let json_path = base.with_extension("json");
        table.write_json(&json_path)?;
        files.push(json_path.display().to_string());
    }

    let manifest = serde_json::json!({
        "subcommand": command.name(),
        "config_path": config_path.display().to_string(),
        "config_sha256": config_sha256,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": if cli.threads == 0 { rayon::current_num_threads() } else { cli.threads },
        "wall_time_s": started.elapsed().as_secs_f64(),
        "files": files,
        "metrics": metrics,
    });
    let manifest_path = manifest_path(&cli.out, command.name());
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", manifest_path.display())))?;
    Ok(())
}

fn manifest_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.manifest.json"))
}

fn run_experiment(
    command: Command,
    ctx: &SimContext,
) -> Result<(OutputTable, serde_json::Value), AppError> {
    match command {
        Command::CapacityTimeseries => {
            let ts = experiments::capacity_timeseries(ctx)?;
            let means: Vec<serde_json::Value> = ts
                .l_values
                .iter()
                .map(|&l| {
                    serde_json::json!({
                        "l": l,
                        "mean_full_bps": ts.mean_bps(l, experiments::Mode::FullCsi),
                        "mean_partial_bps": ts.mean_bps(l, experiments::Mode::PartialCsi),
                    })
                })
                .collect();
            Ok((ts.table(), serde_json::json!({ "mean_rates": means })))
        }
        Command::CapacityVsL => {
            let curve = experiments::capacity_vs_cluster_size(ctx)?;
            Ok((curve.table(), serde_json::json!({})))
        }
        Command::BerVsL => {
            let curve = experiments::ber_vs_cluster_size(ctx)?;
            Ok((curve.table(), serde_json::json!({})))
        }
        Command::BandSweep => {
            let sweep = experiments::band_sweep(ctx)?;
            Ok((sweep.table(), serde_json::json!({})))
        }
        Command::BaselineSingle => {
            let base = experiments::single_satellite_baseline(ctx)?;
            let metrics = serde_json::json!({
                "sat_id": base.sat_id.0,
                "visibility_duration_s": base.visibility_duration_s,
                "peak_window_s": base.peak_window_s,
                "pass_start_s": base.pass_start_s,
                "pass_end_s": base.pass_end_s,
            });
            Ok((base.table(), metrics))
        }
        Command::Visibility => {
            let vis = experiments::visibility(ctx)?;
            let metrics = serde_json::json!({
                "min_visible": vis.min_count(),
                "mean_visible": vis.mean_count(),
            });
            Ok((vis.table(), metrics))
        }
        Command::Overhead => unreachable!("handled without a context"),
    }
}
