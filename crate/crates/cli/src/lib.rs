//! Command-line front end: reads a TOML config, runs one experiment and
//! writes CSV (or JSON) tables, PGM heatmaps, `summary.json` and
//! `metadata.json` into the output directory.
//!
//! Only `metadata.json` carries wall-clock data; every other file is a pure
//! function of the config and seed, whatever the thread count.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use config::{Format, Kind, RunConfig};
use error::{CliError, CliResult};

/// Environment variable capping the worker threads; 0 or unset means one
/// per core.
pub const THREADS_ENV: &str = "DOWSIM_THREADS";
pub const DEFAULT_OUT: &str = "dowsim-out";

#[derive(Debug, Parser)]
#[command(
    name = "dowsim",
    version,
    about = "Wavefield evolution, collapse and deformation experiments"
)]
pub struct Cli {
    /// TOML file with one experiment section; defaults apply without it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the config. Shot `i` uses `seed + i`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Unitary evolution of a packet; writes the width history.
    Evolve,
    /// Evolution interleaved with interaction events.
    Trajectory,
    /// Double-slit ensemble with optional which-path detectors.
    DoubleSlit,
    /// Repeated Born sampling against |psi|^2.
    BornCheck,
    /// Minimum localising energy for a list of widths.
    LocalizationTable,
    /// Rank-based scores and posteriors.
    Compare,
    /// Joint collapse of a correlated pair.
    Entangle,
}

impl Command {
    pub fn kind(self) -> Kind {
        match self {
            Command::Evolve => Kind::Evolve,
            Command::Trajectory => Kind::Trajectory,
            Command::DoubleSlit => Kind::DoubleSlit,
            Command::BornCheck => Kind::BornCheck,
            Command::LocalizationTable => Kind::LocalizationTable,
            Command::Compare => Kind::Compare,
            Command::Entangle => Kind::Entangle,
        }
    }
}

/// Thread cap from the environment.
pub fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("{THREADS_ENV} must be a nonnegative integer, got '{v}'"))),
    }
}

/// What a finished run wrote.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
    pub summary: serde_json::Map<String, serde_json::Value>,
}

pub fn run(cli: &Cli) -> CliResult<RunReport> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let kind = cli.command.kind();
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.check_section(kind, cli.config.is_some())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let format = cli.format.or(cfg.format).unwrap_or_default();
    let out_dir = match (&cli.out, &cfg.out) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => PathBuf::from(DEFAULT_OUT),
    };
    let threads = threads_from_env()?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let (outputs, used_threads) =
        pool.install(|| commands::run(kind, &cfg, seed).map(|o| (o, rayon::current_num_threads())))?;

    let mut written = outputs.write(&out_dir, format)?;
    let meta = serde_json::json!({
        "command": kind.command(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": used_threads,
        "started_unix_s": started_unix,
        "elapsed_s": started.elapsed().as_secs_f64(),
    });
    let meta_path = out_dir.join("metadata.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    written.push(meta_path);
    Ok(RunReport {
        out_dir,
        written,
        summary: outputs.summary,
    })
}
