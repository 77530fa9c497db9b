//! Command-line experiment runner for the `spdsim` detector simulator.
//!
//! Every command loads an [`ExperimentConfig`](config::ExperimentConfig),
//! runs with seeds derived from `master_seed`, and writes CSV/JSON outputs
//! plus a `manifest.json` into the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::ExperimentConfig;
use error::CliError;
use output::{Output, RunManifest};

pub const DEFAULT_OUT: &str = "spdsim-out";

#[derive(Debug, Parser)]
#[command(name = "spdsim", version, about = "Josephson-junction single microwave photon detector simulator")]
pub struct Cli {
    /// JSON experiment config; reference defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Dark and photon-assisted IV curves.
    Iv,
    /// PAT calibration and cavity response reconstruction.
    Pat,
    /// Switching rate vs bias for several cavity temperatures.
    SweepBias,
    /// Rate vs temperature table, mode crossover and rate fit.
    SweepTemp,
    /// Event record, waiting-time histogram and counting statistics.
    Distribution,
    /// Fit a measured rate-vs-temperature table.
    FitRate {
        /// Rate table `temp_K,rate_Hz,rate_err_Hz`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Every dataset family in one run.
    DemoPaper,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Iv => "iv",
            Command::Pat => "pat",
            Command::SweepBias => "sweep-bias",
            Command::SweepTemp => "sweep-temp",
            Command::Distribution => "distribution",
            Command::FitRate { .. } => "fit-rate",
            Command::DemoPaper => "demo-paper",
        }
    }
}

/// Effective config after applying command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = Some(o.clone());
    }
    if let Command::FitRate { input: Some(p) } = &cli.command {
        cfg.fit_rate.input = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command to completion; nothing is left in the output directory on failure.
pub fn execute(cfg: &ExperimentConfig, command: &Command) -> Result<(RunManifest, Value), CliError> {
    let root = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut out = Output::create(&root, &cfg.hash())?;
    out.json("config.json", &ExperimentConfig { output_dir: None, ..cfg.clone() })?;
    let summary = match command {
        Command::Iv => commands::iv(cfg, &mut out, "")?,
        Command::Pat => commands::pat(cfg, &mut out, "")?,
        Command::SweepBias => commands::sweep_bias_cmd(cfg, &mut out, "")?,
        Command::SweepTemp => commands::sweep_temp(cfg, &mut out, "")?,
        Command::Distribution => commands::distribution(cfg, &mut out, "")?,
        Command::FitRate { .. } => commands::fit_rate(cfg, &mut out, "")?,
        Command::DemoPaper => commands::demo_paper(cfg, &mut out)?,
    };
    let manifest = out.finish(command.name(), cfg.master_seed)?;
    Ok((manifest, summary))
}

pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = resolve_config(cli)?;
    log::info!("{}: config {} seed {}", cli.command.name(), cfg.hash(), cfg.master_seed);
    execute(&cfg, &cli.command).map(|(m, _)| m)
}
