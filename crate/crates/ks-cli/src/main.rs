//! `ks-spikes`: run equilibria, thresholds, slow dynamics and PDE experiments
//! from `key = value` configs.

mod commands;
mod config;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{ConfigError, RawConfig, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ks-spikes", version, about = "Spike patterns in the 1D Keller-Segel model with logistic growth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override one config key; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Symmetric or quasi-equilibrium amplitudes, composite profile, global balance.
    Equilibrium,
    /// Thresholds, small-eigenvalue sweep, optional Hopf curve.
    Stability,
    /// Single-spike Hopf threshold and its curve in d1.
    Hopf,
    /// Slow spike dynamics.
    Dae,
    /// Finite-volume simulation with snapshots.
    Pde,
    /// DAE and PDE trajectories with their discrepancy.
    Compare,
    /// PDE run under a linear d1 ramp, with a spike-count event log.
    Ramp,
    /// List the config keys with their defaults.
    Keys,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
        raw.apply_text(&text, &path.display().to_string())?;
    }
    for o in &cli.overrides {
        raw.apply_assignment(o)?;
    }
    Ok(raw.resolve()?)
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Keys = cli.command {
        for (k, v, help) in config::KEYS {
            println!("{k:<16} {v:<12} {help}");
        }
        return Ok(());
    }
    let cfg = load(cli)?;
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("starting the worker pool")?;
    }
    let out = commands::Output::new(cli.out.clone(), &cfg)?;
    let result = match cli.command {
        Command::Equilibrium => commands::equilibrium(&cfg, &out),
        Command::Stability => commands::stability(&cfg, &out),
        Command::Hopf => commands::hopf(&cfg, &out),
        Command::Dae => commands::dae(&cfg, &out),
        Command::Pde => commands::pde(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out),
        Command::Ramp => commands::ramp(&cfg, &out),
        Command::Keys => unreachable!(),
    };
    if let Err(e) = &result {
        if let Some(err) = e.downcast_ref::<ks_spikes::Error>() {
            out.json("error.json", serde_json::json!({ "error": err.kind(), "message": err.to_string() }))?;
        }
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else if e.is::<ks_spikes::Error>() {
                ExitCode::from(3)
            } else if e.is::<commands::Unstable>() {
                ExitCode::from(4)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
