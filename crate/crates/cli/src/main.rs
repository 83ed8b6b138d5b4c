//! `fwm`: batch front end for atomic scans, synthetic time tags, coincidence
//! analysis, polarization tomography and parameter sweeps.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::{RunConfig, Scenario};
use error::Failure;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "FWM_OUT_DIR";
const DEFAULT_OUT: &str = "fwm-out";

#[derive(Parser)]
#[command(name = "fwm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Doppler-weighted scattering profile over a velocity grid.
    Scan(Common),
    /// Synthesize signal/idler time tags through the detector model.
    Tags(Common),
    /// Coincidence histogram, g_si, heralding and linewidth from a tag file.
    Analyze(Common),
    /// Maximum-likelihood two-qubit tomography from counts.
    Tomo(Common),
    /// Synthesize and analyze every point of a parameter grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; omitted sections take reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Falls back to `out` in the config, then $FWM_OUT_DIR,
    /// then ./fwm-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn run(scenario: Scenario, args: Common) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cfg.scenario {
        if s != scenario {
            return Err(Failure::validation(format!(
                "config is for scenario `{}` but `{}` was requested",
                s.name(),
                scenario.name()
            )));
        }
    }
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ctx = Context {
        out,
        seed: args.seed.or(cfg.seed).unwrap_or(0),
    };
    fwm_core::parallel::with_workers(args.workers, || match scenario {
        Scenario::Scan => commands::scan(&cfg, &ctx),
        Scenario::Tags => commands::tags(&cfg, &ctx),
        Scenario::Analyze => commands::analyze(&cfg, &ctx),
        Scenario::Tomo => commands::tomo(&cfg, &ctx),
        Scenario::Sweep => commands::sweep(&cfg, &ctx),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Scan(a) => (Scenario::Scan, a),
        Command::Tags(a) => (Scenario::Tags, a),
        Command::Analyze(a) => (Scenario::Analyze, a),
        Command::Tomo(a) => (Scenario::Tomo, a),
        Command::Sweep(a) => (Scenario::Sweep, a),
    };
    match run(scenario, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fwm {}: {}", scenario.name(), f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
