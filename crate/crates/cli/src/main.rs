//! `vpid`: simulate torsion tests, identify hardening parameters, estimate
//! their noise sensitivity and compare parameter sets.
//!
//! Settings come from an optional TOML file, overridden by `VPID_*`
//! environment variables, overridden in turn by flags.

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "vpid", version, about = "Viscoplastic parameter identification and noise sensitivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true, env = "VPID_CONFIG")]
    config: Option<PathBuf>,

    /// Master seed for noise generation.
    #[arg(long, global = true, env = "VPID_SEED")]
    seed: Option<u64>,

    /// Monte Carlo instances.
    #[arg(long, global = true, env = "VPID_INSTANCES")]
    instances: Option<usize>,

    /// Weighting matrix; `all` runs every scheme (montecarlo only).
    #[arg(
        long,
        global = true,
        env = "VPID_WEIGHTING",
        value_parser = ["identity", "diag_inv_cov", "full_inv_cov", "all"]
    )]
    weighting: Option<String>,

    /// Restrict to one benchmark history.
    #[arg(long, global = true, env = "VPID_HISTORY")]
    history: Option<u8>,

    /// Output directory.
    #[arg(long, global = true, env = "VPID_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the model response at the truth parameters as `strain,stress` CSV.
    Simulate {
        /// Add one sampled noise realization.
        #[arg(long)]
        with_noise: bool,
    },
    /// Fit the hardening parameters to a `strain,stress` CSV.
    Identify {
        #[arg(long, env = "VPID_DATA")]
        data: PathBuf,
    },
    /// Monte Carlo cloud of re-identified parameters under noise.
    Montecarlo {
        /// Base data; synthetic data at the truth parameters if omitted.
        #[arg(long, env = "VPID_DATA")]
        data: Option<PathBuf>,
    },
    /// Distances between two `parameter,value` files.
    Distance {
        #[arg(long)]
        p1: PathBuf,
        #[arg(long)]
        p2: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        instances: cli.instances,
        weighting: cli.weighting,
        history: cli.history,
        output_dir: cli.out,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Simulate { with_noise } => commands::simulate(&cfg, with_noise),
        Command::Identify { data } => {
            if cfg.weighting.is_none() && overrides.weighting.as_deref() == Some("all") {
                return Err(CliError::Config("weighting: identify takes a single scheme".into()));
            }
            commands::identify(&cfg, &data)
        }
        Command::Montecarlo { data } => commands::montecarlo(&cfg, data.as_deref()),
        Command::Distance { p1, p2 } => commands::distance(&cfg, &p1, &p2),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
