//! Configuration files, binary snapshots and the `acns` subcommands.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod snapshot;

use commands::{cmd_analyze, cmd_run, cmd_sweep, exit_code, GlobalOptions, EXIT_ERROR, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "acns", version, about = "Artificial-compressibility Navier-Stokes laboratory")]
pub struct Cli {
    /// Validate the configuration and print the plan without writing files.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for random initial data, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one artificial-compressibility simulation.
    Run { config: PathBuf },
    /// Run an epsilon sweep with the incompressible reference.
    Sweep { config: PathBuf },
    /// Recompute the diagnostics of a run directory from its snapshots.
    Analyze {
        dir: PathBuf,
        /// Eigenbasis rank for fractional norms (default: the run's).
        #[arg(long)]
        rank: Option<usize>,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let opts = GlobalOptions {
        dry_run: cli.dry_run,
        workers: cli.workers,
        seed: cli.seed,
    };
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config, &opts),
        Command::Sweep { config } => cmd_sweep(config, &opts),
        Command::Analyze { dir, rank } => cmd_analyze(dir, *rank, &opts),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("acns: error: {e}");
            exit_code(&e)
        }
    }
}
