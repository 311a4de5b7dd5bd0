//! `backlogsim` — seedable simulator of a transaction backlog with
//! strategy-dependent block packing, sweeps, miner games and trace-driven
//! validation. Exit codes: 0 success, 1 config/validation error, 2 I/O error.

mod commands;
mod config;
mod error;
mod output;
mod trace;

use std::path::PathBuf;
use std::process::ExitCode;

use backlogsim_core::game::GameMode;
use clap::{Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "backlogsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    TwoMiner,
    OneVsFour,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and write summary/blocks CSVs.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the arrival trace (replayable via `validate`).
        #[arg(long)]
        emit_trace: bool,
        /// Also write the full per-transaction record.
        #[arg(long)]
        emit_transactions: bool,
    },
    /// Run the capacity x strategy grid and write summary, quartile and ECDF CSVs.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build miner payoff matrices and equilibrium reports.
    Game {
        #[command(flatten)]
        common: CommonArgs,
        /// Two equal miners, or one deviant against a four-miner group.
        #[arg(long, value_enum, default_value = "two-miner")]
        mode: ModeArg,
        /// Analyze a payoff-matrix CSV instead of simulating.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Compare trace-driven and synthetic runs over the capacity sweep.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Arrival trace CSV (header: arrival_time_s,fee_satoshi,size_bytes).
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> Result<config::ExperimentSpec, CliError> {
        let mut spec = config::load_config(&self.config)?;
        if let Some(out) = &self.out {
            spec.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            spec.base.seed = seed;
        }
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            common,
            emit_trace,
            emit_transactions,
        } => {
            let spec = common.load()?;
            commands::cmd_simulate(&spec, emit_trace, emit_transactions)
        }
        Command::Sweep { common } => {
            let spec = common.load()?;
            commands::cmd_sweep(&spec)
        }
        Command::Game {
            common,
            mode,
            fixture,
        } => {
            let spec = common.load()?;
            let mode = match mode {
                ModeArg::TwoMiner => GameMode::TwoMiner,
                ModeArg::OneVsFour => GameMode::OneVsFour,
            };
            commands::cmd_game(&spec, mode, fixture.as_deref())
        }
        Command::Validate { common, trace } => {
            let spec = common.load()?;
            let arrivals = trace::load_trace(&trace)?;
            commands::cmd_validate(&spec, &arrivals)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
