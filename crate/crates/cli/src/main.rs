//! Command-line front end.
//!
//! The workflow is chosen by the `command` key of the configuration
//! document; the flags only locate the document and override the seed and
//! output directory. Exit codes: 0 success, 1 invalid configuration,
//! 2 solver failure, 3 regression-check failure.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::CmdError;
use config::{Command, RunConfig};
use output::OutDir;

#[derive(Parser, Debug)]
#[command(
    name = "matchq",
    about = "Solve and simulate admission control for double-ended matching queues",
    version
)]
struct Args {
    /// Path of the TOML configuration document.
    #[arg(long)]
    config: String,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the configuration.
    #[arg(long)]
    out: Option<String>,
    /// Suppress progress output (files are still written).
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

fn run(args: &Args) -> Result<(), CmdError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CmdError::Config(format!("cannot read config `{}`: {e}", args.config)))?;
    let cfg: RunConfig =
        toml::from_str(&text).map_err(|e| CmdError::Config(format!("config parse: {e}")))?;
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let out = OutDir::create(&out_dir)?;
    match cfg.command {
        Command::Solve => commands::run_solve(&cfg, &out, args.quiet),
        Command::SimulateDcp => commands::run_simulate_dcp(&cfg, &out, args.seed, args.quiet),
        Command::SimulateQueue => commands::run_simulate_queue(&cfg, &out, args.seed, args.quiet),
        Command::Convergence => commands::run_convergence(&cfg, &out, args.seed, args.quiet),
        Command::Check => commands::run_check(&out, args.quiet),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(1)
        }
        Err(CmdError::CheckFailed) => ExitCode::from(3),
    }
}
