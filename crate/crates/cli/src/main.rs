mod commands;
mod config;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Params, UsageError};

#[derive(Parser)]
#[command(name = "daeaic", version, about = "Accurate initial conditions and a windowed least-squares solver for linear DAEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index, degrees of freedom and condition matrix at one point
    Analyze(Run),
    /// Solve the initial value problem and dump the sampled solution
    Solve(Run),
    /// Parameter sweep of gaps or solver errors, with fitted slopes
    Converge(Run),
    /// Infinity norms of differentiation matrices against their bounds
    Diffcheck(Run),
}

#[derive(clap::Args)]
struct Run {
    #[command(flatten)]
    params: Params,
    /// JSON file with the same keys as the flags; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (run, f): (Run, fn(&Params) -> anyhow::Result<()>) = match cli.command {
        Command::Analyze(r) => (r, commands::analyze),
        Command::Solve(r) => (r, commands::solve),
        Command::Converge(r) => (r, sweep::converge),
        Command::Diffcheck(r) => (r, commands::diffcheck),
    };
    let result = Params::load(run.params, run.config.as_deref()).and_then(|p| f(&p));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<daeaic::DaeError>(), Some(daeaic::DaeError::Config(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
