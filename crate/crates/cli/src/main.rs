mod cli;
mod commands;
mod config;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use error::{CliError, CliResult};

/// Caps the global worker pool at `BSPF_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("BSPF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Threads(format!("expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Threads(e.to_string()))
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Train(c) => commands::train(c),
        Command::Predict(c) => commands::predict(c),
        Command::Eval(c) => commands::eval(c),
        Command::Friedman(c) => commands::friedman(c),
        Command::Sweep(c) => commands::sweep(c),
        Command::Pdp(c) => commands::pdp(c),
        Command::Dimuse(c) => commands::dimuse(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
