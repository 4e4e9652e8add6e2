//! `gtf`: graph trend filtering from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 solver did not converge,
//! 3 a theory check failed.

mod commands;
mod error;
mod files;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{denoise, path, simulate, theory, transduce};

#[derive(Debug, Parser)]
#[command(name = "gtf", version, about = "Graph trend filtering: denoising, λ paths, simulations, transduction, theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one λ and write the fitted signal plus a metadata sidecar.
    Denoise(denoise::Args),
    /// Sweep a decreasing λ grid with warm starts.
    Path(path::Args),
    /// Generate a synthetic instance and an MSE-versus-noise sweep.
    Simulate(simulate::Args),
    /// Impute node labels from seed labels.
    Transduce(transduce::Args),
    /// Run numerical checks of the spectral and covering facts.
    Theory(theory::Args),
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    Unconverged,
    FailedCheck,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Denoise(a) => denoise::run(a),
        Command::Path(a) => path::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Transduce(a) => transduce::run(a),
        Command::Theory(a) => theory::run(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Unconverged) => {
            eprintln!("warning: solver did not converge; outputs were written from the last iterate");
            ExitCode::from(2)
        }
        Ok(Status::FailedCheck) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
