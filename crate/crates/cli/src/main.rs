//! `ramplaw` — batch front door for the stationary-law solvers.
//!
//! Subcommands: `pdf` (tabulate a law), `simulate` (Monte Carlo run),
//! `size` (inverter capacity percentiles), `compare` (cross-validate
//! methods), `sweep` (percentile curves over slopes). Exit status is zero
//! iff every requested computation succeeded; failures print a one-line
//! JSON error object to stderr.

mod commands;
mod methods;
mod output;
mod params;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ramplaw",
    version,
    about = "Stationary battery-power laws under negative ramp-rate control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate density, CDF and survival of a stationary law.
    Pdf(commands::PdfArgs),
    /// Run the Monte Carlo dispatch and export the empirical law.
    Simulate(commands::SimulateArgs),
    /// Derive inverter sizing percentiles in MW.
    Size(commands::SizeArgs),
    /// Cross-validate two or more solution methods.
    Compare(commands::CompareArgs),
    /// Percentile curves over a list of normalized slopes.
    Sweep(commands::SweepArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Pdf(args) => commands::cmd_pdf(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Size(args) => commands::cmd_size(args),
        Command::Compare(args) => commands::cmd_compare(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            ExitCode::FAILURE
        }
    }
}
