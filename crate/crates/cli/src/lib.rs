//! Command-line workflows: simulate, reconstruct, evaluate and benchmark.
//!
//! Each command writes into a staging directory next to `--out` and renames
//! it into place only on success, together with a `manifest.json`.

pub mod commands;
pub mod error;
pub mod manifest;
mod staging;

use clap::{Parser, Subcommand};

pub use commands::{BenchmarkArgs, EvaluateArgs, Method, ReconstructArgs, SimulateArgs};
pub use error::{CliError, Result};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "srls",
    version,
    about = "Low-rank plus sparse dynamic MRI reconstruction with temporal smoothness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded phantom, coil maps, mask and k-t data.
    Simulate(SimulateArgs),
    /// Reconstruct a simulated acquisition.
    Reconstruct(ReconstructArgs),
    /// Score reconstructions against the truth and export figures.
    Evaluate(EvaluateArgs),
    /// Simulate, run all four methods and tabulate the metrics.
    Benchmark(BenchmarkArgs),
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command, &argv) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, command_line: &[String]) -> Result<RunManifest> {
    match command {
        Command::Simulate(a) => commands::simulate(a, command_line),
        Command::Reconstruct(a) => commands::reconstruct(a, command_line),
        Command::Evaluate(a) => commands::evaluate(a, command_line),
        Command::Benchmark(a) => commands::benchmark(a, command_line),
    }
}
