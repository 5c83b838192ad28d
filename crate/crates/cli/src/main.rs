//! Batch command-line front end for masking-constrained adversarial audio.
//!
//! Subcommands wire the library into reproducible experiments that emit
//! stable CSV: `attack` runs one attack end to end, `sweep` repeats it over
//! seeded (sample, target) pairs for several reconstruction depths,
//! `thresholds` dumps a WAV's masking ceilings, `compare` contrasts hard
//! clipping with spectral equalization on a reference tone, and `dataset`
//! materializes the synthetic keyword corpus the toy model trains on.
//!
//! Exit codes: 0 on success, 2 when an attack exhausts its iteration budget
//! without reaching the target class, 1 for usage or I/O errors. All
//! commands are deterministic under a fixed `--seed`; the only
//! non-deterministic output field is the wall-clock time in `attack`
//! metrics.

mod commands;
mod common;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "undertone",
    version,
    about = "Masking-constrained adversarial audio experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one masking-constrained attack on a WAV clip.
    Attack(commands::attack::AttackArgs),
    /// Sweep reconstruction depth over seeded attack pairs, emitting CSVs.
    Sweep(commands::sweep::SweepArgs),
    /// Dump per-frame, per-bin masking thresholds for a WAV as CSV.
    Thresholds(commands::thresholds::ThresholdsArgs),
    /// Contrast hard clipping with threshold equalization on a reference tone.
    Compare(commands::compare::CompareArgs),
    /// Generate the synthetic keyword dataset and, optionally, a checkpoint.
    Dataset(commands::dataset::DatasetArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version render like successes; everything else is a
            // usage error. Clap's own exit code (2) is reserved here for
            // non-convergence, so usage maps to 1.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Attack(args) => commands::attack::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::Thresholds(args) => commands::thresholds::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Dataset(args) => commands::dataset::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
