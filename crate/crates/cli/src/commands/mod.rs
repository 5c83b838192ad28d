//! One module per subcommand; each exposes its clap `Args` struct and a
//! `run` function returning the process exit code.

pub mod attack;
pub mod compare;
pub mod dataset;
pub mod sweep;
pub mod thresholds;
