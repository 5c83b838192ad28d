//! `thresholds`: dump a WAV's per-frame, per-bin masking ceilings as CSV
//! rows `frame,bin,freq_hz,threshold_db`.

use std::io::{self, Write as _};
use std::path::PathBuf;

use clap::Args;

use undertone::{generate_thresholds, read_wav, stft, write_thresholds_csv, Error, Result};

use crate::common;

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    /// Input WAV clip (16-bit PCM mono).
    #[arg(long = "in", value_name = "WAV")]
    pub input: PathBuf,

    /// Output CSV; written to stdout when omitted.
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,

    /// Analysis frame length in samples (power of two).
    #[arg(long, default_value_t = 256)]
    pub frame_len: usize,

    /// Analysis hop in samples.
    #[arg(long, default_value_t = 64)]
    pub hop: usize,
}

pub fn run(args: &ThresholdsArgs) -> Result<u8> {
    let input = read_wav(&args.input)?;
    let config = common::stft_config(args.frame_len, args.hop)?;
    let spec = stft(&input, &config)?;
    let thresholds = generate_thresholds(&spec.magnitude(), input.sample_rate(), &config)?;

    let mut csv = Vec::new();
    write_thresholds_csv(&thresholds, input.sample_rate(), &mut csv)
        .expect("in-memory write cannot fail");
    match &args.out {
        Some(path) => common::write_file(path, csv)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&csv).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    Ok(0)
}
