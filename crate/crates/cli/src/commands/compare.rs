//! `compare`: constrain the same candidate perturbation two ways — hard
//! time-domain clipping versus spectral equalization against masking
//! thresholds — and report the harmonic distortion and SNR of each.
//!
//! The candidate is the reference tone itself, so clipping flattens its
//! peaks (odd harmonics) while equalization only rescales spectrum bins and
//! stays tonally clean.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use undertone::{
    equalize, generate_thresholds, griffin_lim, hard_clip, harmonic_distortion, snr_db, stft,
    synth_tone, write_wav, AudioBuffer, EqualizeMode, Error, Result, DEFAULT_SAMPLE_RATE,
};

use crate::common;

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference tone frequency in Hz.
    #[arg(long, default_value_t = 500.0)]
    pub freq: f64,

    /// Reference tone length in seconds.
    #[arg(long, default_value_t = 0.2)]
    pub duration: f64,

    /// Reference tone amplitude in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,

    /// Hard-clip bound as a fraction of the tone amplitude.
    #[arg(long, default_value_t = 0.6)]
    pub clip_fraction: f64,

    /// Griffin-Lim iterations for the equalized reconstruction.
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    /// Where to write the hard-clipped perturbation WAV.
    #[arg(long, value_name = "WAV")]
    pub out_clipped: PathBuf,

    /// Where to write the equalized perturbation WAV.
    #[arg(long, value_name = "WAV")]
    pub out_equalized: PathBuf,

    /// Where to write the metrics CSV (one row per method).
    #[arg(long, value_name = "CSV")]
    pub csv: PathBuf,

    /// Analysis frame length in samples (power of two).
    #[arg(long, default_value_t = 256)]
    pub frame_len: usize,

    /// Analysis hop in samples.
    #[arg(long, default_value_t = 64)]
    pub hop: usize,
}

/// The tone with a constrained perturbation added, for SNR measurement.
fn with_perturbation(tone: &AudioBuffer, delta: &AudioBuffer) -> Result<AudioBuffer> {
    let samples = tone
        .samples()
        .iter()
        .zip(delta.samples())
        .map(|(x, d)| x + d)
        .collect();
    AudioBuffer::new(samples, tone.sample_rate())
}

pub fn run(args: &CompareArgs) -> Result<u8> {
    if args.amplitude <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            reason: "must be positive".into(),
        });
    }
    let tone = synth_tone(args.freq, args.duration, args.amplitude, DEFAULT_SAMPLE_RATE)?;

    let clipped = hard_clip(&tone, args.clip_fraction * args.amplitude)?;
    let hd_clipped = harmonic_distortion(&clipped, args.freq)?;
    let snr_clipped = snr_db(&tone, &with_perturbation(&tone, &clipped)?)?;

    let config = common::stft_config(args.frame_len, args.hop)?;
    let spec = stft(&tone, &config)?;
    let thresholds = generate_thresholds(&spec.magnitude(), tone.sample_rate(), &config)?;
    let projected = equalize(&spec, &thresholds, EqualizeMode::ViolatingOnly)?;
    let equalized = griffin_lim(&projected, args.k)?;
    let hd_equalized = harmonic_distortion(&equalized, args.freq)?;
    let snr_equalized = snr_db(&tone, &with_perturbation(&tone, &equalized)?)?;

    write_wav(&args.out_clipped, &clipped)?;
    write_wav(&args.out_equalized, &equalized)?;

    let mut csv = String::from("method,harmonic_distortion_db,snr_db\n");
    let _ = writeln!(csv, "hard_clip,{hd_clipped},{snr_clipped}");
    let _ = writeln!(csv, "equalize,{hd_equalized},{snr_equalized}");
    common::write_file(&args.csv, csv)?;

    Ok(0)
}
