//! `attack`: one masking-constrained attack on a WAV clip, emitting the
//! adversarial WAV plus a single-row metrics CSV.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};

use undertone::{
    generate_thresholds, read_wav, run_attack, stft, threshold_violation_count, write_wav,
    AttackConfig, PerturbationMode, Result, DEFAULT_VIOLATION_FACTOR,
};

use crate::common;

/// How each iteration's candidate perturbation is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Scale only threshold-violating spectrum bins down onto their ceilings.
    Equalize,
    /// Scale every nonzero spectrum bin onto its ceiling.
    EqualizeAll,
    /// Clamp the candidate to `[-beta, beta]` in the time domain.
    HardClip,
    /// No constraint; the candidate passes through.
    Plain,
}

impl ModeArg {
    fn to_mode(self, beta: f64) -> PerturbationMode {
        match self {
            ModeArg::Equalize => PerturbationMode::EqualizeViolating,
            ModeArg::EqualizeAll => PerturbationMode::EqualizeAll,
            ModeArg::HardClip => PerturbationMode::HardClip { beta },
            ModeArg::Plain => PerturbationMode::PlainScale,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModeArg::Equalize => "equalize",
            ModeArg::EqualizeAll => "equalize-all",
            ModeArg::HardClip => "hard-clip",
            ModeArg::Plain => "plain",
        }
    }
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Input WAV clip (16-bit PCM mono).
    #[arg(long = "in", value_name = "WAV")]
    pub input: PathBuf,

    /// Target class the attack steers toward.
    #[arg(long)]
    pub target: usize,

    /// Griffin-Lim iterations per candidate reconstruction.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub k: usize,

    /// Step scale in (0, 1] applied to each constrained candidate.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,

    /// Constraint applied to each iteration's candidate perturbation.
    #[arg(long, value_enum, default_value_t = ModeArg::Equalize)]
    pub mode: ModeArg,

    /// Clamp bound for `--mode hard-clip` (ignored otherwise).
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,

    /// Iteration budget before giving up.
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,

    /// Where to write the adversarial WAV.
    #[arg(long, value_name = "WAV")]
    pub out: PathBuf,

    /// Where to write the metrics CSV (header plus one row).
    #[arg(long, value_name = "CSV")]
    pub metrics: PathBuf,

    /// Model checkpoint; when omitted the default model is trained from
    /// `--seed`.
    #[arg(long, value_name = "CKPT")]
    pub model: Option<PathBuf>,

    /// Master seed for the default model (dataset `seed`, training
    /// `seed + 1`).
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Analysis frame length in samples (power of two).
    #[arg(long, default_value_t = 256)]
    pub frame_len: usize,

    /// Analysis hop in samples.
    #[arg(long, default_value_t = 64)]
    pub hop: usize,
}

pub fn run(args: &AttackArgs) -> Result<u8> {
    let input = read_wav(&args.input)?;
    let model = common::load_or_train(args.model.as_deref(), args.seed)?;
    let stft_config = common::stft_config(args.frame_len, args.hop)?;
    let config = AttackConfig {
        epsilon: args.epsilon,
        griffin_lim_iters: args.k,
        max_iters: args.max_iters,
        mode: args.mode.to_mode(args.beta),
        stft: stft_config.clone(),
    };

    let started = Instant::now();
    let outcome = run_attack(&model, &input, args.target, &config)?;
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    write_wav(&args.out, &outcome.adversarial)?;

    let spec = stft(&input, &stft_config)?;
    let thresholds = generate_thresholds(&spec.magnitude(), input.sample_rate(), &stft_config)?;
    let violations = threshold_violation_count(
        &input,
        &outcome.adversarial,
        &thresholds,
        &stft_config,
        DEFAULT_VIOLATION_FACTOR,
    )?;

    let mut csv = String::from(
        "input,target,mode,k,epsilon,success,iterations,snr_db,final_loss,violations,wall_time_ms\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{:.3}",
        args.input.display(),
        args.target,
        args.mode.name(),
        args.k,
        args.epsilon,
        outcome.success,
        outcome.iterations_used,
        outcome.snr_db,
        outcome.final_loss,
        violations,
        wall_time_ms,
    );
    common::write_file(&args.metrics, csv)?;

    Ok(if outcome.success { 0 } else { 2 })
}
