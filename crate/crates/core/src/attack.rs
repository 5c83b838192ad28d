//! Iterative gradient-sign attack with psychoacoustic projection.
//!
//! Each iteration takes a gradient-sign descent step toward the target
//! label, constrains the candidate perturbation (spectrally against masking
//! thresholds, by time-domain clipping, or not at all), reconstructs it with
//! Griffin-Lim where needed, and applies it with step scale ε. The loop runs
//! until the oracle emits the target label or the iteration budget is spent;
//! running out of budget is an ordinary outcome, not an error.

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::oracle::GradientOracle;
use crate::projection::{equalize, hard_clip, EqualizeMode};
use crate::psychoacoustic::{generate_thresholds, MaskingThresholds};
use crate::spectral::{griffin_lim, stft, StftConfig};

/// How each gradient-sign candidate is constrained before application.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationMode {
    /// Spectral projection: scale only threshold-violating bins down.
    EqualizeViolating,
    /// Spectral projection: scale every nonzero bin onto its threshold.
    EqualizeAll,
    /// Time-domain clamp of the candidate to `[-beta, beta]`.
    HardClip { beta: f64 },
    /// No constraint; the candidate passes through (pure ε scaling).
    PlainScale,
}

/// Parameters of one attack run.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    /// Step scale in `(0, 1]` applied to each constrained candidate.
    pub epsilon: f64,
    /// Griffin-Lim iterations used to reconstruct projected candidates.
    pub griffin_lim_iters: usize,
    /// Iteration budget; must be at least 1.
    pub max_iters: usize,
    pub mode: PerturbationMode,
    /// Analysis parameters for thresholds and candidate spectra.
    pub stft: StftConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            epsilon: 1.0,
            griffin_lim_iters: 1,
            max_iters: 1000,
            mode: PerturbationMode::EqualizeViolating,
            stft: StftConfig::default(),
        }
    }
}

impl AttackConfig {
    fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 || self.epsilon > 1.0 {
            return Err(Error::invalid_param("epsilon", "must lie in (0, 1]"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid_param("max_iters", "must be at least 1"));
        }
        if let PerturbationMode::HardClip { beta } = self.mode {
            if !beta.is_finite() || beta <= 0.0 {
                return Err(Error::invalid_param("beta", "must be finite and positive"));
            }
        }
        Ok(())
    }
}

/// Result of [`run_attack`]. `success` holds exactly when the oracle labels
/// `adversarial` as the requested target.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub adversarial: AudioBuffer,
    pub success: bool,
    /// Update steps actually performed (0 if the input already hit the target).
    pub iterations_used: usize,
    /// Target-class loss of the final adversarial buffer.
    pub final_loss: f64,
    /// Signal-to-perturbation ratio vs the original input; `+inf` when the
    /// perturbation is exactly zero.
    pub snr_db: f64,
    /// Target-class loss after each update step, in order.
    pub per_iteration_loss: Vec<f64>,
}

/// Descent direction for one gradient component: `-sign(g)` with the
/// all-important middle case `sign(0) = 0` (a plain `signum` maps `0.0` to
/// `1.0`). Non-finite gradients also map to 0 rather than poisoning the step.
fn descent_sign(g: f64) -> f64 {
    if g > 0.0 {
        -1.0
    } else if g < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// One gradient-sign step: the candidate perturbation `-sign(grad)`.
pub fn fgsm_step(
    oracle: &dyn GradientOracle,
    x_adv: &AudioBuffer,
    target: usize,
) -> Result<AudioBuffer> {
    let grad = oracle.grad(x_adv, target)?;
    let delta: Vec<f64> = grad.into_iter().map(descent_sign).collect();
    AudioBuffer::new(delta, x_adv.sample_rate())
}

/// Debug-build check of the spectral projection bound: every projected bin
/// magnitude must sit at or below its masking threshold.
fn debug_check_projection(projected: &crate::spectral::Spectrogram, m: &MaskingThresholds) {
    if cfg!(debug_assertions) {
        for (z, &ceiling) in projected.bins().iter().zip(m.levels().iter()) {
            debug_assert!(
                z.norm() <= ceiling + 1e-9,
                "projected bin {} exceeds threshold {}",
                z.norm(),
                ceiling
            );
        }
    }
}

/// Runs the iterative attack on `x` toward `target`.
///
/// Masking thresholds are derived once from the *original* input and reused
/// every iteration. Each step: candidate = `-sign(grad)` at the current
/// adversarial buffer; constrain per `config.mode`; apply with scale ε; clamp
/// samples to `[-1, 1]`. Deterministic: same inputs, same outcome.
pub fn run_attack(
    oracle: &dyn GradientOracle,
    x: &AudioBuffer,
    target: usize,
    config: &AttackConfig,
) -> Result<AttackOutcome> {
    config.validate()?;
    if target >= oracle.n_classes() {
        return Err(Error::LabelOutOfRange {
            label: target,
            n_classes: oracle.n_classes(),
        });
    }

    // Thresholds come from the clean input, once, and only when a spectral
    // projection mode needs them.
    let thresholds = match config.mode {
        PerturbationMode::EqualizeViolating | PerturbationMode::EqualizeAll => {
            let spec = stft(x, &config.stft)?;
            Some(generate_thresholds(
                &spec.magnitude(),
                x.sample_rate(),
                &config.stft,
            )?)
        }
        _ => None,
    };

    let mut x_adv = x.clone();
    let mut iterations_used = 0;
    let mut per_iteration_loss = Vec::new();

    while oracle.classify(&x_adv)? != target && iterations_used < config.max_iters {
        let delta = fgsm_step(oracle, &x_adv, target)?;
        let constrained = match &config.mode {
            PerturbationMode::EqualizeViolating | PerturbationMode::EqualizeAll => {
                let eq_mode = if config.mode == PerturbationMode::EqualizeViolating {
                    EqualizeMode::ViolatingOnly
                } else {
                    EqualizeMode::AllBins
                };
                let spectrum = stft(&delta, &config.stft)?;
                let projected = equalize(&spectrum, thresholds.as_ref().unwrap(), eq_mode)?;
                debug_check_projection(&projected, thresholds.as_ref().unwrap());
                griffin_lim(&projected, config.griffin_lim_iters)?
            }
            PerturbationMode::HardClip { beta } => hard_clip(&delta, *beta)?,
            PerturbationMode::PlainScale => delta,
        };

        let samples: Vec<f64> = x_adv
            .samples()
            .iter()
            .zip(constrained.samples())
            .map(|(&a, &d)| (a + config.epsilon * d).clamp(-1.0, 1.0))
            .collect();
        x_adv = AudioBuffer::new(samples, x.sample_rate())?;
        iterations_used += 1;
        per_iteration_loss.push(oracle.loss(&x_adv, target)?);
    }

    let success = oracle.classify(&x_adv)? == target;
    let final_loss = oracle.loss(&x_adv, target)?;
    let snr = snr_db(x, &x_adv)?;
    Ok(AttackOutcome {
        adversarial: x_adv,
        success,
        iterations_used,
        final_loss,
        snr_db: snr,
        per_iteration_loss,
    })
}

/// Signal-to-perturbation ratio `10·log10(Σx² / Σ(x_adv − x)²)` in dB.
///
/// A zero perturbation yields `+inf`; a zero signal with a nonzero
/// perturbation yields `-inf`.
pub fn snr_db(x: &AudioBuffer, x_adv: &AudioBuffer) -> Result<f64> {
    if x.sample_rate() != x_adv.sample_rate() {
        return Err(Error::RateMismatch {
            expected: x.sample_rate(),
            actual: x_adv.sample_rate(),
        });
    }
    if x.len() != x_adv.len() {
        return Err(Error::ShapeMismatch {
            context: "snr operands",
            expected: format!("{} samples", x.len()),
            actual: format!("{} samples", x_adv.len()),
        });
    }
    let signal: f64 = x.samples().iter().map(|s| s * s).sum();
    let noise: f64 = x
        .samples()
        .iter()
        .zip(x_adv.samples())
        .map(|(&a, &b)| (b - a) * (b - a))
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// Default slack factor for [`threshold_violation_count`]: a bin only counts
/// as violating when its magnitude exceeds twice its threshold, absorbing
/// Griffin-Lim reconstruction error.
pub const DEFAULT_VIOLATION_FACTOR: f64 = 2.0;

/// Number of spectral bins of `x_adv − x` whose magnitude exceeds
/// `factor × threshold`.
pub fn threshold_violation_count(
    x: &AudioBuffer,
    x_adv: &AudioBuffer,
    thresholds: &MaskingThresholds,
    config: &StftConfig,
    factor: f64,
) -> Result<usize> {
    if !factor.is_finite() || factor <= 0.0 {
        return Err(Error::invalid_param("factor", "must be finite and positive"));
    }
    if x.sample_rate() != x_adv.sample_rate() {
        return Err(Error::RateMismatch {
            expected: x.sample_rate(),
            actual: x_adv.sample_rate(),
        });
    }
    if x.len() != x_adv.len() {
        return Err(Error::ShapeMismatch {
            context: "violation-count operands",
            expected: format!("{} samples", x.len()),
            actual: format!("{} samples", x_adv.len()),
        });
    }
    let diff: Vec<f64> = x
        .samples()
        .iter()
        .zip(x_adv.samples())
        .map(|(&a, &b)| b - a)
        .collect();
    let spec = stft(&AudioBuffer::new(diff, x.sample_rate())?, config)?;
    let dims = (spec.n_frames(), spec.n_bins());
    if thresholds.levels().dim() != dims {
        return Err(Error::ShapeMismatch {
            context: "violation-count thresholds",
            expected: format!("{dims:?}"),
            actual: format!("{:?}", thresholds.levels().dim()),
        });
    }
    Ok(spec
        .bins()
        .iter()
        .zip(thresholds.levels().iter())
        .filter(|(z, &m)| z.norm() > factor * m)
        .count())
}
