//! Psychoacoustically constrained adversarial audio.
//!
//! This crate builds targeted adversarial examples against differentiable
//! audio classifiers while keeping the perturbation below human masking
//! thresholds. The pipeline:
//!
//! 1. [`spectral`] — STFT analysis/synthesis and Griffin-Lim reconstruction.
//! 2. [`psychoacoustic`] — per-frame, per-bin masking thresholds derived
//!    from tonal maskers and the absolute threshold of hearing.
//! 3. [`projection`] — constraining candidate perturbations: spectral
//!    equalization against the thresholds, time-domain hard clipping, and a
//!    harmonic-distortion probe that quantifies why clipping is audible.
//! 4. [`oracle`] — the differentiable classifier interface plus a small
//!    trainable keyword model for end-to-end experiments.
//! 5. [`attack`] — the iterative gradient-sign loop tying it all together.
//!
//! [`audio`] supplies the sample buffer, WAV round-tripping, tone synthesis,
//! and the synthetic keyword dataset used by the toy model.

pub mod audio;
pub mod error;
pub mod spectral;
pub mod psychoacoustic;
pub mod projection;
pub mod oracle;
pub mod attack;

pub use audio::{
    build_keyword_dataset, class_tone_frequencies, read_wav, synth_tone, write_wav, AudioBuffer,
    KeywordDataset, DEFAULT_SAMPLE_RATE, KEYWORD_CLIP_LEN, MAX_KEYWORD_CLASSES,
};
pub use error::{Error, Result};
pub use spectral::{
    griffin_lim, istft, magnitude, stft, write_spectrogram_csv, Spectrogram, StftConfig, Window,
};
pub use psychoacoustic::{
    ath_db, find_tonal_maskers, generate_thresholds, hz_to_bark, spread, spreading_shape_db,
    write_thresholds_csv, MaskingThresholds, TonalMasker,
};
pub use projection::{equalize, hard_clip, harmonic_distortion, EqualizeMode};
pub use oracle::{
    dataset_accuracy, train_toy, GradientOracle, ToyKeywordModel, TrainConfig,
    TRAIN_ACCURACY_BAR,
};
pub use attack::{
    fgsm_step, run_attack, snr_db, threshold_violation_count, AttackConfig, AttackOutcome,
    PerturbationMode, DEFAULT_VIOLATION_FACTOR,
};
