//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Failure cases
//! that callers are expected to branch on (unsupported WAV layouts, shape
//! mismatches, training that never converged, ...) get their own variant
//! instead of being folded into a generic parse/compute error.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying filesystem failure (missing file, permissions, ...).
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The file is not a RIFF/WAVE container or its chunk structure is broken.
    #[error("{path}: not a RIFF/WAVE file ({detail})")]
    NotWave { path: PathBuf, detail: String },

    /// The WAVE file uses a codec other than integer PCM.
    #[error("{path}: unsupported codec (format tag {format_tag}, expected PCM)")]
    UnsupportedCodec { path: PathBuf, format_tag: u16 },

    /// The WAVE file has more than one channel.
    #[error("{path}: {channels} channels, only mono is supported")]
    UnsupportedChannels { path: PathBuf, channels: u16 },

    /// The WAVE file is PCM but not 16 bits per sample.
    #[error("{path}: {bits} bits per sample, only 16 is supported")]
    UnsupportedBitDepth { path: PathBuf, bits: u16 },

    /// The WAVE file has an empty data chunk.
    #[error("{path}: empty audio")]
    EmptyAudio { path: PathBuf },

    /// An operation that needs samples was handed an empty buffer.
    #[error("empty buffer")]
    EmptyBuffer,

    /// A buffer carried NaN or infinite samples.
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    /// A scalar argument was outside its documented domain.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// STFT configuration that cannot reconstruct (frame length, hop, COLA).
    #[error("invalid stft config: {reason}")]
    InvalidStftConfig { reason: String },

    /// Two operands that must share dimensions do not.
    #[error("shape mismatch: {context} (expected {expected}, got {actual})")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// Two operands that must share a sample rate do not.
    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    RateMismatch { expected: u32, actual: u32 },

    /// A class label outside the model's range.
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    /// Training finished its epoch budget below the required accuracy.
    #[error("training did not converge: accuracy {accuracy:.3} after {epochs} epochs")]
    TrainingFailed { accuracy: f64, epochs: usize },

    /// A model checkpoint that cannot be parsed.
    #[error("{path}: bad checkpoint ({detail})")]
    BadCheckpoint { path: PathBuf, detail: String },
}

impl Error {
    pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
