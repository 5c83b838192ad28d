//! Audio buffers, WAV file I/O, and synthetic test-signal generation.
//!
//! The on-disk interchange format is deliberately narrow: RIFF/WAVE,
//! integer PCM, 16-bit, mono, little-endian. Anything else is rejected with
//! a dedicated error rather than being silently converted.
//!
//! Sample mapping:
//! * read:  `i16` value / 32768.0 (so -32768 maps to exactly -1.0)
//! * write: clamp to [-1, 1], scale by 32767, round half away from zero

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sample rate used by the synthetic datasets and CLI defaults.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono audio at a fixed sample rate, samples in [-1, 1] by convention.
///
/// The constructor enforces a positive sample rate and finite samples;
/// amplitude is *not* clamped here (intermediate perturbation signals may
/// legitimately exceed unit range before the attack loop clamps them).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Wraps raw samples, validating the rate and rejecting NaN/inf samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid_param("sample_rate", "must be positive"));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

// ---------------------------------------------------------------------------
// WAV reading
// ---------------------------------------------------------------------------

/// Reads a 16-bit mono PCM RIFF/WAVE file into an [`AudioBuffer`].
///
/// Unsupported layouts are rejected with dedicated errors:
/// [`Error::UnsupportedCodec`] (non-PCM format tag),
/// [`Error::UnsupportedChannels`], [`Error::UnsupportedBitDepth`] and
/// [`Error::EmptyAudio`] (data chunk present but empty).
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let not_wave = |detail: &str| Error::NotWave {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(not_wave("missing RIFF/WAVE header"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (tag, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut offset = 12usize;
    while offset + 8 <= bytes.len() {
        let id = &bytes[offset..offset + 4];
        let size = u32::from_le_bytes(bytes[offset + 4..offset + 8].try_into().unwrap()) as usize;
        let body_start = offset + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(not_wave("chunk size exceeds file length"));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(not_wave("fmt chunk too short"));
                }
                fmt = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {} // skip LIST, fact, cue, ... chunks
        }
        offset = body_end + (size & 1); // chunks are word-aligned
    }

    let (format_tag, channels, sample_rate, bits) = fmt.ok_or_else(|| not_wave("no fmt chunk"))?;
    let data = data.ok_or_else(|| not_wave("no data chunk"))?;
    if format_tag != 1 {
        return Err(Error::UnsupportedCodec {
            path: path.to_path_buf(),
            format_tag,
        });
    }
    if channels != 1 {
        return Err(Error::UnsupportedChannels {
            path: path.to_path_buf(),
            channels,
        });
    }
    if bits != 16 {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            bits,
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyAudio {
            path: path.to_path_buf(),
        });
    }
    if data.len() % 2 != 0 {
        return Err(not_wave("data chunk is not a whole number of 16-bit samples"));
    }
    if sample_rate == 0 {
        return Err(not_wave("zero sample rate"));
    }

    let samples = data
        .chunks_exact(2)
        .map(|pair| i16::from_le_bytes([pair[0], pair[1]]) as f64 / 32768.0)
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

// ---------------------------------------------------------------------------
// WAV writing
// ---------------------------------------------------------------------------

/// Quantizes one sample for a 16-bit PCM stream.
///
/// Clamps to [-1, 1] first, then rounds `sample * 32767` half away from
/// zero, so full scale maps to ±32767 and the mapping is symmetric.
fn quantize(sample: f64) -> i16 {
    (sample.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Writes an [`AudioBuffer`] as a 16-bit mono PCM RIFF/WAVE file.
pub fn write_wav(path: impl AsRef<Path>, buffer: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let data_len = buffer.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buffer.sample_rate().to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate() * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in buffer.samples() {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Signal synthesis
// ---------------------------------------------------------------------------

/// Generates a sine tone: `amplitude * sin(2π freq_hz t)`.
///
/// Errors if the frequency is not strictly between 0 and Nyquist, the
/// amplitude is outside [0, 1], or the duration rounds to zero samples.
pub fn synth_tone(
    freq_hz: f64,
    duration_secs: f64,
    amplitude: f64,
    sample_rate: u32,
) -> Result<AudioBuffer> {
    if sample_rate == 0 {
        return Err(Error::invalid_param("sample_rate", "must be positive"));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !freq_hz.is_finite() || freq_hz <= 0.0 || freq_hz >= nyquist {
        return Err(Error::invalid_param(
            "freq_hz",
            format!("{freq_hz} Hz is not strictly between 0 and Nyquist ({nyquist} Hz)"),
        ));
    }
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(Error::invalid_param("amplitude", "must be in [0, 1]"));
    }
    let n = (duration_secs * sample_rate as f64).round();
    if !duration_secs.is_finite() || n < 1.0 {
        return Err(Error::invalid_param(
            "duration_secs",
            "must cover at least one sample",
        ));
    }
    let omega = std::f64::consts::TAU * freq_hz / sample_rate as f64;
    let samples = (0..n as usize)
        .map(|i| amplitude * (omega * i as f64).sin())
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

// ---------------------------------------------------------------------------
// Synthetic keyword dataset
// ---------------------------------------------------------------------------

/// Number of samples per synthetic keyword clip (0.2 s at 16 kHz).
pub const KEYWORD_CLIP_LEN: usize = 3200;

/// Largest class count the tone-frequency schedule supports below Nyquist.
pub const MAX_KEYWORD_CLASSES: usize = 12;

/// Labeled clips for training and attacking the toy keyword classifier.
///
/// Built exclusively by [`build_keyword_dataset`], which guarantees that all
/// clips share [`KEYWORD_CLIP_LEN`] samples at [`DEFAULT_SAMPLE_RATE`] and
/// that `labels[i]` is the class of `clips[i]`.
#[derive(Debug, Clone)]
pub struct KeywordDataset {
    pub clips: Vec<AudioBuffer>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl KeywordDataset {
    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        DEFAULT_SAMPLE_RATE
    }

    pub fn clip_len(&self) -> usize {
        KEYWORD_CLIP_LEN
    }
}

/// The two template tone frequencies that define a keyword class.
///
/// Linearly spaced so every class is spectrally distinct and the highest
/// class stays well below the 8 kHz Nyquist limit.
pub fn class_tone_frequencies(class: usize) -> (f64, f64) {
    (400.0 + 340.0 * class as f64, 1240.0 + 520.0 * class as f64)
}

/// Builds the deterministic synthetic keyword dataset.
///
/// Each clip is the sum of its class's two template tones (amplitude 0.3
/// each) with a seeded per-clip phase offset, amplitude jitter in
/// [0.85, 1.0], and seeded uniform noise in ±0.03. The same
/// `(n_classes, per_class, seed)` triple always produces bit-identical
/// clips.
pub fn build_keyword_dataset(
    n_classes: usize,
    per_class: usize,
    seed: u64,
) -> Result<KeywordDataset> {
    if !(2..=MAX_KEYWORD_CLASSES).contains(&n_classes) {
        return Err(Error::invalid_param(
            "n_classes",
            format!("must be in [2, {MAX_KEYWORD_CLASSES}]"),
        ));
    }
    if per_class == 0 {
        return Err(Error::invalid_param("per_class", "must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = DEFAULT_SAMPLE_RATE as f64;
    let mut clips = Vec::with_capacity(n_classes * per_class);
    let mut labels = Vec::with_capacity(n_classes * per_class);
    for class in 0..n_classes {
        let (f1, f2) = class_tone_frequencies(class);
        for _ in 0..per_class {
            let gain: f64 = 0.85 + 0.15 * rng.random::<f64>();
            let phase1 = std::f64::consts::TAU * rng.random::<f64>();
            let phase2 = std::f64::consts::TAU * rng.random::<f64>();
            let mut samples = Vec::with_capacity(KEYWORD_CLIP_LEN);
            for i in 0..KEYWORD_CLIP_LEN {
                let t = i as f64 / rate;
                let tone = 0.3 * (std::f64::consts::TAU * f1 * t + phase1).sin()
                    + 0.3 * (std::f64::consts::TAU * f2 * t + phase2).sin();
                let noise = 0.03 * (2.0 * rng.random::<f64>() - 1.0);
                samples.push((gain * tone + noise).clamp(-1.0, 1.0));
            }
            clips.push(AudioBuffer::new(samples, DEFAULT_SAMPLE_RATE)?);
            labels.push(class);
        }
    }
    Ok(KeywordDataset {
        clips,
        labels,
        n_classes,
    })
}
