//! Short-time Fourier analysis, synthesis, and Griffin-Lim reconstruction.
//!
//! Framing convention: the signal is extended by `frame_len/2` samples on
//! each side — by reflection with the edge sample excluded, with zeros
//! wherever the signal is too short to reflect — and frame `m` covers
//! extended samples `[m*hop, m*hop + frame_len)`, i.e. source samples
//! `[m*hop - frame_len/2, m*hop + frame_len/2)`. The frame count,
//! `ceil((len + frame_len/2) / hop)`, runs the frame grid far enough that
//! the last source sample sits under full window coverage. Centering frames
//! this way gives every source sample substantial window weight, which keeps
//! synthesis well conditioned: reconstructing a modified spectrogram never
//! amplifies content by more than a small constant, even at the signal
//! edges. Spectrogram rows of a perturbation line up bin-for-bin with rows
//! of the masking thresholds computed from the carrier because both use the
//! same grid.
//!
//! Synthesis uses weighted overlap-add with window-squared normalization
//! over the extended support, then trims the padding. This is an exact left
//! inverse of analysis at every source sample.

use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Maximum relative deviation tolerated by the constant-overlap-add check.
const COLA_TOLERANCE: f64 = 1e-10;

/// Norm-squared coverage below which a sample is treated as uncovered.
const COVERAGE_FLOOR: f64 = 1e-12;

/// Analysis taper applied to every frame (and reused for synthesis).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Periodic Hann: `0.5 * (1 - cos(2π j / frame_len))`.
    Hann,
    /// All-ones window; only satisfies overlap-add for `hop == frame_len`
    /// or hops that divide the frame length.
    Rectangular,
}

impl Window {
    fn values(self, frame_len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..frame_len)
                .map(|j| 0.5 * (1.0 - (std::f64::consts::TAU * j as f64 / frame_len as f64).cos()))
                .collect(),
            Window::Rectangular => vec![1.0; frame_len],
        }
    }
}

/// Validated STFT parameters.
///
/// Construction enforces: `frame_len` is a power of two (≥ 8),
/// `0 < hop <= frame_len`, and the (window, hop) pair satisfies
/// constant overlap-add within [`COLA_TOLERANCE`] so synthesis can
/// reconstruct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StftConfig {
    frame_len: usize,
    hop: usize,
    window: Window,
}

impl StftConfig {
    pub fn new(frame_len: usize, hop: usize, window: Window) -> Result<Self> {
        if frame_len < 8 || !frame_len.is_power_of_two() {
            return Err(Error::InvalidStftConfig {
                reason: format!("frame_len {frame_len} must be a power of two >= 8"),
            });
        }
        if hop == 0 || hop > frame_len {
            return Err(Error::InvalidStftConfig {
                reason: format!("hop {hop} must be in [1, frame_len={frame_len}]"),
            });
        }
        let config = StftConfig {
            frame_len,
            hop,
            window,
        };
        let deviation = config.cola_deviation();
        if deviation.is_nan() || deviation > COLA_TOLERANCE {
            return Err(Error::InvalidStftConfig {
                reason: format!(
                    "window/hop pair violates constant overlap-add \
                     (relative deviation {deviation:.3e})"
                ),
            });
        }
        Ok(config)
    }

    /// Relative deviation of the overlap-add sum from a constant.
    ///
    /// For an infinite tiling of windows every `hop` samples, the sum at
    /// offset `r` is the sum of `window[j]` over `j ≡ r (mod hop)`; the pair
    /// overlap-adds to a constant iff all residue-class sums agree.
    fn cola_deviation(&self) -> f64 {
        let w = self.window.values(self.frame_len);
        let mut sums = vec![0.0f64; self.hop];
        for (j, &v) in w.iter().enumerate() {
            sums[j % self.hop] += v;
        }
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        if max <= 0.0 {
            return f64::INFINITY;
        }
        (max - min) / max
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Number of retained spectrum bins per frame (`frame_len/2 + 1`).
    pub fn n_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Number of analysis frames for a source of `len` samples:
    /// `ceil((len + frame_len/2) / hop)`, enough that the final source
    /// sample has full window coverage on the extended grid.
    pub fn frame_count(&self, len: usize) -> usize {
        (len + self.frame_len / 2).div_ceil(self.hop).max(1)
    }

    fn window_values(&self) -> Vec<f64> {
        self.window.values(self.frame_len)
    }
}

impl Default for StftConfig {
    /// 2048-sample frames with 512-sample hop and a periodic Hann window —
    /// 128 ms frames at 16 kHz.
    fn default() -> Self {
        StftConfig::new(2048, 512, Window::Hann).expect("default config is valid")
    }
}

/// Complex STFT of a mono buffer: `frames x (frame_len/2 + 1)` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: Array2<Complex64>,
    config: StftConfig,
    sample_rate: u32,
    source_len: usize,
}

impl Spectrogram {
    /// Assembles a spectrogram from raw parts, validating dimensions against
    /// the config and source length.
    pub fn from_parts(
        bins: Array2<Complex64>,
        config: StftConfig,
        sample_rate: u32,
        source_len: usize,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid_param("sample_rate", "must be positive"));
        }
        if source_len == 0 {
            return Err(Error::EmptyBuffer);
        }
        let expected = (config.frame_count(source_len), config.n_bins());
        if bins.dim() != expected {
            return Err(Error::ShapeMismatch {
                context: "spectrogram bins",
                expected: format!("{expected:?}"),
                actual: format!("{:?}", bins.dim()),
            });
        }
        Ok(Spectrogram {
            bins,
            config,
            sample_rate,
            source_len,
        })
    }

    pub fn bins(&self) -> &Array2<Complex64> {
        &self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Length in samples of the signal this spectrogram was computed from
    /// (what [`istft`] reconstructs).
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn n_frames(&self) -> usize {
        self.bins.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.bins.ncols()
    }

    /// Center frequency of bin `q` in Hz.
    pub fn bin_freq_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.config.frame_len as f64
    }

    /// Per-bin magnitudes, same shape as the bins.
    pub fn magnitude(&self) -> Array2<f64> {
        self.bins.mapv(|z| z.norm())
    }

    /// Copy with the same geometry but different bin values; the new bins
    /// must match this spectrogram's dimensions.
    pub fn with_bins(&self, bins: Array2<Complex64>) -> Result<Spectrogram> {
        Spectrogram::from_parts(
            bins,
            self.config.clone(),
            self.sample_rate,
            self.source_len,
        )
    }
}

/// Per-bin magnitudes of a spectrogram.
pub fn magnitude(spec: &Spectrogram) -> Array2<f64> {
    spec.magnitude()
}

fn make_fft(planner: &mut FftPlanner<f64>, len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    if forward {
        planner.plan_fft_forward(len)
    } else {
        planner.plan_fft_inverse(len)
    }
}

/// Source sample for extended index `idx` (the extended grid starts `pad`
/// samples before the source): in-range samples pass through, out-of-range
/// indices reflect about the edges with the edge sample excluded
/// (`x[-k] = x[k]`, `x[len-1+k] = x[len-1-k]`), and indices beyond a single
/// reflection are zero.
fn padded_sample(x: &[f64], idx: usize, pad: usize) -> f64 {
    let i = idx as isize - pad as isize;
    let len = x.len() as isize;
    let t = if i < 0 {
        -i
    } else if i >= len {
        2 * (len - 1) - i
    } else {
        i
    };
    if (0..len).contains(&t) {
        x[t as usize]
    } else {
        0.0
    }
}

/// Short-time Fourier transform.
///
/// Returns `frame_count(len)` rows of `frame_len/2 + 1` complex bins; the
/// discarded upper half of each spectrum is the conjugate mirror of the
/// retained bins. Empty buffers are rejected.
pub fn stft(buffer: &AudioBuffer, config: &StftConfig) -> Result<Spectrogram> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let x = buffer.samples();
    let n = config.frame_len;
    let n_bins = config.n_bins();
    let m = config.frame_count(x.len());
    let window = config.window_values();
    let pad = n / 2;

    let mut planner = FftPlanner::new();
    let fft = make_fft(&mut planner, n, true);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::new(0.0, 0.0); n];
    let mut bins = Array2::from_elem((m, n_bins), Complex64::new(0.0, 0.0));

    for i in 0..m {
        let start = i * config.hop;
        for j in 0..n {
            frame[j] = Complex64::new(padded_sample(x, start + j, pad) * window[j], 0.0);
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        for q in 0..n_bins {
            bins[[i, q]] = frame[q];
        }
    }
    Spectrogram::from_parts(bins, config.clone(), buffer.sample_rate(), x.len())
}

/// Inverse STFT by weighted overlap-add with window-squared normalization
/// over the extended frame grid, trimmed back to the source length.
///
/// Exact left inverse of [`stft`] on consistent spectrograms: centering
/// gives every source sample window-squared coverage close to the full
/// overlap-add constant, so the normalization never divides by a small
/// number and reconstruction of modified spectrograms stays bounded.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let n = spec.config.frame_len;
    let hop = spec.config.hop;
    let m = spec.n_frames();
    let n_bins = spec.n_bins();
    let len = spec.source_len;
    let pad = n / 2;
    let window = spec.config.window_values();

    let mut planner = FftPlanner::new();
    let ifft = make_fft(&mut planner, n, false);
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::new(0.0, 0.0); n];

    let extended = (m - 1) * hop + n;
    let mut acc = vec![0.0f64; extended];
    let mut norm = vec![0.0f64; extended];

    for i in 0..m {
        frame[0] = spec.bins[[i, 0]];
        for q in 1..n_bins - 1 {
            frame[q] = spec.bins[[i, q]];
            frame[n - q] = spec.bins[[i, q]].conj();
        }
        frame[n_bins - 1] = spec.bins[[i, n_bins - 1]];
        ifft.process_with_scratch(&mut frame, &mut scratch);
        let start = i * hop;
        // rustfft's inverse is unnormalized; taking the real part projects
        // inconsistent (non-Hermitian-consistent) frames onto real signals.
        for j in 0..n {
            let v = frame[j].re / n as f64;
            acc[start + j] += window[j] * v;
            norm[start + j] += window[j] * window[j];
        }
    }

    let out: Vec<f64> = (0..len)
        .map(|idx| {
            let p = pad + idx;
            if norm[p] > COVERAGE_FLOOR {
                acc[p] / norm[p]
            } else {
                0.0
            }
        })
        .collect();
    AudioBuffer::new(out, spec.sample_rate)
}

/// Griffin-Lim reconstruction of a (possibly inconsistent) spectrogram.
///
/// Starts from the given complex bins — the supplied phases are the initial
/// estimate, not random — and alternates `iters` rounds of synthesis and
/// re-analysis, each time restoring the target magnitudes and keeping the
/// re-analyzed phases. `iters == 0` is exactly [`istft`]. The spectral
/// consistency error (distance between the target magnitudes and the
/// magnitudes of the re-analyzed output) is non-increasing in `iters`.
pub fn griffin_lim(spec: &Spectrogram, iters: usize) -> Result<AudioBuffer> {
    let target = spec.magnitude();
    let mut current = spec.clone();
    for _ in 0..iters {
        let signal = istft(&current)?;
        let rebuilt = stft(&signal, &spec.config)?;
        let mut bins = rebuilt.bins;
        for (z, &mag) in bins.iter_mut().zip(target.iter()) {
            let norm = z.norm();
            *z = if norm > 0.0 {
                *z * (mag / norm)
            } else {
                Complex64::new(mag, 0.0)
            };
        }
        current = spec.with_bins(bins)?;
    }
    istft(&current)
}

/// Dumps a spectrogram as CSV rows `frame,bin,re,im` (row-major by frame).
pub fn write_spectrogram_csv<W: Write>(spec: &Spectrogram, mut out: W) -> std::io::Result<()> {
    writeln!(out, "frame,bin,re,im")?;
    for i in 0..spec.n_frames() {
        for q in 0..spec.n_bins() {
            let z = spec.bins[[i, q]];
            writeln!(out, "{},{},{},{}", i, q, z.re, z.im)?;
        }
    }
    Ok(())
}
