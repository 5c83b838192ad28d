//! Python bindings for the masking-constrained adversarial audio toolkit.
//!
//! The module mirrors the library surface with thin wrappers: audio buffers
//! and WAV I/O, STFT analysis/synthesis and Griffin-Lim, masking-threshold
//! generation, the two perturbation constraints, the toy keyword model, and
//! the full attack loop. Matrices cross the boundary as nested lists to
//! keep the dependency surface minimal.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use undertone as core;
use undertone::GradientOracle as _;

/// I/O-shaped failures raise `IOError`; everything else raises `ValueError`.
fn to_py(e: core::Error) -> PyErr {
    use core::Error as E;
    match e {
        E::Io { .. }
        | E::NotWave { .. }
        | E::UnsupportedCodec { .. }
        | E::UnsupportedChannels { .. }
        | E::UnsupportedBitDepth { .. }
        | E::EmptyAudio { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows(matrix: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    matrix.outer_iter().map(|row| row.to_vec()).collect()
}

fn parse_window(name: &str) -> PyResult<core::Window> {
    match name.to_ascii_lowercase().as_str() {
        "hann" => Ok(core::Window::Hann),
        "rect" | "rectangular" => Ok(core::Window::Rectangular),
        other => Err(PyValueError::new_err(format!(
            "unknown window '{other}' (expected 'hann' or 'rect')"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Core data types
// ---------------------------------------------------------------------------

/// Mono audio: finite samples plus a sample rate.
#[pyclass(name = "AudioBuffer", skip_from_py_object)]
#[derive(Clone)]
struct PyAudioBuffer {
    inner: core::AudioBuffer,
}

#[pymethods]
impl PyAudioBuffer {
    #[new]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        Ok(PyAudioBuffer {
            inner: core::AudioBuffer::new(samples, sample_rate).map_err(to_py)?,
        })
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate()
    }

    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    fn duration_secs(&self) -> f64 {
        self.inner.duration_secs()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "AudioBuffer({} samples at {} Hz)",
            self.inner.len(),
            self.inner.sample_rate()
        )
    }
}

/// STFT analysis parameters: frame length (power of two), hop, window.
#[pyclass(name = "StftConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyStftConfig {
    inner: core::StftConfig,
}

#[pymethods]
impl PyStftConfig {
    #[new]
    #[pyo3(signature = (frame_len=2048, hop=512, window="hann"))]
    fn new(frame_len: usize, hop: usize, window: &str) -> PyResult<Self> {
        Ok(PyStftConfig {
            inner: core::StftConfig::new(frame_len, hop, parse_window(window)?).map_err(to_py)?,
        })
    }

    #[getter]
    fn frame_len(&self) -> usize {
        self.inner.frame_len()
    }

    #[getter]
    fn hop(&self) -> usize {
        self.inner.hop()
    }

    #[getter]
    fn n_bins(&self) -> usize {
        self.inner.n_bins()
    }

    fn frame_count(&self, len: usize) -> usize {
        self.inner.frame_count(len)
    }

    fn __repr__(&self) -> String {
        format!(
            "StftConfig(frame_len={}, hop={})",
            self.inner.frame_len(),
            self.inner.hop()
        )
    }
}

/// Complex STFT of a buffer; bins cross into Python as (re, im) pairs.
#[pyclass(name = "Spectrogram", skip_from_py_object)]
#[derive(Clone)]
struct PySpectrogram {
    inner: core::Spectrogram,
}

#[pymethods]
impl PySpectrogram {
    #[getter]
    fn n_frames(&self) -> usize {
        self.inner.n_frames()
    }

    #[getter]
    fn n_bins(&self) -> usize {
        self.inner.n_bins()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate()
    }

    #[getter]
    fn source_len(&self) -> usize {
        self.inner.source_len()
    }

    fn bin_freq_hz(&self, bin: usize) -> f64 {
        self.inner.bin_freq_hz(bin)
    }

    /// Magnitudes as a frames x bins nested list.
    fn magnitude(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.magnitude())
    }

    /// Complex bins as a frames x bins nested list of (re, im) tuples.
    fn bins(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner
            .bins()
            .outer_iter()
            .map(|row| row.iter().map(|z| (z.re, z.im)).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Spectrogram({} frames x {} bins)",
            self.inner.n_frames(),
            self.inner.n_bins()
        )
    }
}

/// Per-frame, per-bin linear magnitude ceilings.
#[pyclass(name = "MaskingThresholds", skip_from_py_object)]
#[derive(Clone)]
struct PyMaskingThresholds {
    inner: core::MaskingThresholds,
}

#[pymethods]
impl PyMaskingThresholds {
    #[getter]
    fn n_frames(&self) -> usize {
        self.inner.n_frames()
    }

    #[getter]
    fn n_bins(&self) -> usize {
        self.inner.n_bins()
    }

    #[getter]
    fn db_floor(&self) -> f64 {
        self.inner.db_floor()
    }

    /// Linear ceilings as a frames x bins nested list.
    fn levels(&self) -> Vec<Vec<f64>> {
        rows(self.inner.levels())
    }

    fn threshold_db(&self, frame: usize, bin: usize) -> f64 {
        self.inner.threshold_db(frame, bin)
    }

    fn __repr__(&self) -> String {
        format!(
            "MaskingThresholds({} frames x {} bins)",
            self.inner.n_frames(),
            self.inner.n_bins()
        )
    }
}

/// The synthetic keyword corpus the toy model trains on.
#[pyclass(name = "KeywordDataset")]
struct PyKeywordDataset {
    inner: core::KeywordDataset,
}

#[pymethods]
impl PyKeywordDataset {
    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    fn clip(&self, index: usize) -> PyResult<PyAudioBuffer> {
        self.inner
            .clips
            .get(index)
            .cloned()
            .map(|inner| PyAudioBuffer { inner })
            .ok_or_else(|| PyValueError::new_err(format!("clip index {index} out of range")))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Strided-conv keyword classifier with exact gradients.
#[pyclass(name = "ToyKeywordModel")]
struct PyToyKeywordModel {
    inner: core::ToyKeywordModel,
}

#[pymethods]
impl PyToyKeywordModel {
    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn input_len(&self) -> usize {
        self.inner.input_len()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate()
    }

    fn logits(&self, x: &PyAudioBuffer) -> PyResult<Vec<f64>> {
        self.inner.logits(&x.inner).map_err(to_py)
    }

    fn classify(&self, x: &PyAudioBuffer) -> PyResult<usize> {
        self.inner.classify(&x.inner).map_err(to_py)
    }

    fn loss(&self, x: &PyAudioBuffer, target: usize) -> PyResult<f64> {
        self.inner.loss(&x.inner, target).map_err(to_py)
    }

    fn grad(&self, x: &PyAudioBuffer, target: usize) -> PyResult<Vec<f64>> {
        self.inner.grad(&x.inner, target).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyToyKeywordModel {
            inner: core::ToyKeywordModel::load(path).map_err(to_py)?,
        })
    }
}

/// Result of one attack run.
#[pyclass(name = "AttackOutcome")]
struct PyAttackOutcome {
    inner: core::AttackOutcome,
}

#[pymethods]
impl PyAttackOutcome {
    #[getter]
    fn adversarial(&self) -> PyAudioBuffer {
        PyAudioBuffer {
            inner: self.inner.adversarial.clone(),
        }
    }

    #[getter]
    fn success(&self) -> bool {
        self.inner.success
    }

    #[getter]
    fn iterations_used(&self) -> usize {
        self.inner.iterations_used
    }

    #[getter]
    fn final_loss(&self) -> f64 {
        self.inner.final_loss
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    #[getter]
    fn per_iteration_loss(&self) -> Vec<f64> {
        self.inner.per_iteration_loss.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "AttackOutcome(success={}, iterations={}, snr_db={:.2})",
            self.inner.success, self.inner.iterations_used, self.inner.snr_db
        )
    }
}

// ---------------------------------------------------------------------------
// Audio I/O and synthesis
// ---------------------------------------------------------------------------

/// Reads a 16-bit PCM mono WAV file.
#[pyfunction]
fn read_wav(path: &str) -> PyResult<PyAudioBuffer> {
    Ok(PyAudioBuffer {
        inner: core::read_wav(path).map_err(to_py)?,
    })
}

/// Writes a buffer as a 16-bit PCM mono WAV file.
#[pyfunction]
fn write_wav(path: &str, buffer: &PyAudioBuffer) -> PyResult<()> {
    core::write_wav(path, &buffer.inner).map_err(to_py)
}

/// Pure sine tone.
#[pyfunction]
#[pyo3(signature = (freq_hz, duration_secs, amplitude, sample_rate=16_000))]
fn synth_tone(
    freq_hz: f64,
    duration_secs: f64,
    amplitude: f64,
    sample_rate: u32,
) -> PyResult<PyAudioBuffer> {
    Ok(PyAudioBuffer {
        inner: core::synth_tone(freq_hz, duration_secs, amplitude, sample_rate).map_err(to_py)?,
    })
}

/// Seeded synthetic keyword dataset (`n_classes` x `per_class` clips).
#[pyfunction]
fn build_keyword_dataset(n_classes: usize, per_class: usize, seed: u64) -> PyResult<PyKeywordDataset> {
    Ok(PyKeywordDataset {
        inner: core::build_keyword_dataset(n_classes, per_class, seed).map_err(to_py)?,
    })
}

// ---------------------------------------------------------------------------
// Spectral analysis
// ---------------------------------------------------------------------------

/// Centered STFT of a buffer.
#[pyfunction]
fn stft(buffer: &PyAudioBuffer, config: &PyStftConfig) -> PyResult<PySpectrogram> {
    Ok(PySpectrogram {
        inner: core::stft(&buffer.inner, &config.inner).map_err(to_py)?,
    })
}

/// Least-squares inverse STFT.
#[pyfunction]
fn istft(spec: &PySpectrogram) -> PyResult<PyAudioBuffer> {
    Ok(PyAudioBuffer {
        inner: core::istft(&spec.inner).map_err(to_py)?,
    })
}

/// Griffin-Lim reconstruction: `iters` magnitude-projection rounds, then
/// inversion.
#[pyfunction]
fn griffin_lim(spec: &PySpectrogram, iters: usize) -> PyResult<PyAudioBuffer> {
    Ok(PyAudioBuffer {
        inner: core::griffin_lim(&spec.inner, iters).map_err(to_py)?,
    })
}

// ---------------------------------------------------------------------------
// Psychoacoustics
// ---------------------------------------------------------------------------

/// Masking thresholds for a spectrogram's magnitudes.
#[pyfunction]
fn generate_thresholds(spec: &PySpectrogram) -> PyResult<PyMaskingThresholds> {
    Ok(PyMaskingThresholds {
        inner: core::generate_thresholds(
            &spec.inner.magnitude(),
            spec.inner.sample_rate(),
            spec.inner.config(),
        )
        .map_err(to_py)?,
    })
}

/// Critical-band rate (Bark) of a frequency.
#[pyfunction]
fn hz_to_bark(hz: f64) -> f64 {
    core::hz_to_bark(hz)
}

/// Absolute threshold of hearing in dB SPL.
#[pyfunction]
fn ath_db(hz: f64) -> f64 {
    core::ath_db(hz)
}

// ---------------------------------------------------------------------------
// Perturbation constraints
// ---------------------------------------------------------------------------

/// Phase-preserving magnitude projection under the thresholds.
#[pyfunction]
#[pyo3(signature = (spec, thresholds, violating_only=true))]
fn equalize(
    spec: &PySpectrogram,
    thresholds: &PyMaskingThresholds,
    violating_only: bool,
) -> PyResult<PySpectrogram> {
    let mode = if violating_only {
        core::EqualizeMode::ViolatingOnly
    } else {
        core::EqualizeMode::AllBins
    };
    Ok(PySpectrogram {
        inner: core::equalize(&spec.inner, &thresholds.inner, mode).map_err(to_py)?,
    })
}

/// Time-domain clamp to `[-beta, beta]`.
#[pyfunction]
fn hard_clip(buffer: &PyAudioBuffer, beta: f64) -> PyResult<PyAudioBuffer> {
    Ok(PyAudioBuffer {
        inner: core::hard_clip(&buffer.inner, beta).map_err(to_py)?,
    })
}

/// Energy of all harmonics above the fundamental, in dB relative to the
/// fundamental.
#[pyfunction]
fn harmonic_distortion(buffer: &PyAudioBuffer, fundamental_hz: f64) -> PyResult<f64> {
    core::harmonic_distortion(&buffer.inner, fundamental_hz).map_err(to_py)
}

// ---------------------------------------------------------------------------
// Oracle and attack
// ---------------------------------------------------------------------------

/// Trains the toy keyword model.
#[pyfunction]
#[pyo3(signature = (dataset, seed=0, epochs=400, learning_rate=2.0, n_filters=6, filter_width=48, stride=24))]
#[allow(clippy::too_many_arguments)]
fn train_toy(
    dataset: &PyKeywordDataset,
    seed: u64,
    epochs: usize,
    learning_rate: f64,
    n_filters: usize,
    filter_width: usize,
    stride: usize,
) -> PyResult<PyToyKeywordModel> {
    let config = core::TrainConfig {
        epochs,
        learning_rate,
        seed,
        n_filters,
        filter_width,
        stride,
    };
    Ok(PyToyKeywordModel {
        inner: core::train_toy(&dataset.inner, &config).map_err(to_py)?,
    })
}

/// Signal-to-perturbation ratio in dB.
#[pyfunction]
fn snr_db(x: &PyAudioBuffer, x_adv: &PyAudioBuffer) -> PyResult<f64> {
    core::snr_db(&x.inner, &x_adv.inner).map_err(to_py)
}

/// Spectrogram bins of `x_adv - x` that exceed `factor` times their
/// masking ceiling.
#[pyfunction]
#[pyo3(signature = (x, x_adv, thresholds, config, factor=2.0))]
fn threshold_violation_count(
    x: &PyAudioBuffer,
    x_adv: &PyAudioBuffer,
    thresholds: &PyMaskingThresholds,
    config: &PyStftConfig,
    factor: f64,
) -> PyResult<usize> {
    core::threshold_violation_count(&x.inner, &x_adv.inner, &thresholds.inner, &config.inner, factor)
        .map_err(to_py)
}

/// Iterative gradient-sign attack with the chosen perturbation constraint.
///
/// `mode` is one of `"equalize"`, `"equalize-all"`, `"hard-clip"` (with
/// `beta`), or `"plain"`.
#[pyfunction]
#[pyo3(signature = (model, x, target, epsilon=1.0, k=1, max_iters=1000, mode="equalize", beta=0.05, frame_len=256, hop=64))]
#[allow(clippy::too_many_arguments)]
fn run_attack(
    model: &PyToyKeywordModel,
    x: &PyAudioBuffer,
    target: usize,
    epsilon: f64,
    k: usize,
    max_iters: usize,
    mode: &str,
    beta: f64,
    frame_len: usize,
    hop: usize,
) -> PyResult<PyAttackOutcome> {
    let mode = match mode.to_ascii_lowercase().as_str() {
        "equalize" => core::PerturbationMode::EqualizeViolating,
        "equalize-all" => core::PerturbationMode::EqualizeAll,
        "hard-clip" => core::PerturbationMode::HardClip { beta },
        "plain" => core::PerturbationMode::PlainScale,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown mode '{other}' (expected 'equalize', 'equalize-all', 'hard-clip', or 'plain')"
            )))
        }
    };
    let config = core::AttackConfig {
        epsilon,
        griffin_lim_iters: k,
        max_iters,
        mode,
        stft: core::StftConfig::new(frame_len, hop, core::Window::Hann).map_err(to_py)?,
    };
    Ok(PyAttackOutcome {
        inner: core::run_attack(&model.inner, &x.inner, target, &config).map_err(to_py)?,
    })
}

// ---------------------------------------------------------------------------
// Module wiring
// ---------------------------------------------------------------------------

#[pymodule]
fn undertone_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAudioBuffer>()?;
    m.add_class::<PyStftConfig>()?;
    m.add_class::<PySpectrogram>()?;
    m.add_class::<PyMaskingThresholds>()?;
    m.add_class::<PyKeywordDataset>()?;
    m.add_class::<PyToyKeywordModel>()?;
    m.add_class::<PyAttackOutcome>()?;

    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    m.add_function(wrap_pyfunction!(synth_tone, m)?)?;
    m.add_function(wrap_pyfunction!(build_keyword_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(stft, m)?)?;
    m.add_function(wrap_pyfunction!(istft, m)?)?;
    m.add_function(wrap_pyfunction!(griffin_lim, m)?)?;
    m.add_function(wrap_pyfunction!(generate_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(hz_to_bark, m)?)?;
    m.add_function(wrap_pyfunction!(ath_db, m)?)?;
    m.add_function(wrap_pyfunction!(equalize, m)?)?;
    m.add_function(wrap_pyfunction!(hard_clip, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_distortion, m)?)?;
    m.add_function(wrap_pyfunction!(train_toy, m)?)?;
    m.add_function(wrap_pyfunction!(snr_db, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_violation_count, m)?)?;
    m.add_function(wrap_pyfunction!(run_attack, m)?)?;
    Ok(())
}
