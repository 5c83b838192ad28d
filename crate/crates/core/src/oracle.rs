//! Differentiable classification oracles.
//!
//! An attack needs three things from a model: a hard decision, a scalar
//! target-class loss, and the exact gradient of that loss with respect to
//! the input samples. [`GradientOracle`] captures that contract;
//! [`ToyKeywordModel`] is a small but fully differentiable keyword
//! classifier over raw samples (strided convolution → ReLU → global mean
//! pool → affine) used for desk-scale experiments.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{AudioBuffer, KeywordDataset};
use crate::error::{Error, Result};

/// Numerically stable log(Σ exp(l)).
fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// A differentiable classifier over fixed-length audio.
///
/// `loss` is the softmax cross-entropy of the *target* class and `grad` its
/// exact derivative with respect to the input samples. All methods are pure:
/// calling them never changes later answers.
pub trait GradientOracle {
    fn n_classes(&self) -> usize;

    /// Required input length in samples; other lengths are errors.
    fn input_len(&self) -> usize;

    /// Sample rate the model was trained at; mismatches are errors.
    fn sample_rate(&self) -> u32;

    /// Raw class scores.
    fn logits(&self, x: &AudioBuffer) -> Result<Vec<f64>>;

    /// Exact gradient of `loss(x, target)` with respect to every sample.
    fn grad(&self, x: &AudioBuffer, target: usize) -> Result<Vec<f64>>;

    /// Hard decision: index of the largest logit, ties captured by the
    /// lowest index.
    fn classify(&self, x: &AudioBuffer) -> Result<usize> {
        let logits = self.logits(x)?;
        let mut best = 0;
        for (k, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = k;
            }
        }
        Ok(best)
    }

    /// Softmax cross-entropy of the target class:
    /// `log Σ_k exp(logit_k) - logit_target`.
    fn loss(&self, x: &AudioBuffer, target: usize) -> Result<f64> {
        let logits = self.logits(x)?;
        if target >= logits.len() {
            return Err(Error::LabelOutOfRange {
                label: target,
                n_classes: logits.len(),
            });
        }
        Ok(log_sum_exp(&logits) - logits[target])
    }
}

/// Strided 1-D convolution over raw samples, ReLU, global mean pool per
/// filter, affine head. Small enough to train in seconds, smooth enough
/// (ReLU subgradient 0 at 0) for finite-difference checks away from kinks.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyKeywordModel {
    n_classes: usize,
    input_len: usize,
    sample_rate: u32,
    n_filters: usize,
    filter_width: usize,
    stride: usize,
    conv_w: Vec<f64>, // n_filters × filter_width, row-major
    conv_b: Vec<f64>, // n_filters
    out_w: Vec<f64>,  // n_classes × n_filters, row-major
    out_b: Vec<f64>,  // n_classes
}

impl ToyKeywordModel {
    /// Number of convolution windows over one input.
    fn n_windows(&self) -> usize {
        (self.input_len - self.filter_width) / self.stride + 1
    }

    fn check_input(&self, x: &AudioBuffer) -> Result<()> {
        if x.sample_rate() != self.sample_rate {
            return Err(Error::RateMismatch {
                expected: self.sample_rate,
                actual: x.sample_rate(),
            });
        }
        if x.len() != self.input_len {
            return Err(Error::ShapeMismatch {
                context: "model input",
                expected: format!("{} samples", self.input_len),
                actual: format!("{} samples", x.len()),
            });
        }
        Ok(())
    }

    /// Forward pass returning pre-activations, pooled features, and logits.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let t_windows = self.n_windows();
        let mut pre = vec![0.0; self.n_filters * t_windows];
        let mut pooled = vec![0.0; self.n_filters];
        for i in 0..self.n_filters {
            let w = &self.conv_w[i * self.filter_width..(i + 1) * self.filter_width];
            let mut acc_pool = 0.0;
            for t in 0..t_windows {
                let start = t * self.stride;
                let mut acc = self.conv_b[i];
                for (j, &wj) in w.iter().enumerate() {
                    acc += wj * x[start + j];
                }
                pre[i * t_windows + t] = acc;
                if acc > 0.0 {
                    acc_pool += acc;
                }
            }
            pooled[i] = acc_pool / t_windows as f64;
        }
        let mut logits = self.out_b.clone();
        for (k, logit) in logits.iter_mut().enumerate() {
            let row = &self.out_w[k * self.n_filters..(k + 1) * self.n_filters];
            for (i, &d) in row.iter().enumerate() {
                *logit += d * pooled[i];
            }
        }
        (pre, pooled, logits)
    }

    /// Saves a versioned ASCII checkpoint that round-trips bit-exactly
    /// (floats are written with shortest round-trip formatting).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        let _ = writeln!(out, "undertone-toy v1");
        let _ = writeln!(out, "classes {}", self.n_classes);
        let _ = writeln!(out, "input_len {}", self.input_len);
        let _ = writeln!(out, "sample_rate {}", self.sample_rate);
        let _ = writeln!(
            out,
            "conv {} {} {}",
            self.n_filters, self.filter_width, self.stride
        );
        let write_row = |out: &mut String, row: &[f64]| {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        };
        for i in 0..self.n_filters {
            write_row(
                &mut out,
                &self.conv_w[i * self.filter_width..(i + 1) * self.filter_width],
            );
        }
        write_row(&mut out, &self.conv_b);
        for k in 0..self.n_classes {
            write_row(&mut out, &self.out_w[k * self.n_filters..(k + 1) * self.n_filters]);
        }
        write_row(&mut out, &self.out_b);
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Loads a checkpoint written by [`ToyKeywordModel::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |detail: &str| Error::BadCheckpoint {
            path: path.to_path_buf(),
            detail: detail.to_string(),
        };
        let mut lines = text.lines();
        if lines.next() != Some("undertone-toy v1") {
            return Err(bad("unknown header/version"));
        }
        let mut field = |name: &str| -> Result<Vec<u64>> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(bad(&format!("expected '{name}' line")));
            }
            parts
                .map(|p| p.parse::<u64>().map_err(|_| bad(&format!("bad {name} value"))))
                .collect()
        };
        let classes = field("classes")?;
        let input_len = field("input_len")?;
        let sample_rate = field("sample_rate")?;
        let conv = field("conv")?;
        if classes.len() != 1 || input_len.len() != 1 || sample_rate.len() != 1 || conv.len() != 3
        {
            return Err(bad("malformed header fields"));
        }
        let (n_classes, input_len, sample_rate) =
            (classes[0] as usize, input_len[0] as usize, sample_rate[0] as u32);
        let (n_filters, filter_width, stride) =
            (conv[0] as usize, conv[1] as usize, conv[2] as usize);
        if n_classes < 2
            || n_filters == 0
            || filter_width == 0
            || stride == 0
            || sample_rate == 0
            || input_len < filter_width
        {
            return Err(bad("degenerate model shape"));
        }

        let mut row = |expected: usize, what: &str| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad("truncated parameters"))?;
            let vals: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|_| bad(&format!("unparseable float in {what}")))?;
            if vals.len() != expected {
                return Err(bad(&format!(
                    "{what}: expected {expected} values, got {}",
                    vals.len()
                )));
            }
            Ok(vals)
        };
        let mut conv_w = Vec::with_capacity(n_filters * filter_width);
        for i in 0..n_filters {
            conv_w.extend(row(filter_width, &format!("filter {i}"))?);
        }
        let conv_b = row(n_filters, "conv bias")?;
        let mut out_w = Vec::with_capacity(n_classes * n_filters);
        for k in 0..n_classes {
            out_w.extend(row(n_filters, &format!("head row {k}"))?);
        }
        let out_b = row(n_classes, "head bias")?;
        if lines.next().is_some() {
            return Err(bad("trailing data after parameters"));
        }
        Ok(ToyKeywordModel {
            n_classes,
            input_len,
            sample_rate,
            n_filters,
            filter_width,
            stride,
            conv_w,
            conv_b,
            out_w,
            out_b,
        })
    }
}

impl GradientOracle for ToyKeywordModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    fn logits(&self, x: &AudioBuffer) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x.samples()).2)
    }

    fn grad(&self, x: &AudioBuffer, target: usize) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if target >= self.n_classes {
            return Err(Error::LabelOutOfRange {
                label: target,
                n_classes: self.n_classes,
            });
        }
        let (pre, _pooled, logits) = self.forward(x.samples());
        let mut dlogits = softmax(&logits);
        dlogits[target] -= 1.0;

        let t_windows = self.n_windows();
        let pool_scale = 1.0 / t_windows as f64;
        let mut dx = vec![0.0; self.input_len];
        for i in 0..self.n_filters {
            let mut dpooled = 0.0;
            for (k, &dl) in dlogits.iter().enumerate() {
                dpooled += dl * self.out_w[k * self.n_filters + i];
            }
            let g = dpooled * pool_scale;
            if g == 0.0 {
                continue;
            }
            let w = &self.conv_w[i * self.filter_width..(i + 1) * self.filter_width];
            for t in 0..t_windows {
                // ReLU subgradient: strictly positive pre-activations only.
                if pre[i * t_windows + t] > 0.0 {
                    let start = t * self.stride;
                    for (j, &wj) in w.iter().enumerate() {
                        dx[start + j] += g * wj;
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Hyperparameters for [`train_toy`].
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub n_filters: usize,
    pub filter_width: usize,
    pub stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            learning_rate: 2.0,
            seed: 0,
            n_filters: 6,
            filter_width: 48,
            stride: 24,
        }
    }
}

/// Fraction of the training set the final model must classify correctly.
pub const TRAIN_ACCURACY_BAR: f64 = 0.95;

/// Fraction of `dataset` that `oracle` classifies correctly.
pub fn dataset_accuracy(oracle: &dyn GradientOracle, dataset: &KeywordDataset) -> Result<f64> {
    let mut correct = 0usize;
    for (clip, &label) in dataset.clips.iter().zip(&dataset.labels) {
        if oracle.classify(clip)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Trains a [`ToyKeywordModel`] with full-batch gradient descent.
///
/// Fully deterministic for a given `(dataset, config)` pair: seeded init,
/// fixed iteration order, no shuffling. Stops early once the pre-update
/// training accuracy reaches 100% and the mean loss is small; if the final
/// accuracy is below [`TRAIN_ACCURACY_BAR`] the run is reported as
/// [`Error::TrainingFailed`].
pub fn train_toy(dataset: &KeywordDataset, config: &TrainConfig) -> Result<ToyKeywordModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if config.n_filters == 0 || config.filter_width == 0 || config.stride == 0 {
        return Err(Error::invalid_param("config", "zero-sized architecture"));
    }
    let input_len = dataset.clips[0].len();
    if input_len < config.filter_width {
        return Err(Error::invalid_param(
            "filter_width",
            "wider than the training clips",
        ));
    }
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(Error::invalid_param("learning_rate", "must be finite and >= 0"));
    }
    if let Some(&bad) = dataset.labels.iter().find(|&&l| l >= dataset.n_classes) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            n_classes: dataset.n_classes,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let conv_scale = 1.0 / (config.filter_width as f64).sqrt();
    let head_scale = 1.0 / (config.n_filters as f64).sqrt();
    let mut model = ToyKeywordModel {
        n_classes: dataset.n_classes,
        input_len,
        sample_rate: dataset.sample_rate(),
        n_filters: config.n_filters,
        filter_width: config.filter_width,
        stride: config.stride,
        conv_w: (0..config.n_filters * config.filter_width)
            .map(|_| conv_scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
        conv_b: vec![0.0; config.n_filters],
        out_w: (0..dataset.n_classes * config.n_filters)
            .map(|_| head_scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
        out_b: vec![0.0; dataset.n_classes],
    };

    let n = dataset.len() as f64;
    let t_windows = model.n_windows();
    let pool_scale = 1.0 / t_windows as f64;
    for _epoch in 0..config.epochs {
        let mut g_conv_w = vec![0.0; model.conv_w.len()];
        let mut g_conv_b = vec![0.0; model.conv_b.len()];
        let mut g_out_w = vec![0.0; model.out_w.len()];
        let mut g_out_b = vec![0.0; model.out_b.len()];
        let mut loss_sum = 0.0;
        let mut correct = 0usize;

        for (clip, &label) in dataset.clips.iter().zip(&dataset.labels) {
            let x = clip.samples();
            let (pre, pooled, logits) = model.forward(x);
            loss_sum += log_sum_exp(&logits) - logits[label];
            let mut best = 0;
            for (k, &l) in logits.iter().enumerate() {
                if l > logits[best] {
                    best = k;
                }
            }
            if best == label {
                correct += 1;
            }

            let mut dlogits = softmax(&logits);
            dlogits[label] -= 1.0;
            for (k, &dl) in dlogits.iter().enumerate() {
                g_out_b[k] += dl;
                for i in 0..model.n_filters {
                    g_out_w[k * model.n_filters + i] += dl * pooled[i];
                }
            }
            for i in 0..model.n_filters {
                let mut dpooled = 0.0;
                for (k, &dl) in dlogits.iter().enumerate() {
                    dpooled += dl * model.out_w[k * model.n_filters + i];
                }
                let g = dpooled * pool_scale;
                if g == 0.0 {
                    continue;
                }
                for t in 0..t_windows {
                    if pre[i * t_windows + t] > 0.0 {
                        g_conv_b[i] += g;
                        let start = t * model.stride;
                        for j in 0..model.filter_width {
                            g_conv_w[i * model.filter_width + j] += g * x[start + j];
                        }
                    }
                }
            }
        }

        // Converged: every clip already classified correctly with low loss.
        if correct == dataset.len() && loss_sum / n < 0.05 {
            break;
        }
        let step = config.learning_rate / n;
        for (w, g) in model.conv_w.iter_mut().zip(&g_conv_w) {
            *w -= step * g;
        }
        for (b, g) in model.conv_b.iter_mut().zip(&g_conv_b) {
            *b -= step * g;
        }
        for (w, g) in model.out_w.iter_mut().zip(&g_out_w) {
            *w -= step * g;
        }
        for (b, g) in model.out_b.iter_mut().zip(&g_out_b) {
            *b -= step * g;
        }
    }

    let accuracy = dataset_accuracy(&model, dataset)?;
    if accuracy < TRAIN_ACCURACY_BAR {
        return Err(Error::TrainingFailed {
            accuracy,
            epochs: config.epochs,
        });
    }
    Ok(model)
}
