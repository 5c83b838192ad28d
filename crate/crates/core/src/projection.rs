//! Projection of perturbation spectrograms under masking ceilings, plus the
//! time-domain hard-clip baseline and a harmonic-distortion meter to compare
//! the two.
//!
//! Equalization rescales complex bins toward the per-bin ceiling without
//! touching phase (multiplication by a nonnegative real), so a projected
//! perturbation keeps its temporal structure while its magnitude drops under
//! the masking threshold.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::psychoacoustic::MaskingThresholds;
use crate::spectral::Spectrogram;

/// How equalization treats bins that are already under their ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualizeMode {
    /// Only bins whose magnitude exceeds the ceiling are pulled down to it;
    /// compliant bins pass through untouched. Idempotent.
    ViolatingOnly,
    /// Every nonzero bin is rescaled to sit exactly on the ceiling —
    /// including quiet bins, which get amplified. Zero bins stay zero.
    AllBins,
}

/// Rescales `delta`'s bins against per-bin masking ceilings.
///
/// Both modes preserve phase exactly (scale factors are nonnegative reals)
/// and guarantee `|out[i,j]| <= thresholds[i,j]` up to rounding. Shapes must
/// match bin-for-bin.
pub fn equalize(
    delta: &Spectrogram,
    thresholds: &MaskingThresholds,
    mode: EqualizeMode,
) -> Result<Spectrogram> {
    let dims = (delta.n_frames(), delta.n_bins());
    if thresholds.levels().dim() != dims {
        return Err(Error::ShapeMismatch {
            context: "equalize thresholds",
            expected: format!("{dims:?}"),
            actual: format!("{:?}", thresholds.levels().dim()),
        });
    }
    let mut bins = delta.bins().clone();
    for (z, &ceiling) in bins.iter_mut().zip(thresholds.levels().iter()) {
        let norm = z.norm();
        match mode {
            EqualizeMode::ViolatingOnly => {
                if norm > ceiling {
                    *z *= ceiling / norm;
                }
            }
            EqualizeMode::AllBins => {
                if norm > 0.0 {
                    *z *= ceiling / norm;
                } else {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    delta.with_bins(bins)
}

/// Per-sample clamp of a perturbation to `[-beta, beta]`.
pub fn hard_clip(delta: &AudioBuffer, beta: f64) -> Result<AudioBuffer> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::invalid_param("beta", "must be a positive finite bound"));
    }
    let samples = delta
        .samples()
        .iter()
        .map(|&s| s.clamp(-beta, beta))
        .collect();
    AudioBuffer::new(samples, delta.sample_rate())
}

/// Ratio (dB) of harmonic power (orders 2..=5, ±1 bin each) to fundamental
/// power (±1 bin) on the buffer-length DFT.
///
/// Sentinels: a signal with zero harmonic power (including all-zero input)
/// returns -inf; zero fundamental with nonzero harmonics returns +inf.
/// Errors: non-positive fundamental, fundamental above Nyquist/5 (the 5th
/// harmonic must be measurable), or a fundamental the buffer cannot resolve
/// (rounds to bin 0).
pub fn harmonic_distortion(buffer: &AudioBuffer, fundamental_hz: f64) -> Result<f64> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if !fundamental_hz.is_finite() || fundamental_hz <= 0.0 {
        return Err(Error::invalid_param(
            "fundamental_hz",
            "must be positive and finite",
        ));
    }
    let rate = buffer.sample_rate() as f64;
    if 5.0 * fundamental_hz >= rate / 2.0 {
        return Err(Error::invalid_param(
            "fundamental_hz",
            format!(
                "{fundamental_hz} Hz is above Nyquist/5; the 5th harmonic would alias"
            ),
        ));
    }
    let n = buffer.len();
    let fb = (fundamental_hz * n as f64 / rate).round() as usize;
    if fb < 1 {
        return Err(Error::invalid_param(
            "fundamental_hz",
            format!("{fundamental_hz} Hz is not resolvable by {n} samples"),
        ));
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut spectrum: Vec<Complex64> = buffer
        .samples()
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut spectrum, &mut scratch);

    let band_power = |center: usize| -> f64 {
        let lo = center.saturating_sub(1).max(1);
        let hi = (center + 1).min(n / 2);
        (lo..=hi).map(|b| spectrum[b].norm_sqr()).sum()
    };
    let fundamental = band_power(fb);
    let harmonics: f64 = (2..=5).map(|h| band_power(h * fb)).sum();

    if harmonics == 0.0 {
        Ok(f64::NEG_INFINITY)
    } else if fundamental == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (harmonics / fundamental).log10())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::synth_tone;
    use crate::psychoacoustic::MaskingThresholds;
    use crate::spectral::{stft, StftConfig, Window};
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_spec(seed: u64, len: usize) -> Spectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..len).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let buf = AudioBuffer::new(samples, 16_000).unwrap();
        stft(&buf, &StftConfig::new(128, 32, Window::Hann).unwrap()).unwrap()
    }

    fn uniform_thresholds(spec: &Spectrogram, level: f64) -> MaskingThresholds {
        MaskingThresholds::from_levels(
            Array2::from_elem((spec.n_frames(), spec.n_bins()), level),
            96.0,
        )
        .unwrap()
    }

    #[test]
    fn violating_bin_is_pulled_onto_the_ceiling() {
        let spec = test_spec(1, 400);
        let mut bins = spec.bins().clone();
        bins[[0, 5]] = Complex64::new(3.0, 4.0);
        let spec = spec.with_bins(bins).unwrap();
        let t = uniform_thresholds(&spec, 1.0);
        let out = equalize(&spec, &t, EqualizeMode::ViolatingOnly).unwrap();
        let z = out.bins()[[0, 5]];
        assert!((z.re - 0.6).abs() < 1e-12);
        assert!((z.im - 0.8).abs() < 1e-12);
    }

    #[test]
    fn compliant_bin_passes_untouched_in_violating_mode() {
        let spec = test_spec(2, 400);
        let mut bins = spec.bins().clone();
        bins[[1, 7]] = Complex64::new(0.3, 0.4); // norm 0.5 < 1.0
        let spec = spec.with_bins(bins).unwrap();
        let t = uniform_thresholds(&spec, 1.0);
        let out = equalize(&spec, &t, EqualizeMode::ViolatingOnly).unwrap();
        assert_eq!(out.bins()[[1, 7]], Complex64::new(0.3, 0.4));
    }

    #[test]
    fn all_bins_mode_amplifies_quiet_bins_to_the_ceiling() {
        let spec = test_spec(3, 400);
        let mut bins = spec.bins().clone();
        bins[[1, 7]] = Complex64::new(0.3, 0.4);
        bins[[1, 8]] = Complex64::new(0.0, 0.0);
        let spec = spec.with_bins(bins).unwrap();
        let t = uniform_thresholds(&spec, 1.0);
        let out = equalize(&spec, &t, EqualizeMode::AllBins).unwrap();
        let z = out.bins()[[1, 7]];
        assert!((z.re - 0.6).abs() < 1e-12);
        assert!((z.im - 0.8).abs() < 1e-12);
        // Zero bins have no phase to preserve and must stay zero.
        assert_eq!(out.bins()[[1, 8]], Complex64::new(0.0, 0.0));
        for (z, &m) in out.bins().iter().zip(t.levels().iter()) {
            let norm = z.norm();
            assert!(norm == 0.0 || (norm - m).abs() <= 1e-9);
        }
    }

    #[test]
    fn violating_mode_is_idempotent() {
        let spec = test_spec(4, 600);
        let t = uniform_thresholds(&spec, 0.2);
        let once = equalize(&spec, &t, EqualizeMode::ViolatingOnly).unwrap();
        let twice = equalize(&once, &t, EqualizeMode::ViolatingOnly).unwrap();
        for (a, b) in once.bins().iter().zip(twice.bins().iter()) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn equalize_rejects_mismatched_shapes() {
        let spec = test_spec(5, 400);
        let t = MaskingThresholds::from_levels(Array2::from_elem((2, 3), 1.0), 96.0).unwrap();
        assert!(matches!(
            equalize(&spec, &t, EqualizeMode::ViolatingOnly),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn thresholds_from_levels_rejects_non_positive_entries() {
        assert!(MaskingThresholds::from_levels(Array2::from_elem((2, 3), 0.0), 96.0).is_err());
        assert!(
            MaskingThresholds::from_levels(Array2::from_elem((2, 3), f64::NAN), 96.0).is_err()
        );
        assert!(MaskingThresholds::from_levels(Array2::from_elem((2, 3), 0.5), 96.0).is_ok());
    }

    #[test]
    fn hard_clip_clamps_and_is_idempotent() {
        let buf = AudioBuffer::new(vec![0.5, -0.5, 0.01, -0.002, 0.0], 16_000).unwrap();
        let out = hard_clip(&buf, 0.02).unwrap();
        assert_eq!(out.samples(), &[0.02, -0.02, 0.01, -0.002, 0.0]);
        let again = hard_clip(&out, 0.02).unwrap();
        assert_eq!(out.samples(), again.samples());
        assert!(hard_clip(&buf, 0.0).is_err());
        assert!(hard_clip(&buf, -1.0).is_err());
    }

    #[test]
    fn pure_tone_has_negligible_harmonic_distortion() {
        let tone = synth_tone(500.0, 0.5, 1.0, 16_000).unwrap();
        let hd = harmonic_distortion(&tone, 500.0).unwrap();
        assert!(hd <= -80.0, "pure tone hd = {hd}");
    }

    #[test]
    fn clipped_tone_has_strong_harmonics() {
        let tone = synth_tone(500.0, 0.5, 1.0, 16_000).unwrap();
        let clipped = hard_clip(&tone, 0.5).unwrap();
        let hd = harmonic_distortion(&clipped, 500.0).unwrap();
        assert!(hd >= -30.0, "clipped tone hd = {hd}");
        assert!(hd < 0.0, "harmonics should stay below the fundamental");
    }

    #[test]
    fn distortion_matches_naive_dft_oracle() {
        // Oracle: direct per-bin DFT sums, no FFT machinery shared with the
        // implementation.
        let tone = synth_tone(500.0, 0.25, 0.9, 16_000).unwrap();
        let clipped = hard_clip(&tone, 0.4).unwrap();
        let n = clipped.len();
        let dft_power = |bin: usize| -> f64 {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &s) in clipped.samples().iter().enumerate() {
                let ang = -std::f64::consts::TAU * bin as f64 * i as f64 / n as f64;
                re += s * ang.cos();
                im += s * ang.sin();
            }
            re * re + im * im
        };
        let fb = (500.0 * n as f64 / 16_000.0).round() as usize;
        let band = |c: usize| dft_power(c - 1) + dft_power(c) + dft_power(c + 1);
        let expected = 10.0 * ((2..=5).map(|h| band(h * fb)).sum::<f64>() / band(fb)).log10();
        let got = harmonic_distortion(&clipped, 500.0).unwrap();
        assert!(
            (got - expected).abs() < 1e-9,
            "fft {got} vs dft oracle {expected}"
        );
    }

    #[test]
    fn distortion_sentinels_and_errors() {
        let zero = AudioBuffer::new(vec![0.0; 4000], 16_000).unwrap();
        assert_eq!(harmonic_distortion(&zero, 500.0).unwrap(), f64::NEG_INFINITY);
        let tone = synth_tone(500.0, 0.25, 0.5, 16_000).unwrap();
        assert!(harmonic_distortion(&tone, 1600.0).is_err()); // 5*1600 = Nyquist
        assert!(harmonic_distortion(&tone, -5.0).is_err());
        assert!(harmonic_distortion(&tone, 0.0).is_err());
        let short = AudioBuffer::new(vec![0.1; 100], 16_000).unwrap();
        // 0.5 Hz over 100 samples rounds to bin 0: unresolvable.
        assert!(harmonic_distortion(&short, 0.5).is_err());
        let empty = AudioBuffer::new(vec![], 16_000).unwrap();
        assert!(matches!(
            harmonic_distortion(&empty, 500.0),
            Err(Error::EmptyBuffer)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn equalize_respects_bound_and_phase(
            seed in 0u64..10_000,
            scale in 0.01f64..50.0,
            level in 0.001f64..10.0,
            all_bins in proptest::bool::ANY,
        ) {
            let spec = test_spec(seed, 500);
            let spec = spec.with_bins(spec.bins().mapv(|z| z * scale)).unwrap();
            // Random per-bin ceilings around `level`.
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(77));
            let levels = Array2::from_shape_fn(
                (spec.n_frames(), spec.n_bins()),
                |_| level * (0.1 + rng.random::<f64>()),
            );
            let t = MaskingThresholds::from_levels(levels, 96.0).unwrap();
            let mode = if all_bins { EqualizeMode::AllBins } else { EqualizeMode::ViolatingOnly };
            let out = equalize(&spec, &t, mode).unwrap();
            for ((zin, zout), &m) in spec
                .bins()
                .iter()
                .zip(out.bins().iter())
                .zip(t.levels().iter())
            {
                prop_assert!(zout.norm() <= m + 1e-9);
                if zout.norm() > 0.0 && zin.norm() > 0.0 {
                    let mut dphi = (zin.arg() - zout.arg()).abs();
                    if dphi > std::f64::consts::PI {
                        dphi = std::f64::consts::TAU - dphi;
                    }
                    prop_assert!(dphi <= 1e-6, "phase moved by {}", dphi);
                }
            }
        }

        #[test]
        fn hard_clip_never_exceeds_beta(
            seed in 0u64..10_000,
            beta in 0.0001f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..300).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            let buf = AudioBuffer::new(samples, 16_000).unwrap();
            let out = hard_clip(&buf, beta).unwrap();
            for (&a, &b) in buf.samples().iter().zip(out.samples()) {
                prop_assert!(b.abs() <= beta);
                if a.abs() <= beta {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
