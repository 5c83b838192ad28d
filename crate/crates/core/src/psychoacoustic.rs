//! Frequency-masking model: Bark scale, absolute threshold of hearing,
//! tonal masker detection, and spread masking thresholds.
//!
//! The pipeline mirrors classic perceptual-audio analysis: per-frame
//! magnitudes are normalized into an SPL-like dB scale (frame-set maximum
//! pinned at 96 dB), tonal maskers are picked as prominent local maxima of
//! the PSD, each masker spreads across the Bark axis with the familiar
//! two-sided (+25 / -10 dB per Bark) kernel, and the global threshold per bin
//! is the power sum of the hearing threshold and every masker contribution.
//! All maskers are treated as tonal.

use std::io::Write;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectral::StftConfig;

/// Level (dB SPL) assigned to the frame-set maximum magnitude.
pub const FULL_SCALE_DB_SPL: f64 = 96.0;

/// Maskers further than this many Bark from a bin contribute nothing.
const SPREAD_REACH_BARK: f64 = 10.0;

/// Minimum prominence of a tonal peak over its neighborhood, in dB.
const TONAL_PROMINENCE_DB: f64 = 7.0;

/// Two maskers closer than this (in Bark) are decimated to the louder one.
const DECIMATION_SPACING_BARK: f64 = 0.5;

/// Critical-band rate of a frequency, clamped to [0, 25] Bark.
pub fn hz_to_bark(hz: f64) -> f64 {
    (26.81 * hz / (1960.0 + hz) - 0.53).clamp(0.0, 25.0)
}

/// Absolute threshold of hearing in dB SPL.
///
/// Below (and at) 20 Hz the threshold is pinned to the 96 dB ceiling so DC
/// and infrasound bins never constrain a perturbation more than full scale.
pub fn ath_db(hz: f64) -> f64 {
    if hz <= 20.0 {
        return FULL_SCALE_DB_SPL;
    }
    let khz = hz / 1000.0;
    3.64 * khz.powf(-0.8) - 6.5 * (-0.6 * (khz - 3.3) * (khz - 3.3)).exp()
        + 1e-3 * khz.powi(4)
}

/// A detected tonal masker in one analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TonalMasker {
    /// Spectrum bin of the peak.
    pub bin: usize,
    /// Center frequency of the peak bin, Hz.
    pub freq_hz: f64,
    /// Critical-band rate of the peak, Bark.
    pub bark: f64,
    /// Masker level in dB SPL: power sum of the peak and its two neighbors.
    pub level_db: f64,
}

/// Width of the prominence neighborhood (in bins) for a peak at `freq_hz`.
fn prominence_radius(freq_hz: f64) -> usize {
    if freq_hz < 2500.0 {
        2
    } else if freq_hz <= 5500.0 {
        3
    } else {
        6
    }
}

fn power_sum_db(levels: &[f64]) -> f64 {
    10.0 * levels
        .iter()
        .map(|&l| 10f64.powf(l / 10.0))
        .sum::<f64>()
        .log10()
}

/// Finds tonal maskers in one frame's PSD (dB SPL per bin).
///
/// A masker is a strict local maximum that exceeds every bin within its
/// frequency-dependent neighborhood (±2 bins below 2.5 kHz, ±3 up to
/// 5.5 kHz, ±6 above — immediate ±1 neighbors excluded, they belong to the
/// peak's own lobe) by at least 7 dB. The masker level is the power sum of
/// the peak and its two neighbors; maskers below the hearing threshold are
/// discarded, and of two survivors within 0.5 Bark only the louder is kept.
///
/// The slice length must be `frame_len/2 + 1` for the transform that
/// produced it; bin frequencies are derived from that relation.
pub fn find_tonal_maskers(psd_db: &[f64], sample_rate: u32) -> Vec<TonalMasker> {
    let n = psd_db.len();
    if n < 3 || sample_rate == 0 {
        return Vec::new();
    }
    let frame_len = 2 * (n - 1);
    let bin_hz = sample_rate as f64 / frame_len as f64;

    let mut candidates: Vec<TonalMasker> = Vec::new();
    for b in 1..n - 1 {
        if !(psd_db[b] > psd_db[b - 1] && psd_db[b] > psd_db[b + 1]) {
            continue;
        }
        let freq_hz = b as f64 * bin_hz;
        let radius = prominence_radius(freq_hz);
        let mut prominent = true;
        for d in 2..=radius {
            if b >= d && psd_db[b] < psd_db[b - d] + TONAL_PROMINENCE_DB {
                prominent = false;
                break;
            }
            if b + d < n && psd_db[b] < psd_db[b + d] + TONAL_PROMINENCE_DB {
                prominent = false;
                break;
            }
        }
        if !prominent {
            continue;
        }
        let level_db = power_sum_db(&[psd_db[b - 1], psd_db[b], psd_db[b + 1]]);
        if level_db < ath_db(freq_hz) {
            continue;
        }
        candidates.push(TonalMasker {
            bin: b,
            freq_hz,
            bark: hz_to_bark(freq_hz),
            level_db,
        });
    }

    // 0.5-Bark decimation, loudest first (ties broken toward the lower bin).
    candidates.sort_by(|a, b| {
        b.level_db
            .total_cmp(&a.level_db)
            .then(a.bin.cmp(&b.bin))
    });
    let mut kept: Vec<TonalMasker> = Vec::new();
    for c in candidates {
        if kept
            .iter()
            .all(|k| (k.bark - c.bark).abs() >= DECIMATION_SPACING_BARK)
        {
            kept.push(c);
        }
    }
    kept.sort_by_key(|m| m.bin);
    kept
}

/// Two-sided spreading kernel in dB as a function of Bark distance.
///
/// Peaks just below 0 dB at the masker (`dz = 0` evaluates to about
/// -0.0014 dB) and falls off at roughly +25 dB/Bark below and -10 dB/Bark
/// above the masker.
pub fn spreading_shape_db(dz_bark: f64) -> f64 {
    let u = dz_bark + 0.474;
    15.81 + 7.5 * u - 17.5 * (1.0 + u * u).sqrt()
}

/// Additive masking contribution (dB SPL) of `masker` at `target_bark`.
///
/// Combines the masker level, the spreading kernel at the Bark distance, and
/// the tonal-masking offset `6.025 + 0.275 * masker.bark`. Beyond 10 Bark
/// the contribution is -inf (exactly nothing after the power sum).
pub fn spread(masker: &TonalMasker, target_bark: f64) -> f64 {
    let dz = target_bark - masker.bark;
    if dz.abs() > SPREAD_REACH_BARK {
        return f64::NEG_INFINITY;
    }
    masker.level_db + spreading_shape_db(dz) - (6.025 + 0.275 * masker.bark)
}

/// Per-bin masking ceilings for a whole spectrogram.
///
/// `levels` are linear magnitude ceilings aligned bin-for-bin with the
/// magnitudes they were computed from; `db_floor` is the offset that maps
/// `20*log10(linear magnitude)` into the SPL-like dB scale used internally
/// (`db = 20*log10(level) + db_floor`).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingThresholds {
    levels: Array2<f64>,
    db_floor: f64,
}

impl MaskingThresholds {
    /// Builds thresholds from precomputed linear ceilings (e.g. imported
    /// from another tool). Every level must be strictly positive and finite.
    pub fn from_levels(levels: Array2<f64>, db_floor: f64) -> Result<Self> {
        if !db_floor.is_finite() {
            return Err(Error::invalid_param("db_floor", "must be finite"));
        }
        if levels.is_empty() {
            return Err(Error::invalid_param("levels", "must be non-empty"));
        }
        if levels.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::invalid_param(
                "levels",
                "every threshold must be strictly positive and finite",
            ));
        }
        Ok(MaskingThresholds { levels, db_floor })
    }

    pub fn levels(&self) -> &Array2<f64> {
        &self.levels
    }

    pub fn db_floor(&self) -> f64 {
        self.db_floor
    }

    pub fn n_frames(&self) -> usize {
        self.levels.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.levels.ncols()
    }

    /// Threshold at (frame, bin) in the internal dB SPL scale.
    pub fn threshold_db(&self, frame: usize, bin: usize) -> f64 {
        20.0 * self.levels[[frame, bin]].log10() + self.db_floor
    }
}

/// Computes masking thresholds from STFT magnitudes.
///
/// Magnitudes are mapped to an SPL-like dB scale with the frame-set maximum
/// pinned at 96 dB (the offset is reported as `db_floor`; an all-zero input
/// uses offset 0). Each frame's tonal maskers are detected and spread across
/// the Bark axis; the threshold per bin is the power sum of the hearing
/// threshold and all masker contributions, converted back to a linear
/// magnitude ceiling. Frames without maskers (silence) get exactly the
/// hearing-threshold curve.
pub fn generate_thresholds(
    mag: &Array2<f64>,
    sample_rate: u32,
    config: &StftConfig,
) -> Result<MaskingThresholds> {
    if sample_rate == 0 {
        return Err(Error::invalid_param("sample_rate", "must be positive"));
    }
    if mag.ncols() != config.n_bins() || mag.nrows() == 0 {
        return Err(Error::ShapeMismatch {
            context: "magnitude matrix",
            expected: format!("(>=1, {})", config.n_bins()),
            actual: format!("{:?}", mag.dim()),
        });
    }
    if let Some((idx, _)) = mag
        .iter()
        .enumerate()
        .find(|(_, &v)| !v.is_finite() || v < 0.0)
    {
        return Err(Error::invalid_param(
            "mag",
            format!("magnitude at flat index {idx} is negative or non-finite"),
        ));
    }

    let n = mag.ncols();
    let frame_len = config.frame_len() as f64;
    let freqs: Vec<f64> = (0..n)
        .map(|q| q as f64 * sample_rate as f64 / frame_len)
        .collect();
    let barks: Vec<f64> = freqs.iter().map(|&f| hz_to_bark(f)).collect();
    let ath_power: Vec<f64> = freqs
        .iter()
        .map(|&f| 10f64.powf(ath_db(f) / 10.0))
        .collect();

    let max_mag = mag.iter().cloned().fold(0.0f64, f64::max);
    let db_floor = if max_mag > 0.0 {
        FULL_SCALE_DB_SPL - 20.0 * max_mag.log10()
    } else {
        0.0
    };
    let to_linear = 10f64.powf(-db_floor / 20.0);

    let mut levels = Array2::zeros((mag.nrows(), n));
    let mut psd = vec![0.0f64; n];
    for i in 0..mag.nrows() {
        for j in 0..n {
            let v = mag[[i, j]];
            psd[j] = if v > 0.0 {
                20.0 * v.log10() + db_floor
            } else {
                f64::NEG_INFINITY
            };
        }
        let maskers = find_tonal_maskers(&psd, sample_rate);
        for j in 0..n {
            let mut acc = ath_power[j];
            for mk in &maskers {
                let c = spread(mk, barks[j]);
                if c > f64::NEG_INFINITY {
                    acc += 10f64.powf(c / 10.0);
                }
            }
            // 10^(t_db/20) with t_db = 10*log10(acc) is just sqrt(acc).
            levels[[i, j]] = acc.sqrt() * to_linear;
        }
    }
    Ok(MaskingThresholds { levels, db_floor })
}

/// Dumps thresholds as CSV rows `frame,bin,freq_hz,threshold_db`, row-major
/// by frame. Bins are assumed to span DC through Nyquist, so the analysis
/// frame length is recovered as `2 * (n_bins - 1)`.
pub fn write_thresholds_csv<W: Write>(
    thresholds: &MaskingThresholds,
    sample_rate: u32,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "frame,bin,freq_hz,threshold_db")?;
    let bin_hz = sample_rate as f64 / (2 * (thresholds.n_bins() - 1)).max(1) as f64;
    for i in 0..thresholds.n_frames() {
        for q in 0..thresholds.n_bins() {
            writeln!(
                out,
                "{},{},{},{}",
                i,
                q,
                q as f64 * bin_hz,
                thresholds.threshold_db(i, q)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::synth_tone;
    use crate::spectral::{stft, Window};

    // ===== bark scale =====

    #[test]
    fn bark_matches_pinned_values() {
        assert_eq!(hz_to_bark(0.0), 0.0); // raw value -0.53 clamps to 0
        assert!((hz_to_bark(1960.0) - 12.875).abs() < 1e-12);
        assert_eq!(hz_to_bark(1e9), 25.0); // upper clamp
    }

    #[test]
    fn bark_is_monotone_over_the_audio_band() {
        let mut prev = hz_to_bark(0.0);
        for f in 1..=20_000 {
            let z = hz_to_bark(f as f64);
            assert!(z >= prev, "bark decreased at {f} Hz");
            prev = z;
        }
        assert!(hz_to_bark(5000.0) > hz_to_bark(200.0));
    }

    // ===== hearing threshold =====

    #[test]
    fn ath_matches_pinned_values() {
        // Frozen from the three-term threshold formula at 1 kHz.
        assert!((ath_db(1000.0) - 3.36907).abs() < 1e-4);
        assert_eq!(ath_db(20.0), 96.0);
        assert_eq!(ath_db(5.0), 96.0);
        assert_eq!(ath_db(0.0), 96.0);
    }

    #[test]
    fn ath_dips_in_the_midrange() {
        let dip = ath_db(3300.0);
        assert!(dip < ath_db(100.0));
        assert!(dip < ath_db(8000.0));
        assert!(dip < 0.0); // the classic sub-0 dB sensitivity pocket
    }

    // ===== tonal maskers =====

    #[test]
    fn flat_psd_has_no_maskers() {
        let psd = vec![70.0; 257];
        assert!(find_tonal_maskers(&psd, 16_000).is_empty());
    }

    #[test]
    fn single_spike_yields_one_masker_with_power_summed_level() {
        let mut psd = vec![70.0; 257];
        psd[32] = 90.0; // 1 kHz for frame_len 512 at 16 kHz
        let maskers = find_tonal_maskers(&psd, 16_000);
        assert_eq!(maskers.len(), 1);
        let m = &maskers[0];
        assert_eq!(m.bin, 32);
        assert!((m.freq_hz - 1000.0).abs() < 1e-9);
        assert!((m.bark - hz_to_bark(1000.0)).abs() < 1e-12);
        let expected =
            10.0 * (10f64.powf(7.0) + 10f64.powf(9.0) + 10f64.powf(7.0)).log10();
        assert!((m.level_db - expected).abs() < 1e-9);
    }

    #[test]
    fn spike_below_prominence_is_rejected() {
        let mut psd = vec![70.0; 257];
        psd[32] = 76.0; // strict local max but under the 7 dB prominence bar
        assert!(find_tonal_maskers(&psd, 16_000).is_empty());
    }

    #[test]
    fn masker_below_hearing_threshold_is_discarded() {
        let mut psd = vec![-40.0; 257];
        psd[100] = -10.0; // 3125 Hz; hearing threshold there is about -4 dB
        assert!(ath_db(3125.0) > -10.0 + 0.086 - 5.0); // sanity on the setup
        assert!(find_tonal_maskers(&psd, 16_000).is_empty());
    }

    #[test]
    fn close_pair_is_decimated_to_the_louder_masker() {
        // Bins 224 and 238 of a 512-point frame at 16 kHz are 7000 and
        // 7437.5 Hz: 0.27 Bark apart but 14 bins apart, so both pass the
        // prominence test and only the 0.5-Bark rule can drop one.
        let mut psd = vec![20.0; 257];
        psd[224] = 70.0;
        psd[238] = 60.0;
        let dz = (hz_to_bark(7437.5) - hz_to_bark(7000.0)).abs();
        assert!(dz < 0.5 && dz > 0.2, "test geometry: dz = {dz}");
        let maskers = find_tonal_maskers(&psd, 16_000);
        assert_eq!(maskers.len(), 1);
        assert_eq!(maskers[0].bin, 224);
    }

    #[test]
    fn well_separated_pair_is_kept() {
        let mut psd = vec![20.0; 257];
        psd[32] = 70.0; // 1000 Hz
        psd[64] = 60.0; // 2000 Hz, ~4.5 Bark away
        let maskers = find_tonal_maskers(&psd, 16_000);
        assert_eq!(maskers.len(), 2);
        assert_eq!((maskers[0].bin, maskers[1].bin), (32, 64));
    }

    #[test]
    fn edge_bins_are_never_maskers() {
        let mut psd = vec![10.0; 257];
        psd[0] = 90.0;
        psd[256] = 90.0;
        assert!(find_tonal_maskers(&psd, 16_000).is_empty());
    }

    // ===== spreading =====

    #[test]
    fn spreading_peaks_just_below_zero_at_the_masker() {
        // 15.81 + 7.5*0.474 - 17.5*sqrt(1 + 0.474^2), evaluated externally.
        let s0 = spreading_shape_db(0.0);
        assert!((s0 - (-0.0013890542351724)).abs() < 1e-12, "s0 = {s0}");
        assert!(s0 < 0.0);
    }

    #[test]
    fn spreading_decays_on_both_sides() {
        let s0 = spreading_shape_db(0.0);
        assert!(spreading_shape_db(1.0) < s0);
        assert!(spreading_shape_db(-1.0) < s0);
        // Strictly decreasing away from the peak on both slopes.
        let mut prev = s0;
        for i in 1..=20 {
            let s = spreading_shape_db(i as f64 * 0.5);
            assert!(s < prev);
            prev = s;
        }
        let mut prev = spreading_shape_db(-0.5);
        for i in 2..=20 {
            let s = spreading_shape_db(-(i as f64) * 0.5);
            assert!(s < prev);
            prev = s;
        }
        // Asymptotic slopes: -10 dB/Bark above, +25 dB/Bark below. The
        // hyperbola flattens slowly (correction ~8.75/dz), so probe far out.
        let upper = spreading_shape_db(20.0) - spreading_shape_db(19.0);
        let lower = spreading_shape_db(-19.0) - spreading_shape_db(-20.0);
        assert!((upper - (-10.0)).abs() < 0.05, "upper slope {upper}");
        assert!((lower - 25.0).abs() < 0.05, "lower slope {lower}");
    }

    #[test]
    fn spread_applies_level_distance_and_offset() {
        let masker = TonalMasker {
            bin: 32,
            freq_hz: 1000.0,
            bark: hz_to_bark(1000.0),
            level_db: 80.0,
        };
        let at_peak = spread(&masker, masker.bark);
        let expected = 80.0 + spreading_shape_db(0.0) - (6.025 + 0.275 * masker.bark);
        assert!((at_peak - expected).abs() < 1e-12);
        assert_eq!(spread(&masker, masker.bark + 10.5), f64::NEG_INFINITY);
        assert_eq!(spread(&masker, masker.bark - 10.5), f64::NEG_INFINITY);
        assert!(spread(&masker, masker.bark + 9.9).is_finite());
    }

    // ===== global thresholds =====

    fn rect_config(frame_len: usize) -> StftConfig {
        StftConfig::new(frame_len, frame_len, Window::Rectangular).unwrap()
    }

    #[test]
    fn zero_input_degenerates_to_the_hearing_threshold() {
        let config = rect_config(512);
        let mag = Array2::zeros((3, config.n_bins()));
        let t = generate_thresholds(&mag, 16_000, &config).unwrap();
        assert_eq!(t.db_floor(), 0.0);
        for i in 0..3 {
            for j in 0..config.n_bins() {
                let f = j as f64 * 16_000.0 / 512.0;
                assert!(
                    (t.threshold_db(i, j) - ath_db(f)).abs() < 1e-9,
                    "frame {i} bin {j}"
                );
                assert!((t.levels()[[i, j]] - 10f64.powf(ath_db(f) / 20.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_masker_scene_matches_hand_rolled_evaluation() {
        // One frame, one nonzero bin. The expected curve is recomputed here
        // from first principles: normalize, detect the lone masker, spread
        // it, power-sum with the hearing threshold.
        let config = rect_config(512);
        let n = config.n_bins();
        let mut mag = Array2::zeros((1, n));
        mag[[0, 32]] = 0.25;
        let t = generate_thresholds(&mag, 16_000, &config).unwrap();

        let expected_floor = 96.0 - 20.0 * 0.25f64.log10();
        assert!((t.db_floor() - expected_floor).abs() < 1e-12);

        let masker_bark = hz_to_bark(1000.0);
        for j in 0..n {
            let f = j as f64 * 16_000.0 / 512.0;
            let z = hz_to_bark(f);
            let dz = z - masker_bark;
            let mut acc = 10f64.powf(ath_db(f) / 10.0);
            if dz.abs() <= 10.0 {
                let c = 96.0 + spreading_shape_db(dz) - (6.025 + 0.275 * masker_bark);
                acc += 10f64.powf(c / 10.0);
            }
            let expected_db = 10.0 * acc.log10();
            assert!(
                (t.threshold_db(0, j) - expected_db).abs() < 1e-9,
                "bin {j}: {} vs {expected_db}",
                t.threshold_db(0, j)
            );
        }
    }

    #[test]
    fn tone_threshold_peaks_at_the_tone_and_decays() {
        let config = StftConfig::default();
        let tone = synth_tone(1000.0, 0.256, 1.0, 16_000).unwrap();
        let spec = stft(&tone, &config).unwrap();
        let t = generate_thresholds(&spec.magnitude(), 16_000, &config).unwrap();
        let tone_bin = (1000.0_f64 / (16_000.0 / 2048.0)).round() as usize;
        // Pick an interior frame.
        let frame = 2;
        let mut best_bin = 0;
        let mut best = f64::MIN;
        for j in 1..t.n_bins() - 1 {
            // Skip the low-frequency region where the 96 dB ceiling rules.
            if j < 8 {
                continue;
            }
            if t.threshold_db(frame, j) > best {
                best = t.threshold_db(frame, j);
                best_bin = j;
            }
        }
        assert!(
            best_bin.abs_diff(tone_bin) <= 1,
            "threshold peak at bin {best_bin}, tone at {tone_bin}"
        );
        // Strict decay moving away from the peak on both sides.
        for &offset in &[8usize, 16, 24] {
            assert!(
                t.threshold_db(frame, tone_bin + offset)
                    > t.threshold_db(frame, tone_bin + offset + 8)
            );
            assert!(
                t.threshold_db(frame, tone_bin - offset)
                    > t.threshold_db(frame, tone_bin - offset - 8)
            );
        }
    }

    #[test]
    fn silent_frame_in_a_loud_set_still_gets_the_hearing_curve() {
        let config = rect_config(512);
        let n = config.n_bins();
        let mut mag = Array2::zeros((2, n));
        mag[[1, 32]] = 1.0; // frame 0 stays silent
        let t = generate_thresholds(&mag, 16_000, &config).unwrap();
        for j in 0..n {
            let f = j as f64 * 16_000.0 / 512.0;
            assert!((t.threshold_db(0, j) - ath_db(f)).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_magnitudes_doubles_linear_thresholds() {
        let config = StftConfig::new(256, 64, Window::Hann).unwrap();
        let clip = crate::audio::build_keyword_dataset(2, 1, 5).unwrap().clips[0].clone();
        let spec = stft(&clip, &config).unwrap();
        let mag = spec.magnitude();
        let t1 = generate_thresholds(&mag, 16_000, &config).unwrap();
        let t2 = generate_thresholds(&mag.mapv(|v| v * 2.0), 16_000, &config).unwrap();
        assert!((t2.db_floor() - (t1.db_floor() - 20.0 * 2.0f64.log10())).abs() < 1e-9);
        for (a, b) in t1.levels().iter().zip(t2.levels().iter()) {
            assert!(b >= a, "threshold dropped when the signal got louder");
            assert!((b - 2.0 * a).abs() <= 1e-9 * b.max(1e-12));
        }
    }

    #[test]
    fn thresholds_never_fall_below_the_hearing_floor() {
        let config = StftConfig::new(256, 64, Window::Hann).unwrap();
        let clip = crate::audio::build_keyword_dataset(3, 2, 8).unwrap().clips[4].clone();
        let spec = stft(&clip, &config).unwrap();
        let t = generate_thresholds(&spec.magnitude(), 16_000, &config).unwrap();
        for i in 0..t.n_frames() {
            for j in 0..t.n_bins() {
                let f = j as f64 * 16_000.0 / 256.0;
                let floor_linear = 10f64.powf((ath_db(f) - t.db_floor()) / 20.0);
                assert!(t.levels()[[i, j]] >= floor_linear * (1.0 - 1e-12));
                assert!(t.levels()[[i, j]] > 0.0);
            }
        }
    }

    #[test]
    fn thresholds_reject_bad_inputs() {
        let config = rect_config(512);
        let wrong = Array2::zeros((2, 100));
        assert!(matches!(
            generate_thresholds(&wrong, 16_000, &config),
            Err(Error::ShapeMismatch { .. })
        ));
        let mut neg = Array2::zeros((1, config.n_bins()));
        neg[[0, 3]] = -1.0;
        assert!(generate_thresholds(&neg, 16_000, &config).is_err());
        let mut nan = Array2::zeros((1, config.n_bins()));
        nan[[0, 3]] = f64::NAN;
        assert!(generate_thresholds(&nan, 16_000, &config).is_err());
    }

    // ===== csv dump =====

    #[test]
    fn csv_dump_lists_every_bin_with_frequency_and_level() {
        let config = StftConfig::new(256, 64, Window::Hann).unwrap();
        let mag = Array2::zeros((2, config.n_bins()));
        let t = generate_thresholds(&mag, 16_000, &config).unwrap();
        let mut buf = Vec::new();
        write_thresholds_csv(&t, 16_000, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "frame,bin,freq_hz,threshold_db");
        assert_eq!(lines.len(), 1 + 2 * config.n_bins());
        // Silence thresholds dump straight back as the hearing curve.
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 4);
            let frame: usize = fields[0].parse().unwrap();
            let bin: usize = fields[1].parse().unwrap();
            let freq: f64 = fields[2].parse().unwrap();
            let db: f64 = fields[3].parse().unwrap();
            assert!(frame < 2 && bin < config.n_bins());
            assert!((freq - bin as f64 * 16_000.0 / 256.0).abs() < 1e-9);
            assert!((db - ath_db(freq)).abs() < 1e-6);
        }
    }
}
