//! Waveform quality metrics: peak detection, interbeat intervals, heart
//! rate, AVNN/SDNN variability, sample-aligned IBI padding errors, HR
//! error statistics, and Bland-Altman agreement summaries.

use crate::signal::{dominant_frequency_of_signal, SampledSignal};
use crate::{Error, Result};

/// Physiologic gate on RR intervals, in milliseconds (33 to 240 bpm).
/// Intervals outside it are excluded from every NN statistic.
pub const RR_GATE_MS: (f64, f64) = (250.0, 2000.0);

/// Tuning knobs for the peak detector.
#[derive(Debug, Clone, Copy)]
pub struct PeakOptions {
    /// Band searched for the dominant frequency that seeds the minimum
    /// peak separation.
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    /// Minimum separation as a fraction of the dominant period.
    pub separation_factor: f64,
    /// Required prominence as a fraction of the signal range.
    pub prominence_factor: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            band_lo_hz: 0.7,
            band_hi_hz: 4.0,
            separation_factor: 0.5,
            prominence_factor: 0.2,
        }
    }
}

/// Beat peak times plus successive RR intervals in milliseconds.
///
/// `rr_ms` keeps one entry per successive peak pair; the parallel `valid`
/// mask marks intervals inside the physiologic gate. NN statistics use
/// only gated-in intervals.
#[derive(Debug, Clone)]
pub struct IbiSequence {
    pub sample_rate_hz: f64,
    pub peak_times_sec: Vec<f64>,
    rr_ms: Vec<f64>,
    valid: Vec<bool>,
}

impl IbiSequence {
    /// Build directly from peak times; intervals derive from successive
    /// differences.
    pub fn from_peak_times(peak_times_sec: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if peak_times_sec.len() < 2 {
            return Err(Error::TooFewIntervals { need: 2, have: peak_times_sec.len() });
        }
        if peak_times_sec.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSignal("peak times must strictly increase".into()));
        }
        let rr_ms: Vec<f64> = peak_times_sec
            .windows(2)
            .map(|w| (w[1] - w[0]) * 1000.0)
            .collect();
        let valid = rr_ms
            .iter()
            .map(|&rr| (RR_GATE_MS.0..=RR_GATE_MS.1).contains(&rr))
            .collect();
        Ok(Self { sample_rate_hz, peak_times_sec, rr_ms, valid })
    }

    /// Build from explicit spans; used by tests that need intervals
    /// decoupled from the peak grid.
    pub fn from_parts(
        peak_times_sec: Vec<f64>,
        rr_ms: Vec<f64>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        if rr_ms.len() + 1 != peak_times_sec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} intervals need {} peaks, got {}",
                rr_ms.len(),
                rr_ms.len() + 1,
                peak_times_sec.len()
            )));
        }
        let valid = rr_ms
            .iter()
            .map(|&rr| (RR_GATE_MS.0..=RR_GATE_MS.1).contains(&rr))
            .collect();
        Ok(Self { sample_rate_hz, peak_times_sec, rr_ms, valid })
    }

    /// All successive intervals, gated or not.
    pub fn rr_ms(&self) -> &[f64] {
        &self.rr_ms
    }

    /// Gated-in (normal-to-normal) intervals.
    pub fn nn_ms(&self) -> Vec<f64> {
        self.rr_ms
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .map(|(rr, _)| *rr)
            .collect()
    }

    /// Intervals dropped by the physiologic gate, as `(index, rr_ms)`.
    pub fn gated_out(&self) -> Vec<(usize, f64)> {
        self.rr_ms
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, v))| !**v)
            .map(|(i, (rr, _))| (i, *rr))
            .collect()
    }
}

/// Heart-rate error statistics over one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct HrErrorSuite {
    pub mae_bpm: f64,
    pub rmse_bpm: f64,
    pub mer_percent: f64,
    /// `None` when either vector is constant (or too short), where the
    /// correlation is undefined.
    pub pearson_r: Option<f64>,
}

/// Bland-Altman agreement summary.
#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltman {
    pub bias: f64,
    pub loa_lower: f64,
    pub loa_upper: f64,
}

/// Local maxima with dominant-frequency-seeded minimum separation and
/// prominence gating. Returns strictly increasing sample indices.
pub fn detect_peaks(pulse: &SampledSignal, opts: &PeakOptions) -> Result<Vec<usize>> {
    let x = pulse.values();
    let n = x.len();
    if n < 3 {
        return Err(Error::NoPeaks);
    }
    let f_dom = dominant_frequency_of_signal(pulse, opts.band_lo_hz, opts.band_hi_hz)?;
    let f_dom = f_dom.max(opts.band_lo_hz);
    let min_sep =
        ((opts.separation_factor / f_dom) * pulse.sample_rate_hz()).round().max(1.0) as usize;

    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_prominence = opts.prominence_factor * (hi - lo);

    // Candidate local maxima; plateaus collapse to their midpoint.
    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j < n - 1 && x[j + 1] == x[i] {
                j += 1;
            }
            if j < n - 1 && x[j + 1] < x[i] {
                candidates.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    // Prominence gate.
    let prominent: Vec<usize> = candidates
        .into_iter()
        .filter(|&p| prominence(x, p) >= min_prominence)
        .collect();

    // Distance gate: highest peaks win, ties to the lower index.
    let mut order: Vec<usize> = (0..prominent.len()).collect();
    order.sort_by(|&a, &b| {
        x[prominent[b]]
            .partial_cmp(&x[prominent[a]])
            .unwrap()
            .then(prominent[a].cmp(&prominent[b]))
    });
    let mut keep = vec![true; prominent.len()];
    for &k in &order {
        if !keep[k] {
            continue;
        }
        let pk = prominent[k];
        for (j, &pj) in prominent.iter().enumerate() {
            if j != k && keep[j] && pj.abs_diff(pk) < min_sep {
                keep[j] = false;
            }
        }
    }
    let peaks: Vec<usize> = prominent
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p)
        .collect();
    if peaks.is_empty() {
        return Err(Error::NoPeaks);
    }
    Ok(peaks)
}

/// Topographic prominence of the peak at index `p`.
fn prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let mut left_min = h;
    for i in (0..p).rev() {
        if x[i] > h {
            break;
        }
        left_min = left_min.min(x[i]);
    }
    let mut right_min = h;
    for &v in &x[p + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// RR intervals in milliseconds from peak sample indices.
pub fn ibi_from_peaks(peaks: &[usize], sample_rate_hz: f64) -> Result<IbiSequence> {
    if peaks.len() < 2 {
        return Err(Error::TooFewIntervals { need: 2, have: peaks.len() });
    }
    let times = peaks.iter().map(|&p| p as f64 / sample_rate_hz).collect();
    IbiSequence::from_peak_times(times, sample_rate_hz)
}

/// Average heart rate in bpm: 60 over the mean NN interval in seconds.
pub fn hr_from_ibi(ibi: &IbiSequence) -> Result<f64> {
    let nn = ibi.nn_ms();
    if nn.is_empty() {
        return Err(Error::TooFewIntervals { need: 1, have: 0 });
    }
    let mean_sec = nn.iter().sum::<f64>() / nn.len() as f64 / 1000.0;
    Ok(60.0 / mean_sec)
}

/// AVNN (mean NN interval) and SDNN (sample standard deviation of NN
/// intervals), both in milliseconds.
pub fn hrv_features(ibi: &IbiSequence) -> Result<(f64, f64)> {
    let nn = ibi.nn_ms();
    if nn.len() < 2 {
        return Err(Error::TooFewIntervals { need: 2, have: nn.len() });
    }
    let avnn = nn.iter().sum::<f64>() / nn.len() as f64;
    let sdnn = (nn.iter().map(|rr| (rr - avnn).powi(2)).sum::<f64>() / (nn.len() - 1) as f64)
        .sqrt();
    Ok((avnn, sdnn))
}

/// Expand an IBI sequence onto a sample grid of `target_len` points.
///
/// Each sample inside the i-th RR span takes the value RR_i; samples
/// before the first peak, after the last peak, or inside a gated-out span
/// take the nearest valid interval's value.
pub fn pad_ibi(ibi: &IbiSequence, target_len: usize) -> Result<Vec<f64>> {
    if target_len == 0 {
        return Err(Error::InvalidSignal("pad target length must be positive".into()));
    }
    let spans = ibi.rr_ms.len();
    if !ibi.valid.iter().any(|v| *v) {
        return Err(Error::TooFewIntervals { need: 1, have: 0 });
    }
    // Value per span, with gated-out spans borrowing the nearest valid
    // one (ties toward the earlier span).
    let span_value: Vec<f64> = (0..spans)
        .map(|j| {
            if ibi.valid[j] {
                return ibi.rr_ms[j];
            }
            let mut d = 1;
            loop {
                if j >= d && ibi.valid[j - d] {
                    return ibi.rr_ms[j - d];
                }
                if j + d < spans && ibi.valid[j + d] {
                    return ibi.rr_ms[j + d];
                }
                d += 1;
            }
        })
        .collect();

    let mut out = Vec::with_capacity(target_len);
    let mut span = 0usize;
    for i in 0..target_len {
        let t = i as f64 / ibi.sample_rate_hz;
        while span + 1 < spans && t >= ibi.peak_times_sec[span + 1] {
            span += 1;
        }
        out.push(span_value[span]);
    }
    Ok(out)
}

/// Mean absolute difference between two padded IBI sequences over one
/// window of `target_len` samples.
pub fn ibi_absolute_error(
    pred: &IbiSequence,
    reference: &IbiSequence,
    target_len: usize,
) -> Result<f64> {
    let p = pad_ibi(pred, target_len)?;
    let r = pad_ibi(reference, target_len)?;
    Ok(p.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum::<f64>() / target_len as f64)
}

/// Mean of per-window absolute IBI errors.
pub fn ibi_mean_absolute_error(per_window: &[f64]) -> f64 {
    per_window.iter().sum::<f64>() / per_window.len() as f64
}

/// MAE, RMSE, mean error rate, and Pearson correlation across paired HR
/// estimates.
pub fn hr_error_suite(pred_bpm: &[f64], ref_bpm: &[f64]) -> Result<HrErrorSuite> {
    if pred_bpm.len() != ref_bpm.len() || pred_bpm.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "HR vectors of {} and {} entries",
            pred_bpm.len(),
            ref_bpm.len()
        )));
    }
    if ref_bpm.iter().any(|r| *r == 0.0) {
        return Err(Error::DegenerateInput("zero reference HR in mean error rate".into()));
    }
    let n = pred_bpm.len() as f64;
    let mut mae = 0.0;
    let mut mse = 0.0;
    let mut mer = 0.0;
    for (p, r) in pred_bpm.iter().zip(ref_bpm) {
        let d = p - r;
        mae += d.abs();
        mse += d * d;
        mer += d.abs() / r;
    }
    Ok(HrErrorSuite {
        mae_bpm: mae / n,
        rmse_bpm: (mse / n).sqrt(),
        mer_percent: mer / n * 100.0,
        pearson_r: pearson(pred_bpm, ref_bpm),
    })
}

/// Pearson correlation, or `None` when undefined.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Bias and 1.96-sigma limits of agreement between paired estimates.
pub fn bland_altman(pred: &[f64], reference: &[f64]) -> Result<BlandAltman> {
    if pred.len() != reference.len() || pred.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "Bland-Altman needs equal-length vectors of at least 2, got {} and {}",
            pred.len(),
            reference.len()
        )));
    }
    let diffs: Vec<f64> = pred.iter().zip(reference).map(|(p, r)| p - r).collect();
    let n = diffs.len() as f64;
    let bias = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(BlandAltman { bias, loa_lower: bias - 1.96 * sd, loa_upper: bias + 1.96 * sd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SampledSignal;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine_pulse(freq: f64, rate: f64, secs: f64) -> SampledSignal {
        let n = (rate * secs) as usize;
        let v = (0..n)
            .map(|i| 0.5 + 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin())
            .collect();
        SampledSignal::new(v, rate).unwrap()
    }

    #[test]
    fn clean_sine_yields_expected_peak_train() {
        let pulse = sine_pulse(1.0, 30.0, 10.0);
        let peaks = detect_peaks(&pulse, &PeakOptions::default()).unwrap();
        assert_eq!(peaks.len(), 10, "peaks: {peaks:?}");
        for pair in peaks.windows(2) {
            let spacing = pair[1] - pair[0];
            assert!((29..=31).contains(&spacing), "spacing {spacing}");
        }
    }

    #[test]
    fn merged_bumps_collapse_to_larger_peak() {
        // Two bumps 200 ms apart, well under the ~500 ms minimum
        // separation seeded by the 1 Hz background rhythm.
        let rate = 30.0;
        let n = 300;
        let mut v: Vec<f64> = (0..n)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 1.0 * i as f64 / rate).sin())
            .collect();
        let mut bump = |v: &mut Vec<f64>, center: usize, amp: f64| {
            for (i, vi) in v.iter_mut().enumerate() {
                let d = (i as f64 - center as f64) / 2.0;
                *vi += amp * (-0.5 * d * d).exp();
            }
        };
        bump(&mut v, 150, 1.0);
        bump(&mut v, 156, 0.6);
        let pulse = SampledSignal::new(v, rate).unwrap();
        let peaks = detect_peaks(&pulse, &PeakOptions::default()).unwrap();
        assert!(peaks.iter().any(|p| p.abs_diff(150) <= 1));
        assert!(!peaks.iter().any(|p| p.abs_diff(156) <= 1 && p.abs_diff(150) > 1));
    }

    #[test]
    fn ibi_from_peaks_basics() {
        let ibi = ibi_from_peaks(&[0, 30, 60], 30.0).unwrap();
        assert_eq!(ibi.rr_ms(), &[1000.0, 1000.0]);
        assert!(ibi.gated_out().is_empty());

        // A 3 s gap gets gated out and flagged.
        let ibi = ibi_from_peaks(&[0, 30, 120, 150], 30.0).unwrap();
        assert_eq!(ibi.rr_ms(), &[1000.0, 3000.0, 1000.0]);
        assert_eq!(ibi.gated_out(), vec![(1, 3000.0)]);
        assert_eq!(ibi.nn_ms(), vec![1000.0, 1000.0]);
    }

    #[test]
    fn ibi_matches_diff_oracle_on_random_peaks() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let mut peaks = vec![rng.gen_range(0..20usize)];
            for _ in 0..rng.gen_range(2..20) {
                let step = rng.gen_range(10..70usize);
                let next = *peaks.last().unwrap() + step;
                peaks.push(next);
            }
            let ibi = ibi_from_peaks(&peaks, 30.0).unwrap();
            for (k, w) in peaks.windows(2).enumerate() {
                let expect = (w[1] - w[0]) as f64 / 30.0 * 1000.0;
                assert_abs_diff_eq!(ibi.rr_ms()[k], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ibi_rejects_single_peak() {
        assert!(ibi_from_peaks(&[5], 30.0).is_err());
    }

    #[test]
    fn hr_known_values() {
        let ibi = IbiSequence::from_peak_times(vec![0.0, 0.75, 1.5, 2.25], 30.0).unwrap();
        assert_abs_diff_eq!(hr_from_ibi(&ibi).unwrap(), 80.0, epsilon = 1e-12);

        let ibi = IbiSequence::from_peak_times(vec![0.0, 1.0], 30.0).unwrap();
        assert_abs_diff_eq!(hr_from_ibi(&ibi).unwrap(), 60.0, epsilon = 1e-12);
    }

    #[test]
    fn hr_matches_mean_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let mut t = 0.0;
            let mut times = vec![0.0];
            for _ in 0..rng.gen_range(1..30) {
                t += rng.gen_range(0.3..1.9);
                times.push(t);
            }
            let ibi = IbiSequence::from_peak_times(times, 30.0).unwrap();
            let nn = ibi.nn_ms();
            if nn.is_empty() {
                continue;
            }
            let oracle = 60.0 / (nn.iter().sum::<f64>() / nn.len() as f64 / 1000.0);
            assert_abs_diff_eq!(hr_from_ibi(&ibi).unwrap(), oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn hrv_hand_computed_case() {
        let ibi = IbiSequence::from_peak_times(vec![0.0, 0.8, 1.62, 2.4], 30.0).unwrap();
        let (avnn, sdnn) = hrv_features(&ibi).unwrap();
        assert_abs_diff_eq!(avnn, 800.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sdnn, 20.0, epsilon = 1e-9);
    }

    #[test]
    fn hrv_constant_rr_has_zero_sdnn() {
        let ibi = IbiSequence::from_peak_times(vec![0.0, 0.8, 1.6, 2.4], 30.0).unwrap();
        let (avnn, sdnn) = hrv_features(&ibi).unwrap();
        assert_abs_diff_eq!(avnn, 800.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sdnn, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn hrv_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let count = rng.gen_range(2..40);
            let mut t = 0.0;
            let mut times = vec![0.0];
            for _ in 0..count {
                t += rng.gen_range(0.26..1.95);
                times.push(t);
            }
            let ibi = IbiSequence::from_peak_times(times, 30.0).unwrap();
            let nn = ibi.nn_ms();
            let mean = nn.iter().sum::<f64>() / nn.len() as f64;
            let var = nn.iter().map(|rr| (rr - mean).powi(2)).sum::<f64>()
                / (nn.len() - 1) as f64;
            let (avnn, sdnn) = hrv_features(&ibi).unwrap();
            assert_abs_diff_eq!(avnn, mean, epsilon = 1e-9);
            assert_abs_diff_eq!(sdnn, var.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn pad_single_interval_fills_target() {
        let ibi = IbiSequence::from_peak_times(vec![0.0, 0.8], 10.0).unwrap();
        assert_eq!(pad_ibi(&ibi, 10).unwrap(), vec![800.0; 10]);
    }

    #[test]
    fn pad_two_equal_spans_split_half_and_half() {
        let ibi =
            IbiSequence::from_parts(vec![0.0, 0.5, 1.0], vec![600.0, 900.0], 10.0).unwrap();
        let padded = pad_ibi(&ibi, 10).unwrap();
        assert_eq!(&padded[..5], &[600.0; 5]);
        assert_eq!(&padded[5..], &[900.0; 5]);
    }

    #[test]
    fn pad_matches_span_lookup_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let rate = 30.0;
            let mut t = rng.gen_range(0.0..0.4);
            let mut times = vec![t];
            for _ in 0..rng.gen_range(2..12) {
                t += rng.gen_range(0.3..1.9);
                times.push(t);
            }
            let ibi = IbiSequence::from_peak_times(times.clone(), rate).unwrap();
            let target = rng.gen_range(30..400);
            let padded = pad_ibi(&ibi, target).unwrap();
            for (i, v) in padded.iter().enumerate() {
                let ts = i as f64 / rate;
                // Oracle: scan spans directly.
                let mut j = 0;
                while j + 2 < times.len() && ts >= times[j + 1] {
                    j += 1;
                }
                let expect = (times[j + 1] - times[j]) * 1000.0;
                assert_abs_diff_eq!(*v, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pad_is_piecewise_constant_with_changes_at_peaks() {
        let ibi = IbiSequence::from_peak_times(vec![0.2, 0.9, 1.8, 2.5], 30.0).unwrap();
        let padded = pad_ibi(&ibi, 90).unwrap();
        let peak_samples: Vec<usize> = ibi
            .peak_times_sec
            .iter()
            .map(|t| (t * 30.0).ceil() as usize)
            .collect();
        for i in 1..padded.len() {
            if padded[i] != padded[i - 1] {
                assert!(
                    peak_samples.contains(&i),
                    "value changed at sample {i}, not a peak sample"
                );
            }
        }
    }

    #[test]
    fn ibi_error_zero_for_identical_and_offset_for_shifted() {
        let a = IbiSequence::from_peak_times(vec![0.0, 0.8, 1.6], 30.0).unwrap();
        assert_abs_diff_eq!(ibi_absolute_error(&a, &a, 60).unwrap(), 0.0, epsilon = 1e-12);

        let b =
            IbiSequence::from_parts(vec![0.0, 0.8, 1.6], vec![850.0, 850.0], 30.0).unwrap();
        assert_abs_diff_eq!(ibi_absolute_error(&b, &a, 60).unwrap(), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn hr_error_suite_known_values() {
        let r = vec![60.0, 70.0, 80.0];
        let suite = hr_error_suite(&r, &r).unwrap();
        assert_eq!(suite.mae_bpm, 0.0);
        assert_eq!(suite.rmse_bpm, 0.0);
        assert_eq!(suite.mer_percent, 0.0);
        assert_abs_diff_eq!(suite.pearson_r.unwrap(), 1.0, epsilon = 1e-12);

        let same = vec![70.0, 70.0];
        let suite = hr_error_suite(&same, &same).unwrap();
        assert!(suite.pearson_r.is_none(), "constant vectors have undefined r");

        let shifted: Vec<f64> = r.iter().map(|v| v + 2.0).collect();
        let suite = hr_error_suite(&shifted, &r).unwrap();
        assert_abs_diff_eq!(suite.mae_bpm, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(suite.rmse_bpm, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn hr_error_suite_matches_formula_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.gen_range(2..50);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(40.0..180.0)).collect();
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(40.0..180.0)).collect();
            let suite = hr_error_suite(&p, &r).unwrap();
            let mae = p.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
            let rmse = (p.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                / n as f64)
                .sqrt();
            let mer =
                p.iter().zip(&r).map(|(a, b)| (a - b).abs() / b).sum::<f64>() / n as f64 * 100.0;
            assert_abs_diff_eq!(suite.mae_bpm, mae, epsilon = 1e-12);
            assert_abs_diff_eq!(suite.rmse_bpm, rmse, epsilon = 1e-12);
            assert_abs_diff_eq!(suite.mer_percent, mer, epsilon = 1e-12);
        }
    }

    #[test]
    fn hr_error_suite_rejects_bad_inputs() {
        assert!(hr_error_suite(&[60.0], &[60.0, 61.0]).is_err());
        assert!(hr_error_suite(&[60.0], &[0.0]).is_err());
    }

    #[test]
    fn bland_altman_known_values() {
        let r = vec![60.0, 70.0, 80.0];
        let ba = bland_altman(&r, &r).unwrap();
        assert_eq!(ba.bias, 0.0);
        assert_eq!(ba.loa_lower, 0.0);
        assert_eq!(ba.loa_upper, 0.0);

        let shifted: Vec<f64> = r.iter().map(|v| v + 3.0).collect();
        let ba = bland_altman(&shifted, &r).unwrap();
        assert_abs_diff_eq!(ba.bias, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ba.loa_lower, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ba.loa_upper, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn bland_altman_matches_formula_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = rng.gen_range(2..40);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(40.0..180.0)).collect();
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(40.0..180.0)).collect();
            let ba = bland_altman(&p, &r).unwrap();
            let d: Vec<f64> = p.iter().zip(&r).map(|(a, b)| a - b).collect();
            let bias = d.iter().sum::<f64>() / n as f64;
            let sd =
                (d.iter().map(|x| (x - bias).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            assert_abs_diff_eq!(ba.bias, bias, epsilon = 1e-12);
            assert_abs_diff_eq!(ba.loa_lower, bias - 1.96 * sd, epsilon = 1e-12);
            assert_abs_diff_eq!(ba.loa_upper, bias + 1.96 * sd, epsilon = 1e-12);
        }
    }

    #[test]
    fn periodic_peak_train_recovers_exact_rate() {
        // 0.75 s period at 40 Hz sits exactly on the sample grid.
        let peaks: Vec<usize> = (0..12).map(|k| k * 30).collect();
        let ibi = ibi_from_peaks(&peaks, 40.0).unwrap();
        assert_abs_diff_eq!(hr_from_ibi(&ibi).unwrap(), 80.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rmse_at_least_mae(
            pairs in proptest::collection::vec((40.0f64..180.0, 40.0f64..180.0), 2..40)
        ) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let r: Vec<f64> = pairs.iter().map(|x| x.1).collect();
            let suite = hr_error_suite(&p, &r).unwrap();
            prop_assert!(suite.rmse_bpm >= suite.mae_bpm - 1e-12);
        }

        #[test]
        fn sdnn_shift_invariant_avnn_shifts(
            rrs in proptest::collection::vec(300.0f64..1500.0, 3..30),
            shift in -40.0f64..40.0
        ) {
            let mk = |rr: &[f64]| {
                let mut t = 0.0;
                let mut times = vec![0.0];
                for v in rr {
                    t += v / 1000.0;
                    times.push(t);
                }
                IbiSequence::from_peak_times(times, 30.0).unwrap()
            };
            let base = mk(&rrs);
            let shifted_rr: Vec<f64> = rrs.iter().map(|v| v + shift).collect();
            prop_assume!(shifted_rr.iter().all(|v| (RR_GATE_MS.0..=RR_GATE_MS.1).contains(v)));
            let shifted = mk(&shifted_rr);
            let (a0, s0) = hrv_features(&base).unwrap();
            let (a1, s1) = hrv_features(&shifted).unwrap();
            prop_assert!((s0 - s1).abs() < 1e-6, "sdnn moved: {} vs {}", s0, s1);
            prop_assert!(((a1 - a0) - shift).abs() < 1e-6);
        }

        #[test]
        fn ibi_error_symmetric_and_zero_on_self(
            rr_a in proptest::collection::vec(300.0f64..1500.0, 2..12),
            rr_b in proptest::collection::vec(300.0f64..1500.0, 2..12)
        ) {
            let mk = |rr: &[f64]| {
                let mut t = 0.1;
                let mut times = vec![t];
                for v in rr {
                    t += v / 1000.0;
                    times.push(t);
                }
                IbiSequence::from_peak_times(times, 30.0).unwrap()
            };
            let a = mk(&rr_a);
            let b = mk(&rr_b);
            let ab = ibi_absolute_error(&a, &b, 300).unwrap();
            let ba = ibi_absolute_error(&b, &a, 300).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ibi_absolute_error(&a, &a, 300).unwrap() == 0.0);
        }
    }
}
