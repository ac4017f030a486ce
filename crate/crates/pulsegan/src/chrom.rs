//! Rough pulse extraction from RGB traces via chrominance projection.
//!
//! Standardized color channels are projected onto two chrominance axes to
//! cancel specular reflection, band-passed, combined by alpha tuning, and
//! finally detrended and normalized to [0, 1].

use crate::signal::{self, SampledSignal};
use crate::{Error, Result};

/// Chrominance variation below this floor is treated as no pulsatile
/// content at all (standardized channels are order one, real chrominance
/// deviations are orders of magnitude larger).
const DEGENERATE_STD: f64 = 1e-12;

/// Spatially averaged RGB intensities over time.
#[derive(Debug, Clone)]
pub struct RgbTrace {
    r: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
    fps: f64,
}

impl RgbTrace {
    pub fn new(r: Vec<f64>, g: Vec<f64>, b: Vec<f64>, fps: f64) -> Result<Self> {
        if r.len() != g.len() || g.len() != b.len() {
            return Err(Error::ShapeMismatch(format!(
                "channel lengths differ: r={}, g={}, b={}",
                r.len(),
                g.len(),
                b.len()
            )));
        }
        if r.len() < 2 {
            return Err(Error::InvalidSignal("RGB trace needs at least 2 frames".into()));
        }
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(Error::InvalidSignal(format!("fps must be positive, got {fps}")));
        }
        for ch in [&r, &g, &b] {
            if let Some(bad) = ch.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                return Err(Error::InvalidSignal(format!(
                    "intensities must be finite and positive, got {bad}"
                )));
            }
        }
        Ok(Self { r, g, b, fps })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn channels(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.r, &self.g, &self.b)
    }

    /// Slice a frame range out of the trace.
    pub fn slice(&self, start: usize, len: usize) -> Result<RgbTrace> {
        if start + len > self.len() {
            return Err(Error::ShapeMismatch(format!(
                "slice {start}..{} exceeds trace of {} frames",
                start + len,
                self.len()
            )));
        }
        RgbTrace::new(
            self.r[start..start + len].to_vec(),
            self.g[start..start + len].to_vec(),
            self.b[start..start + len].to_vec(),
            self.fps,
        )
    }
}

/// The two chrominance projections of a standardized RGB trace.
#[derive(Debug, Clone)]
pub struct ChromPair {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

/// Projection coefficients for the two chrominance axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCoeffs {
    pub s1: [f64; 3],
    pub s2: [f64; 3],
}

impl Default for ProjectionCoeffs {
    fn default() -> Self {
        Self { s1: [3.0, -2.0, 0.0], s2: [1.5, 1.0, -1.5] }
    }
}

/// Options for the full rough-pulse extraction.
#[derive(Debug, Clone)]
pub struct ChromOptions {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub detrend_window_sec: f64,
    pub coeffs: ProjectionCoeffs,
}

impl Default for ChromOptions {
    fn default() -> Self {
        Self {
            band_lo_hz: 0.7,
            band_hi_hz: 4.0,
            detrend_window_sec: 1.0,
            coeffs: ProjectionCoeffs::default(),
        }
    }
}

/// Divide each channel by its own temporal mean.
pub fn standardize_rgb(tr: &RgbTrace) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let norm = |ch: &[f64], name: &str| -> Result<Vec<f64>> {
        let mean = ch.iter().sum::<f64>() / ch.len() as f64;
        if mean.abs() < f64::MIN_POSITIVE {
            return Err(Error::DegenerateInput(format!("zero-mean {name} channel")));
        }
        Ok(ch.iter().map(|v| v / mean).collect())
    };
    Ok((norm(&tr.r, "R")?, norm(&tr.g, "G")?, norm(&tr.b, "B")?))
}

/// Project standardized channels onto the chrominance axes.
pub fn chrom_project(rn: &[f64], gn: &[f64], bn: &[f64]) -> Result<ChromPair> {
    chrom_project_with(rn, gn, bn, &ProjectionCoeffs::default())
}

pub fn chrom_project_with(
    rn: &[f64],
    gn: &[f64],
    bn: &[f64],
    coeffs: &ProjectionCoeffs,
) -> Result<ChromPair> {
    if rn.len() != gn.len() || gn.len() != bn.len() {
        return Err(Error::ShapeMismatch(format!(
            "channel lengths differ: {} / {} / {}",
            rn.len(),
            gn.len(),
            bn.len()
        )));
    }
    let combine = |c: &[f64; 3]| -> Vec<f64> {
        rn.iter()
            .zip(gn)
            .zip(bn)
            .map(|((r, g), b)| c[0] * r + c[1] * g + c[2] * b)
            .collect()
    };
    Ok(ChromPair { s1: combine(&coeffs.s1), s2: combine(&coeffs.s2) })
}

fn population_std(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Combine band-passed chrominance signals into a single pulse:
/// `x = s1 - alpha * s2` with `alpha = std(s1) / std(s2)`.
pub fn alpha_tune(pair: &ChromPair, rate_hz: f64) -> Result<SampledSignal> {
    if pair.s1.len() != pair.s2.len() {
        return Err(Error::ShapeMismatch(format!(
            "chrominance lengths differ: {} / {}",
            pair.s1.len(),
            pair.s2.len()
        )));
    }
    let sd2 = population_std(&pair.s2);
    if sd2 < DEGENERATE_STD {
        return Err(Error::DegenerateChrominance(format!(
            "second chrominance signal has no variation (std {sd2:.3e})"
        )));
    }
    let alpha = population_std(&pair.s1) / sd2;
    let x = pair
        .s1
        .iter()
        .zip(&pair.s2)
        .map(|(a, b)| a - alpha * b)
        .collect();
    SampledSignal::new(x, rate_hz)
}

/// Full rough-pulse extraction with default options except for the band.
pub fn chrom_pulse(tr: &RgbTrace, lo_hz: f64, hi_hz: f64) -> Result<SampledSignal> {
    let opts = ChromOptions { band_lo_hz: lo_hz, band_hi_hz: hi_hz, ..Default::default() };
    extract_pulse(tr, &opts)
}

/// Full rough-pulse extraction: standardize, project, band-pass both
/// chrominance signals, alpha-tune, detrend, normalize to [0, 1].
pub fn extract_pulse(tr: &RgbTrace, opts: &ChromOptions) -> Result<SampledSignal> {
    let (rn, gn, bn) = standardize_rgb(tr)?;
    let pair = chrom_project_with(&rn, &gn, &bn, &opts.coeffs)?;
    let s1f = signal::bandpass(
        &SampledSignal::new(pair.s1, tr.fps)?,
        opts.band_lo_hz,
        opts.band_hi_hz,
    )?;
    let s2f = signal::bandpass(
        &SampledSignal::new(pair.s2, tr.fps)?,
        opts.band_lo_hz,
        opts.band_hi_hz,
    )?;
    let filtered = ChromPair { s1: s1f.into_values(), s2: s2f.into_values() };
    let tuned = alpha_tune(&filtered, tr.fps)?;
    let detrended = signal::detrend(&tuned, opts.detrend_window_sec)?;
    signal::normalize01(&detrended).map_err(|_| {
        Error::DegenerateChrominance("tuned pulse is constant, no pulsatile component".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standardize_constant_channels_to_ones() {
        let tr = RgbTrace::new(vec![180.0; 10], vec![120.0; 10], vec![90.0; 10], 30.0).unwrap();
        let (rn, gn, bn) = standardize_rgb(&tr).unwrap();
        for v in rn.iter().chain(&gn).chain(&bn) {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn standardize_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base: Vec<f64> = (0..50).map(|_| rng.gen_range(50.0..250.0)).collect();
        let tr1 = RgbTrace::new(base.clone(), base.clone(), base.clone(), 30.0).unwrap();
        let doubled: Vec<f64> = base.iter().map(|v| v * 2.0).collect();
        let tr2 = RgbTrace::new(doubled.clone(), doubled.clone(), doubled, 30.0).unwrap();
        let a = standardize_rgb(&tr1).unwrap();
        let b = standardize_rgb(&tr2).unwrap();
        for (x, y) in a.0.iter().zip(&b.0) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_outputs_unit_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mk = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..200).map(|_| rng.gen_range(10.0..200.0)).collect()
        };
        let tr = RgbTrace::new(mk(&mut rng), mk(&mut rng), mk(&mut rng), 30.0).unwrap();
        let (rn, gn, bn) = standardize_rgb(&tr).unwrap();
        for ch in [rn, gn, bn] {
            let mean = ch.iter().sum::<f64>() / ch.len() as f64;
            assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_known_values() {
        let pair = chrom_project(&[1.0], &[1.0], &[1.0]).unwrap();
        assert_eq!(pair.s1, vec![1.0]);
        assert_eq!(pair.s2, vec![1.0]);

        let pair = chrom_project(&[1.0], &[1.0], &[0.0]).unwrap();
        assert_eq!(pair.s1, vec![1.0]);
        assert_eq!(pair.s2, vec![2.5]);
    }

    #[test]
    fn projection_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mk = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..100).map(|_| rng.gen_range(0.5..1.5)).collect()
        };
        let (rn, gn, bn) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let pair = chrom_project(&rn, &gn, &bn).unwrap();
        for i in 0..rn.len() {
            assert_abs_diff_eq!(pair.s1[i], 3.0 * rn[i] - 2.0 * gn[i], epsilon = 1e-12);
            assert_abs_diff_eq!(
                pair.s2[i],
                1.5 * rn[i] + gn[i] - 1.5 * bn[i],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn projection_rejects_length_mismatch() {
        assert!(chrom_project(&[1.0, 2.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn alpha_tune_cancels_proportional_pairs() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).sin()).collect();
        let same = ChromPair { s1: s.clone(), s2: s.clone() };
        let x = alpha_tune(&same, 30.0).unwrap();
        for v in x.values() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }

        let doubled = ChromPair { s1: s.clone(), s2: s.iter().map(|v| 2.0 * v).collect() };
        let x = alpha_tune(&doubled, 30.0).unwrap();
        for v in x.values() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn alpha_tune_matches_std_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let s1: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s2: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = alpha_tune(&ChromPair { s1: s1.clone(), s2: s2.clone() }, 30.0).unwrap();
        let alpha = population_std(&s1) / population_std(&s2);
        for i in 0..s1.len() {
            assert_abs_diff_eq!(x.values()[i], s1[i] - alpha * s2[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn alpha_tune_rejects_degenerate_chrominance() {
        let pair = ChromPair { s1: vec![1.0, 2.0, 3.0], s2: vec![5.0, 5.0, 5.0] };
        assert!(matches!(
            alpha_tune(&pair, 30.0),
            Err(Error::DegenerateChrominance(_))
        ));
    }

    #[test]
    fn alpha_tune_strips_injected_common_mode_when_ratios_align() {
        // Two orthogonal unit-std tones u, v on a grid where both complete
        // whole periods. With pulse = 0.6c*u - 0.2c*v and s1 = pulse + c*v,
        // std(s1) = c*std(v) by construction, so alpha equals c and the
        // injected c*v term cancels exactly, returning the pulse.
        let n = 300;
        let unit_tone = |cycles: f64| -> Vec<f64> {
            let raw: Vec<f64> = (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * cycles * i as f64 / n as f64).sin())
                .collect();
            let std = population_std(&raw);
            raw.iter().map(|v| v / std).collect()
        };
        let u = unit_tone(7.0);
        let v: Vec<f64> = {
            let raw: Vec<f64> = (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * 11.0 * i as f64 / n as f64).cos())
                .collect();
            let std = population_std(&raw);
            raw.iter().map(|x| x / std).collect()
        };
        let c = 1.7;
        let pulse: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(uu, vv)| 0.6 * c * uu - 0.2 * c * vv)
            .collect();
        let s1: Vec<f64> = pulse.iter().zip(&v).map(|(p, vv)| p + c * vv).collect();
        let x = alpha_tune(&ChromPair { s1, s2: v }, 30.0).unwrap();
        for (got, want) in x.values().iter().zip(&pulse) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let tr =
            RgbTrace::new(vec![180.0; 600], vec![120.0; 600], vec![90.0; 600], 30.0).unwrap();
        assert!(matches!(
            chrom_pulse(&tr, 0.7, 4.0),
            Err(Error::DegenerateChrominance(_))
        ));
    }
}
