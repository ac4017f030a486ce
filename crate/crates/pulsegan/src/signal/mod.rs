//! Deterministic 1D signal primitives shared by the whole pipeline:
//! detrending, normalization, band-pass filtering, resampling, spectra,
//! and windowing. All operations are pure functions in double precision.

mod filter;

pub use filter::{butter_bandpass, filtfilt, BandpassFilter};

use crate::{Error, Result};
use rustfft::{num_complex::Complex, FftPlanner};

/// Fixed transform length for all magnitude spectra.
pub const FFT_LEN: usize = 1024;
/// Number of one-sided spectrum bins (DC through Nyquist).
pub const SPECTRUM_BINS: usize = FFT_LEN / 2 + 1;

/// A uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    values: Vec<f64>,
    sample_rate_hz: f64,
}

impl SampledSignal {
    pub fn new(values: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSignal("empty signal".into()));
        }
        if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample {bad}")));
        }
        Ok(Self { values, sample_rate_hz })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration_sec(&self) -> f64 {
        (self.values.len() - 1) as f64 / self.sample_rate_hz
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// One-sided magnitude spectrum of a 1024-point transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1024 {
    magnitudes: Vec<f64>,
    bin_hz: f64,
}

impl Spectrum1024 {
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Width of one frequency bin in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.bin_hz * (SPECTRUM_BINS - 1) as f64
    }
}

/// Subtract a centered moving average with the given window length.
///
/// The averaging window is truncated symmetrically at both edges, so the
/// output has the same length as the input.
pub fn detrend(s: &SampledSignal, window_sec: f64) -> Result<SampledSignal> {
    if !(window_sec > 0.0) {
        return Err(Error::InvalidSignal(format!(
            "detrend window must be positive, got {window_sec}"
        )));
    }
    let w = (window_sec * s.sample_rate_hz).round() as usize;
    let w = w.max(1);
    if s.len() <= w {
        return Err(Error::WindowTooLong { len: s.len(), need: w + 1 });
    }
    let half = w / 2;
    let n = s.len();
    // Prefix sums give each truncated window mean in O(1).
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in s.values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let out = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let mean = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64;
            s.values[i] - mean
        })
        .collect();
    SampledSignal::new(out, s.sample_rate_hz)
}

/// Affinely map a signal onto [0, 1].
///
/// Errors on constant input, where the map is undefined.
pub fn normalize01(s: &SampledSignal) -> Result<SampledSignal> {
    let min = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::DegenerateInput(
            "constant signal cannot be normalized to [0, 1]".into(),
        ));
    }
    let scale = max - min;
    let out = s.values.iter().map(|v| (v - min) / scale).collect();
    SampledSignal::new(out, s.sample_rate_hz)
}

/// Zero-phase band-pass: a 4th-order recursive Butterworth section run
/// forward and backward.
pub fn bandpass(s: &SampledSignal, lo_hz: f64, hi_hz: f64) -> Result<SampledSignal> {
    let filt = butter_bandpass(lo_hz, hi_hz, s.sample_rate_hz)?;
    let out = filtfilt(&filt, s.values())?;
    SampledSignal::new(out, s.sample_rate_hz)
}

/// Linearly interpolate onto a uniform grid at `target_hz` spanning the
/// same duration as the input.
pub fn resample_linear(s: &SampledSignal, target_hz: f64) -> Result<SampledSignal> {
    if !(target_hz > 0.0) || !target_hz.is_finite() {
        return Err(Error::InvalidSignal(format!(
            "target rate must be positive, got {target_hz}"
        )));
    }
    let n = s.len();
    if n == 1 {
        return SampledSignal::new(vec![s.values[0]], target_hz);
    }
    let duration = s.duration_sec();
    let m = (duration * target_hz).floor() as usize + 1;
    let src_rate = s.sample_rate_hz;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let t = j as f64 / target_hz;
        let pos = t * src_rate;
        let mut idx = pos.floor() as usize;
        let mut frac = pos - idx as f64;
        // Snap to the nearest knot when floating-point time lands on it.
        if frac > 1.0 - 1e-9 {
            idx += 1;
            frac = 0.0;
        } else if frac < 1e-9 {
            frac = 0.0;
        }
        let v = if idx >= n - 1 {
            s.values[n - 1]
        } else if frac == 0.0 {
            s.values[idx]
        } else {
            s.values[idx] * (1.0 - frac) + s.values[idx + 1] * frac
        };
        out.push(v);
    }
    SampledSignal::new(out, target_hz)
}

/// One-sided magnitudes of the 1024-point DFT of a raw sample slice.
///
/// Inputs shorter than 1024 samples are zero-padded; longer inputs are an
/// error at the [`spectrum1024`] boundary.
pub fn magnitude_spectrum_1024(values: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(FFT_LEN)
        .collect();
    FftPlanner::new().plan_fft_forward(FFT_LEN).process(&mut buf);
    buf[..SPECTRUM_BINS].iter().map(|c| c.norm()).collect()
}

/// One-sided 1024-point magnitude spectrum of a signal of at most 1024
/// samples (shorter signals are zero-padded).
pub fn spectrum1024(s: &SampledSignal) -> Result<Spectrum1024> {
    if s.len() > FFT_LEN {
        return Err(Error::InvalidSignal(format!(
            "spectrum1024 takes at most {FFT_LEN} samples, got {}",
            s.len()
        )));
    }
    Ok(Spectrum1024 {
        magnitudes: magnitude_spectrum_1024(s.values()),
        bin_hz: s.sample_rate_hz / FFT_LEN as f64,
    })
}

/// Cut the maximal set of full windows of `win_sec` spaced `step_sec` apart.
pub fn sliding_windows(
    s: &SampledSignal,
    win_sec: f64,
    step_sec: f64,
) -> Result<Vec<SampledSignal>> {
    let (w, st) = window_step_samples(s.sample_rate_hz, win_sec, step_sec)?;
    if s.len() < w {
        return Err(Error::WindowTooLong { len: s.len(), need: w });
    }
    let count = (s.len() - w) / st + 1;
    (0..count)
        .map(|k| SampledSignal::new(s.values[k * st..k * st + w].to_vec(), s.sample_rate_hz))
        .collect()
}

/// Resolve window and step lengths in samples, requiring both to round to
/// whole positive sample counts.
pub fn window_step_samples(rate_hz: f64, win_sec: f64, step_sec: f64) -> Result<(usize, usize)> {
    let to_samples = |sec: f64, what: &str| -> Result<usize> {
        let exact = sec * rate_hz;
        let rounded = exact.round();
        if !(rounded >= 1.0) || (exact - rounded).abs() > 1e-9 {
            return Err(Error::InvalidSignal(format!(
                "{what} of {sec} s is {exact} samples at {rate_hz} Hz; needs a whole count >= 1"
            )));
        }
        Ok(rounded as usize)
    };
    Ok((to_samples(win_sec, "window")?, to_samples(step_sec, "step")?))
}

/// Frequency of the largest-magnitude bin inside [lo_hz, hi_hz].
///
/// Ties break toward the lower frequency.
pub fn dominant_frequency(sp: &Spectrum1024, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    if !(lo_hz <= hi_hz) || lo_hz < 0.0 || hi_hz > sp.nyquist_hz() + 1e-12 {
        return Err(Error::InvalidBand { lo: lo_hz, hi: hi_hz, rate: 2.0 * sp.nyquist_hz() });
    }
    let k_lo = (lo_hz / sp.bin_hz).ceil() as usize;
    let k_hi = ((hi_hz / sp.bin_hz).floor() as usize).min(SPECTRUM_BINS - 1);
    if k_lo > k_hi {
        return Err(Error::InvalidBand { lo: lo_hz, hi: hi_hz, rate: 2.0 * sp.nyquist_hz() });
    }
    let mut best = k_lo;
    for k in k_lo + 1..=k_hi {
        if sp.magnitudes[k] > sp.magnitudes[best] {
            best = k;
        }
    }
    Ok(best as f64 * sp.bin_hz)
}

/// Dominant in-band frequency of an arbitrary-length signal.
///
/// Signals longer than one transform are scored by averaging magnitude
/// spectra over 1024-sample chunks with 512-sample hops.
pub fn dominant_frequency_of_signal(s: &SampledSignal, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    if s.len() <= FFT_LEN {
        return dominant_frequency(&spectrum1024(s)?, lo_hz, hi_hz);
    }
    let mut acc = vec![0.0; SPECTRUM_BINS];
    let mut chunks = 0usize;
    let mut start = 0usize;
    while start + FFT_LEN <= s.len() {
        for (a, m) in acc.iter_mut().zip(magnitude_spectrum_1024(&s.values[start..start + FFT_LEN])) {
            *a += m;
        }
        chunks += 1;
        start += FFT_LEN / 2;
    }
    let sp = Spectrum1024 {
        magnitudes: acc.iter().map(|a| a / chunks as f64).collect(),
        bin_hz: s.sample_rate_hz / FFT_LEN as f64,
    };
    dominant_frequency(&sp, lo_hz, hi_hz)
}
