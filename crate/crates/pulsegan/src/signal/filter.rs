//! Butterworth band-pass design and zero-phase application.
//!
//! The design path follows the classic analog-prototype route: place the
//! low-pass prototype poles, transform to a band-pass, prewarp, and map to
//! the z-plane with the bilinear transform. The resulting 4th-order
//! section is applied forward and backward with odd-extension padding and
//! steady-state initial conditions, so the net filter has zero phase.

use crate::{Error, Result};
use rustfft::num_complex::Complex;

const PROTOTYPE_ORDER: usize = 2;

/// Digital recursive filter in transfer-function form, `a[0] == 1`.
#[derive(Debug, Clone)]
pub struct BandpassFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl BandpassFilter {
    /// Number of samples of odd-extension padding used by [`filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * self.b.len().max(self.a.len())
    }

    /// Magnitude response at `freq_hz` for the single-pass filter.
    pub fn gain_at(&self, freq_hz: f64, rate_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
        let z = Complex::new(0.0, -w).exp();
        let eval = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex::new(0.0, 0.0), |acc, &v| acc * z + v)
        };
        (eval(&self.b) / eval(&self.a)).norm()
    }
}

/// Design a 4th-order Butterworth band-pass for the given edges.
pub fn butter_bandpass(lo_hz: f64, hi_hz: f64, rate_hz: f64) -> Result<BandpassFilter> {
    let nyq = rate_hz / 2.0;
    if !(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < nyq) {
        return Err(Error::InvalidBand { lo: lo_hz, hi: hi_hz, rate: rate_hz });
    }

    // Analog low-pass prototype: poles on the unit circle, no zeros.
    let mut poles: Vec<Complex<f64>> = (0..PROTOTYPE_ORDER)
        .map(|k| {
            let theta =
                std::f64::consts::PI * (2 * k + 1) as f64 / (2 * PROTOTYPE_ORDER) as f64;
            -Complex::new(0.0, theta - std::f64::consts::FRAC_PI_2).exp()
        })
        .collect();
    let mut zeros: Vec<Complex<f64>> = Vec::new();
    let mut gain = 1.0;

    // Prewarped band edges and low-pass -> band-pass transform.
    let warp = |f: f64| 2.0 * rate_hz * (std::f64::consts::PI * f / rate_hz).tan();
    let (w_lo, w_hi) = (warp(lo_hz), warp(hi_hz));
    let bw = w_hi - w_lo;
    let w0_sq = Complex::new(w_lo * w_hi, 0.0);
    let degree = poles.len() - zeros.len();
    poles = poles
        .iter()
        .flat_map(|p| {
            let scaled = p * bw / 2.0;
            let root = (scaled * scaled - w0_sq).sqrt();
            [scaled + root, scaled - root]
        })
        .collect();
    zeros = vec![Complex::new(0.0, 0.0); degree];
    gain *= bw.powi(degree as i32);

    // Bilinear transform to the z-plane.
    let fs2 = Complex::new(2.0 * rate_hz, 0.0);
    let num: Complex<f64> = zeros.iter().map(|z| fs2 - z).product();
    let den: Complex<f64> = poles.iter().map(|p| fs2 - p).product();
    gain *= (num / den).re;
    let degree = poles.len() - zeros.len();
    let mut z_zeros: Vec<Complex<f64>> = zeros.iter().map(|z| (fs2 + z) / (fs2 - z)).collect();
    z_zeros.extend(std::iter::repeat(Complex::new(-1.0, 0.0)).take(degree));
    let z_poles: Vec<Complex<f64>> = poles.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();

    let b = poly_from_roots(&z_zeros, gain);
    let a = poly_from_roots(&z_poles, 1.0);
    Ok(BandpassFilter { b, a })
}

/// Expand a monic polynomial from its roots and scale by `gain`.
fn poly_from_roots(roots: &[Complex<f64>], gain: f64) -> Vec<f64> {
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for r in roots {
        coeffs.push(Complex::new(0.0, 0.0));
        for i in (1..coeffs.len()).rev() {
            let prev = coeffs[i - 1];
            coeffs[i] = coeffs[i] - r * prev;
        }
    }
    coeffs.iter().map(|c| c.re * gain).collect()
}

/// Single-pass recursive filter, direct form II transposed, with initial
/// state `zi`.
fn lfilter(b: &[f64], a: &[f64], x: &[f64], zi: &[f64]) -> Vec<f64> {
    let n = b.len().max(a.len());
    let mut z = zi.to_vec();
    z.resize(n - 1, 0.0);
    let mut y = Vec::with_capacity(x.len());
    for &xv in x {
        let yv = b[0] * xv + z[0];
        for j in 0..n - 2 {
            z[j] = b[j + 1] * xv + z[j + 1] - a[j + 1] * yv;
        }
        z[n - 2] = b[n - 1] * xv - a[n - 1] * yv;
        y.push(yv);
    }
    y
}

/// Steady-state initial filter state for a unit-amplitude step input.
fn lfilter_zi(b: &[f64], a: &[f64]) -> Vec<f64> {
    let n = b.len().max(a.len());
    let m = n - 1;
    // Solve (I - A^T) zi = B, A the companion matrix of `a`.
    let mut mat = vec![vec![0.0; m]; m];
    for i in 0..m {
        mat[i][i] = 1.0;
        if i + 1 < m {
            mat[i][i + 1] = -1.0;
        }
        mat[i][0] += a[i + 1];
    }
    let mut rhs: Vec<f64> = (0..m).map(|i| b[i + 1] - a[i + 1] * b[0]).collect();
    solve_dense(&mut mat, &mut rhs);
    rhs
}

/// In-place Gaussian elimination with partial pivoting on a small system.
fn solve_dense(mat: &mut [Vec<f64>], rhs: &mut [f64]) {
    let m = rhs.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| mat[i][col].abs().partial_cmp(&mat[j][col].abs()).unwrap())
            .unwrap();
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = mat[col][col];
        for row in col + 1..m {
            let f = mat[row][col] / diag;
            for k in col..m {
                mat[row][k] -= f * mat[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    for col in (0..m).rev() {
        let mut v = rhs[col];
        for k in col + 1..m {
            v -= mat[col][k] * rhs[k];
        }
        rhs[col] = v / mat[col][col];
    }
}

/// Apply a filter forward and backward for zero net phase.
///
/// The input is extended at both ends by odd reflection to suppress edge
/// transients, and each pass starts from the steady-state response to the
/// first sample it sees.
pub fn filtfilt(filt: &BandpassFilter, x: &[f64]) -> Result<Vec<f64>> {
    let pad = filt.pad_len();
    if x.len() <= pad {
        return Err(Error::WindowTooLong { len: x.len(), need: pad + 1 });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let zi_unit = lfilter_zi(&filt.b, &filt.a);
    let scale = |s: f64| -> Vec<f64> { zi_unit.iter().map(|z| z * s).collect() };

    let fwd = lfilter(&filt.b, &filt.a, &ext, &scale(ext[0]));
    let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
    rev = lfilter(&filt.b, &filt.a, &rev, &scale(rev[0]));
    rev.reverse();
    Ok(rev[pad..pad + n].to_vec())
}
