//! Synthetic paired-data generation: clean reference pulses with known
//! beat times, RGB skin traces that embed them, and controlled
//! corruption for the rough inputs. Everything is seeded and
//! reproducible.

use crate::chrom::RgbTrace;
use crate::signal::{self, SampledSignal};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Systolic bump: amplitude 1.0, width 0.09 s.
const SYSTOLIC_SIGMA_SEC: f64 = 0.09;
/// Dicrotic bump: amplitude 0.35, delayed by 0.35 of the beat interval,
/// width 0.12 s.
const DICROTIC_AMP: f64 = 0.35;
const DICROTIC_DELAY_FRAC: f64 = 0.35;
const DICROTIC_SIGMA_SEC: f64 = 0.12;
/// Per-beat HR random-walk increment bound in bpm.
const WALK_STEP_BPM: f64 = 1.5;

/// How the instantaneous heart rate evolves over a recording.
#[derive(Debug, Clone, PartialEq)]
pub enum HrTrajectory {
    Constant { bpm: f64 },
    Ramp { start_bpm: f64, end_bpm: f64 },
    /// Per-beat bounded random walk, reflected at the bounds.
    RandomWalk { lo_bpm: f64, hi_bpm: f64 },
}

impl HrTrajectory {
    fn bounds(&self) -> (f64, f64) {
        match self {
            HrTrajectory::Constant { bpm } => (*bpm, *bpm),
            HrTrajectory::Ramp { start_bpm, end_bpm } => {
                (start_bpm.min(*end_bpm), start_bpm.max(*end_bpm))
            }
            HrTrajectory::RandomWalk { lo_bpm, hi_bpm } => (*lo_bpm, *hi_bpm),
        }
    }
}

/// Additive corruption profile. All magnitudes are multiples of the
/// centered clean signal's RMS, so profiles are scale-free.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub white_sigma: f64,
    pub pink_sigma: f64,
    pub wander_amp: f64,
    pub wander_freq_hz: f64,
    /// Expected motion spikes per second.
    pub spike_rate_hz: f64,
}

impl NoiseProfile {
    pub fn silent() -> Self {
        Self {
            white_sigma: 0.0,
            pink_sigma: 0.0,
            wander_amp: 0.0,
            wander_freq_hz: 0.25,
            spike_rate_hz: 0.0,
        }
    }

    /// White-noise-only profile achieving the requested SNR in dB.
    pub fn white_for_snr_db(snr_db: f64) -> Self {
        Self { white_sigma: 10f64.powf(-snr_db / 20.0), ..Self::silent() }
    }
}

/// One synthetic subject recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSubjectConfig {
    pub subject_id: u32,
    pub duration_sec: f64,
    pub hr: HrTrajectory,
    pub noise: NoiseProfile,
    pub seed: u64,
}

impl SynthSubjectConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.hr.bounds();
        if !(40.0..=240.0).contains(&lo) || !(40.0..=240.0).contains(&hi) {
            return Err(Error::InvalidSignal(format!(
                "subject {}: HR bounds [{lo}, {hi}] outside [40, 240] bpm",
                self.subject_id
            )));
        }
        if self.duration_sec < 30.0 {
            return Err(Error::InvalidSignal(format!(
                "subject {}: duration {} s below 30 s",
                self.subject_id, self.duration_sec
            )));
        }
        Ok(())
    }
}

/// How a clean pulse maps into RGB intensities. Negative strengths model
/// absorption: more blood, less reflected light.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbSynthConfig {
    pub baseline: [f64; 3],
    /// Pulsatile strength per channel; magnitudes ordered G > B > R.
    pub strength: [f64; 3],
    /// Relative baseline wander amplitude and frequency.
    pub wander_rel: f64,
    pub wander_freq_hz: f64,
    /// Relative white noise per channel.
    pub noise_rel: f64,
}

impl Default for RgbSynthConfig {
    fn default() -> Self {
        Self {
            baseline: [180.0, 120.0, 90.0],
            strength: [-0.01, -0.04, -0.02],
            wander_rel: 0.01,
            wander_freq_hz: 0.08,
            noise_rel: 0.002,
        }
    }
}

/// Standard normal draw (Box-Muller).
pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Clean reference pulse plus its exact beat times.
///
/// Beat onsets integrate the instantaneous HR trajectory; each beat is a
/// systolic Gaussian bump plus a smaller delayed dicrotic bump. The
/// output is detrended and normalized to [0, 1].
pub fn synth_ppg(cfg: &SynthSubjectConfig, rate_hz: f64) -> Result<(SampledSignal, Vec<f64>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = (cfg.duration_sec * rate_hz).round() as usize;

    // Beat times from the trajectory.
    let (lo, hi) = cfg.hr.bounds();
    let mut hr = match &cfg.hr {
        HrTrajectory::Constant { bpm } => *bpm,
        HrTrajectory::Ramp { start_bpm, .. } => *start_bpm,
        HrTrajectory::RandomWalk { lo_bpm, hi_bpm } => rng.gen_range(*lo_bpm..*hi_bpm),
    };
    let mut t = 0.3;
    let mut beats = Vec::new();
    let mut rrs = Vec::new();
    while t < cfg.duration_sec + 2.0 {
        beats.push(t);
        let rr = 60.0 / hr;
        rrs.push(rr);
        t += rr;
        hr = match &cfg.hr {
            HrTrajectory::Constant { bpm } => *bpm,
            HrTrajectory::Ramp { start_bpm, end_bpm } => {
                start_bpm + (end_bpm - start_bpm) * (t / cfg.duration_sec).min(1.0)
            }
            HrTrajectory::RandomWalk { .. } => {
                let mut next = hr + rng.gen_range(-WALK_STEP_BPM..WALK_STEP_BPM);
                if next > hi {
                    next = 2.0 * hi - next;
                }
                if next < lo {
                    next = 2.0 * lo - next;
                }
                next.clamp(lo, hi)
            }
        };
    }

    // Render bumps onto the sample grid; 4-sigma support.
    let mut values = vec![0.0; n];
    let mut add_bump = |center: f64, amp: f64, sigma: f64, values: &mut Vec<f64>| {
        let lo_i = (((center - 4.0 * sigma) * rate_hz).floor().max(0.0)) as usize;
        let hi_i = ((((center + 4.0 * sigma) * rate_hz).ceil()) as usize).min(n.saturating_sub(1));
        for i in lo_i..=hi_i.min(n - 1) {
            let d = (i as f64 / rate_hz - center) / sigma;
            values[i] += amp * (-0.5 * d * d).exp();
        }
    };
    for (b, rr) in beats.iter().zip(&rrs) {
        add_bump(*b, 1.0, SYSTOLIC_SIGMA_SEC, &mut values);
        add_bump(*b + DICROTIC_DELAY_FRAC * rr, DICROTIC_AMP, DICROTIC_SIGMA_SEC, &mut values);
    }

    let raw = SampledSignal::new(values, rate_hz)?;
    let clean = signal::normalize01(&signal::detrend(&raw, 1.0)?)?;
    let beats_in: Vec<f64> = beats.into_iter().filter(|b| *b < cfg.duration_sec).collect();
    Ok((clean, beats_in))
}

/// Embed a beat-locked pulse into an RGB skin trace with baseline
/// wander and channel noise.
pub fn synth_rgb_from_ppg(
    pulse: &SampledSignal,
    cfg: &RgbSynthConfig,
    seed: u64,
) -> Result<RgbTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pulse.len();
    let rate = pulse.sample_rate_hz();
    let mut channels: [Vec<f64>; 3] = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    let phases: [f64; 3] = [
        rng.gen_range(0.0..2.0 * std::f64::consts::PI),
        rng.gen_range(0.0..2.0 * std::f64::consts::PI),
        rng.gen_range(0.0..2.0 * std::f64::consts::PI),
    ];
    // Draw per-sample noise channel-major so each channel's stream is
    // contiguous and reproducible.
    for c in 0..3 {
        let base = cfg.baseline[c];
        for (i, &p) in pulse.values().iter().enumerate() {
            let t = i as f64 / rate;
            let wander = cfg.wander_rel
                * (2.0 * std::f64::consts::PI * cfg.wander_freq_hz * t + phases[c]).sin();
            let noise = cfg.noise_rel * randn(&mut rng);
            let v = base * (1.0 + cfg.strength[c] * p + wander + noise);
            channels[c].push(v.max(1e-3));
        }
    }
    let [r, g, b] = channels;
    RgbTrace::new(r, g, b, rate)
}

/// Pink-ish noise by summing octave-subsampled white layers, normalized
/// to unit RMS.
fn pink_noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const OCTAVES: usize = 5;
    let mut out = vec![0.0; n];
    for o in 0..OCTAVES {
        let hop = 1 << o;
        let layer_len = n / hop + 2;
        let layer: Vec<f64> = (0..layer_len).map(|_| randn(rng)).collect();
        // Linear interpolation between octave knots keeps the layer
        // band-limited to its octave.
        for (i, v) in out.iter_mut().enumerate() {
            let pos = i as f64 / hop as f64;
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            *v += layer[j] * (1.0 - frac) + layer[j + 1] * frac;
        }
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        for v in &mut out {
            *v /= rms;
        }
    }
    out
}

/// Corrupt a clean [0, 1] signal with white noise, pink noise, sinusoidal
/// baseline wander, and sparse motion spikes, then renormalize to [0, 1].
///
/// Returns the corrupted signal and the achieved SNR in dB (infinite for
/// a silent profile).
pub fn corrupt(
    clean: &SampledSignal,
    profile: &NoiseProfile,
    seed: u64,
) -> Result<(SampledSignal, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = clean.len();
    let rate = clean.sample_rate_hz();
    let mean = clean.values().iter().sum::<f64>() / n as f64;
    let sig_rms = (clean.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / n as f64)
        .sqrt();

    let mut noise = vec![0.0; n];
    if profile.white_sigma > 0.0 {
        for v in noise.iter_mut() {
            *v += profile.white_sigma * sig_rms * randn(&mut rng);
        }
    }
    if profile.pink_sigma > 0.0 {
        for (v, p) in noise.iter_mut().zip(pink_noise(n, &mut rng)) {
            *v += profile.pink_sigma * sig_rms * p;
        }
    }
    if profile.wander_amp > 0.0 {
        let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        for (i, v) in noise.iter_mut().enumerate() {
            let t = i as f64 / rate;
            *v += profile.wander_amp
                * sig_rms
                * (2.0 * std::f64::consts::PI * profile.wander_freq_hz * t + phase).sin();
        }
    }
    if profile.spike_rate_hz > 0.0 {
        let p_spike = (profile.spike_rate_hz / rate).min(1.0);
        for v in noise.iter_mut() {
            if rng.gen_bool(p_spike) {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                *v += sign * rng.gen_range(1.5..3.0) * sig_rms;
            }
        }
    }

    let noise_rms = (noise.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let snr_db = if noise_rms == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (sig_rms / noise_rms).log10()
    };
    let noised: Vec<f64> = clean.values().iter().zip(&noise).map(|(c, nv)| c + nv).collect();
    let out = signal::normalize01(&SampledSignal::new(noised, rate)?)?;
    Ok((out, snr_db))
}
