//! Pulse waveform recovery for camera-based heart monitoring.
//!
//! The pipeline mirrors a common remote-photoplethysmography workflow at
//! desk scale, with a synthetic paired-data generator standing in for
//! camera footage:
//!
//! 1. [`synth`] builds reproducible corpora of clean reference pulses and
//!    noisy RGB skin traces with known beat times.
//! 2. [`chrom`] turns an RGB trace into a rough pulse via chrominance
//!    projection and alpha tuning.
//! 3. [`gan`] trains a 1D conditional GAN (or a plain denoising
//!    autoencoder) to map rough pulses onto their clean references, using
//!    adversarial, waveform, and spectrum losses.
//! 4. [`metrics`] scores the results: heart rate, AVNN/SDNN variability,
//!    interbeat-interval padding errors, and Bland-Altman agreement.
//!
//! [`signal`] holds the shared 1D primitives and [`neural`] the
//! hand-rolled differentiable layers everything is built from. The
//! `pulsegan` binary dispatches the full workflow; each major capability
//! also has a runnable example under `examples/`.

pub mod chrom;
pub mod config;
pub mod csvio;
pub mod dataset;
pub mod error;
pub mod gan;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod signal;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
