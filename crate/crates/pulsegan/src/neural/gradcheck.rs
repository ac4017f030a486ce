//! Central finite-difference verification of analytic gradients.
//!
//! The caller runs its analytic backward pass first, leaving gradients in
//! the parameter store and the input tensor, then hands the checker a
//! pure loss closure. The checker perturbs coordinates one at a time and
//! compares `(f(x+h) - f(x-h)) / 2h` against the stored gradient.

use super::store::ParamStore;
use super::tensor::Tensor3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub h: f64,
    /// Cap on checked coordinates per object; 0 checks everything.
    pub max_coords: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { h: 1e-5, max_coords: 0, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst: String,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

fn pick_coords(total: usize, max_coords: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if max_coords == 0 || total <= max_coords {
        (0..total).collect()
    } else {
        (0..max_coords).map(|_| rng.gen_range(0..total)).collect()
    }
}

/// Compare stored analytic gradients against central differences of
/// `loss` over parameter and input coordinates.
pub fn check_gradients<L>(
    store: &mut ParamStore,
    x: &mut Tensor3,
    loss: L,
    opts: &GradCheckOptions,
) -> GradCheckReport
where
    L: Fn(&ParamStore, &Tensor3) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: String::from("(none)"),
        coords_checked: 0,
    };

    let names: Vec<String> = store.names().to_vec();
    for name in &names {
        if !store.get(name).trainable {
            continue;
        }
        let total = store.get(name).values.len();
        for i in pick_coords(total, opts.max_coords, &mut rng) {
            let analytic = store.get(name).grad[i];
            let orig = store.get(name).values[i];
            store.get_mut(name).values[i] = orig + opts.h;
            let plus = loss(store, x);
            store.get_mut(name).values[i] = orig - opts.h;
            let minus = loss(store, x);
            store.get_mut(name).values[i] = orig;
            let numeric = (plus - minus) / (2.0 * opts.h);
            let err = rel_err(analytic, numeric);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst =
                    format!("{name}[{i}] analytic={analytic:.6e} numeric={numeric:.6e}");
            }
        }
    }

    for i in pick_coords(x.data.len(), opts.max_coords, &mut rng) {
        let analytic = x.grad[i];
        let orig = x.data[i];
        x.data[i] = orig + opts.h;
        let plus = loss(store, x);
        x.data[i] = orig - opts.h;
        let minus = loss(store, x);
        x.data[i] = orig;
        let numeric = (plus - minus) / (2.0 * opts.h);
        let err = rel_err(analytic, numeric);
        report.coords_checked += 1;
        if err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = format!("input[{i}] analytic={analytic:.6e} numeric={numeric:.6e}");
        }
    }

    report
}

/// Random tensor with values bounded away from activation kinks.
pub fn kink_free_tensor(batch: usize, channels: usize, len: usize, rng: &mut ChaCha8Rng) -> Tensor3 {
    let data = (0..batch * channels * len)
        .map(|_| {
            let mag = rng.gen_range(0.2..1.2);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor3::from_data(batch, channels, len, data).unwrap()
}

/// Fixed random projection used as a scalar readout in layer checks.
pub fn readout_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
