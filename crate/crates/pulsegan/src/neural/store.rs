//! Named parameter storage with Adam state.

use crate::{Error, Result};
use std::collections::HashMap;

/// One named parameter: values, gradient, and Adam moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub trainable: bool,
}

/// Insertion-ordered collection of parameters plus the optimizer step
/// counter. Iteration order is the registration order, which keeps every
/// numeric reduction deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    index: HashMap<String, usize>,
    params: Vec<Param>,
    step: u64,
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, shape: Vec<usize>, values: Vec<f64>) -> Result<()> {
        self.register_with(name, shape, values, true)
    }

    /// Register a non-trainable buffer (tracked state that Adam skips).
    pub fn register_buffer(&mut self, name: &str, shape: Vec<usize>, values: Vec<f64>) -> Result<()> {
        self.register_with(name, shape, values, false)
    }

    fn register_with(
        &mut self,
        name: &str,
        shape: Vec<usize>,
        values: Vec<f64>,
        trainable: bool,
    ) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(Error::LayerConfig(format!("duplicate parameter name `{name}`")));
        }
        let numel: usize = shape.iter().product();
        if numel != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "parameter `{name}`: shape {shape:?} holds {numel} values, got {}",
                values.len()
            )));
        }
        let n = values.len();
        self.index.insert(name.to_string(), self.params.len());
        self.names.push(name.to_string());
        self.params.push(Param {
            shape,
            values,
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
            trainable,
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> &Param {
        &self.params[self.index[name]]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Param {
        let i = self.index[name];
        &mut self.params[i]
    }

    pub fn values(&self, name: &str) -> &[f64] {
        &self.get(name).values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.names.iter().map(move |n| (n.as_str(), self.get(n)))
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// One Adam update with bias correction over all trainable
    /// parameters, in registration order. Gradients are zeroed afterward
    /// and the step counter advances by one.
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        let t = (self.step + 1) as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for p in &mut self.params {
            if !p.trainable {
                continue;
            }
            for i in 0..p.values.len() {
                let g = p.grad[i];
                p.m[i] = cfg.beta1 * p.m[i] + (1.0 - cfg.beta1) * g;
                p.v[i] = cfg.beta2 * p.v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = p.m[i] / bc1;
                let v_hat = p.v[i] / bc2;
                p.values[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            p.grad.fill(0.0);
        }
        self.step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut store = ParamStore::new();
        store.register("w", vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        store.adam_step(&AdamConfig::default());
        assert_eq!(store.values("w"), &[1.0, -2.0, 0.5]);
        assert_eq!(store.step(), 1);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        let mut store = ParamStore::new();
        store.register("w", vec![1], vec![0.0]).unwrap();
        store.get_mut("w").grad[0] = 1.0;
        store.adam_step(&AdamConfig { lr: 0.1, ..Default::default() });
        // Bias correction makes the first step exactly lr / (1 + eps).
        assert_abs_diff_eq!(store.values("w")[0], -0.1, epsilon = 1e-8);
        assert_eq!(store.get("w").grad[0], 0.0);
    }

    #[test]
    fn descends_a_quadratic() {
        let mut store = ParamStore::new();
        store.register("w", vec![1], vec![1.0]).unwrap();
        let cfg = AdamConfig { lr: 0.05, ..Default::default() };
        let mut losses = Vec::new();
        for _ in 0..10 {
            let w = store.values("w")[0];
            losses.push(w * w);
            store.get_mut("w").grad[0] = 2.0 * w;
            store.adam_step(&cfg);
        }
        let w = store.values("w")[0];
        losses.push(w * w);
        for pair in losses.windows(2).skip(1) {
            assert!(pair[1] < pair[0] + 1e-12, "loss rose: {pair:?}");
        }
    }

    #[test]
    fn non_trainable_buffers_are_skipped() {
        let mut store = ParamStore::new();
        store.register_buffer("rm", vec![2], vec![1.0, 2.0]).unwrap();
        store.get_mut("rm").grad.fill(5.0);
        store.adam_step(&AdamConfig::default());
        assert_eq!(store.values("rm"), &[1.0, 2.0]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::new();
        store.register("w", vec![1], vec![0.0]).unwrap();
        assert!(store.register("w", vec![1], vec![0.0]).is_err());
    }
}
