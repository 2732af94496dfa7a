//! Adam with bias correction, cosine learning-rate decay, and Gaussian
//! parameter initialization.

use crate::denoiser::{param_count, DenoiserParams, Topology};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Adam moment estimates (β1 = 0.9, β2 = 0.999, ε = 1e-8).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// One in-place update of `params` against `grad` at learning rate `lr`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter count mismatch");
        assert_eq!(grad.len(), self.m.len(), "gradient count mismatch");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Half-cosine decay from `lr_initial` to `lr_final` over `decay_steps`
/// iterations, clamped at `lr_final` afterwards.
pub fn cosine_lr(iter: usize, lr_initial: f64, lr_final: f64, decay_steps: usize) -> f64 {
    if decay_steps == 0 || iter >= decay_steps {
        return lr_final;
    }
    let progress = iter as f64 / decay_steps as f64;
    lr_final + (lr_initial - lr_final) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Warm-restart variant: the half-cosine cycle repeats every `decay_steps`
/// iterations instead of clamping.
pub fn cosine_lr_restarts(iter: usize, lr_initial: f64, lr_final: f64, decay_steps: usize) -> f64 {
    if decay_steps == 0 {
        return lr_final;
    }
    cosine_lr(iter % decay_steps, lr_initial, lr_final, decay_steps)
}

/// I.i.d. `Normal(0, init_sigma²)` parameters, drawn in flat order.
pub fn init_params<R: Rng>(
    rng: &mut R,
    init_sigma: f64,
    n: usize,
    layers: usize,
    topo: &Topology,
) -> Result<DenoiserParams> {
    if !(init_sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "init_sigma must be positive, got {init_sigma}"
        )));
    }
    let normal = Normal::new(0.0, init_sigma)
        .map_err(|e| Error::InvalidArgument(format!("bad init distribution: {e}")))?;
    let flat: Vec<f64> = (0..param_count(n, layers, topo)).map(|_| normal.sample(rng)).collect();
    DenoiserParams::from_flat(&flat, n, layers, topo)
}
