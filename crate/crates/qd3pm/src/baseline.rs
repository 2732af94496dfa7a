//! Classical factorized baseline: per-dimension uniform-matrix transitions,
//! per-dimension Bayes posteriors, the analytic product-of-marginals model,
//! and a tabular factorized competitor trained with the shared MMD/Adam
//! machinery.
//!
//! With `K = 2` the per-step transition matrix is
//! `Q_t = α_t·I + (1-α_t)/2 · 11ᵀ` applied independently to every dimension,
//! so every closed form reduces to scalar arithmetic on single bits.

use crate::error::{Error, Result};
use crate::metrics::kl_divergence;
use crate::rng::{substream, Stream};
use crate::schedule::{cosine_schedule, NoiseSchedule};
use crate::sim::{BitString, ProbVector};
use crate::train::{
    build_kernel, cosine_lr, mmd_loss, AdamState, KlSnapshot, TrainConfig,
};
use rand::Rng;

/// Per-dimension conditional tables `p_i(x_{t-1}^(i) | x_t^(i), t)` stored as
/// logits of the probability of emitting 1, so rows stay normalized by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedModel {
    n: usize,
    t_steps: usize,
    /// logit of `p_i(1 | x_t = b, t)`, indexed `(i * T + (t-1)) * 2 + b`.
    logits: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl FactorizedModel {
    pub fn new(n: usize, t_steps: usize) -> Self {
        FactorizedModel { n, t_steps, logits: vec![0.0; n * t_steps * 2] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    fn slot(&self, dim: usize, t: usize, bit: u8) -> usize {
        (dim * self.t_steps + (t - 1)) * 2 + bit as usize
    }

    /// Conditional `[p(0), p(1)]` for one dimension.
    pub fn table(&self, dim: usize, t: usize, bit: u8) -> [f64; 2] {
        let p1 = sigmoid(self.logits[self.slot(dim, t, bit)]);
        [1.0 - p1, p1]
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn from_logits(logits: Vec<f64>, n: usize, t_steps: usize) -> Result<Self> {
        if logits.len() != n * t_steps * 2 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} logits, got {}",
                n * t_steps * 2,
                logits.len()
            )));
        }
        Ok(FactorizedModel { n, t_steps, logits })
    }

    /// Exact distribution generated by per-dimension ancestral sampling from
    /// uniform noise: the product over dimensions of each 2-state chain
    /// marginal folded from `t = T` down to 1.
    pub fn generated_distribution(&self) -> ProbVector {
        let marginals: Vec<[f64; 2]> = (0..self.n)
            .map(|i| {
                let mut m = [0.5, 0.5];
                for t in (1..=self.t_steps).rev() {
                    let mut next = [0.0, 0.0];
                    for b in 0..2u8 {
                        let row = self.table(i, t, b);
                        next[0] += row[0] * m[b as usize];
                        next[1] += row[1] * m[b as usize];
                    }
                    m = next;
                }
                m
            })
            .collect();
        let d = 1usize << self.n;
        let probs: Vec<f64> = (0..d)
            .map(|idx| {
                (0..self.n)
                    .map(|i| marginals[i][(idx >> (self.n - 1 - i)) & 1])
                    .product()
            })
            .collect();
        ProbVector::new(probs, self.n).expect("product of normalized marginals")
    }

    /// One ancestral sample per dimension, from uniform noise down to `t=1`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> BitString {
        let bits = (0..self.n)
            .map(|i| {
                let mut b: u8 = rng.gen_range(0..2);
                for t in (1..=self.t_steps).rev() {
                    let row = self.table(i, t, b);
                    b = u8::from(rng.gen::<f64>() >= row[0]);
                }
                b
            })
            .collect();
        BitString::new(bits).expect("bits are binary")
    }
}

/// Per-dimension ground-truth posterior
/// `q(x_{t-1}^(i) | x_t^(i), x_0^(i)) ∝ Q_t[y, x_t] · Q̄_{t-1}[x_0, y]`
/// from the uniform-matrix closed forms.
pub fn classical_posterior_dim(
    xt_bit: u8,
    x0_bit: u8,
    t: usize,
    sched: &NoiseSchedule,
) -> Result<[f64; 2]> {
    if t < 1 || t > sched.t_steps() {
        return Err(Error::InvalidArgument(format!(
            "timestep {t} out of range 1..={}",
            sched.t_steps()
        )));
    }
    let alpha = sched.alpha(t);
    let abar_prev = sched.alpha_bar(t - 1);
    let mut weights = [0.0f64; 2];
    for (y, w) in weights.iter_mut().enumerate() {
        let likelihood = alpha * f64::from(u8::from(y as u8 == xt_bit)) + (1.0 - alpha) / 2.0;
        let prior = abar_prev * f64::from(u8::from(y as u8 == x0_bit)) + (1.0 - abar_prev) / 2.0;
        *w = likelihood * prior;
    }
    let z = weights[0] + weights[1];
    if z <= 0.0 {
        return Err(Error::DegeneratePosterior);
    }
    Ok([weights[0] / z, weights[1] / z])
}

/// The best factorized approximation of a joint distribution: the product of
/// its per-dimension marginals.
pub fn product_of_marginals(p: &ProbVector) -> ProbVector {
    let n = p.width();
    let marginals: Vec<[f64; 2]> = (0..n).map(|i| p.bit_marginal(i)).collect();
    let probs: Vec<f64> = (0..p.dim())
        .map(|idx| (0..n).map(|i| marginals[i][(idx >> (n - 1 - i)) & 1]).product())
        .collect();
    ProbVector::new(probs, n).expect("product of normalized marginals")
}

/// Worst-case factorized fitting error `(N-1)·ln K` in nats.
pub fn kl_factorized_bound(n: usize, k: usize) -> f64 {
    assert!(n >= 1 && k >= 2, "need n >= 1 and k >= 2");
    (n as f64 - 1.0) * (k as f64).ln()
}

/// Training record of the factorized baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedHistory {
    pub losses: Vec<f64>,
    pub kl_snapshots: Vec<KlSnapshot>,
    pub model: FactorizedModel,
}

/// Trains the per-dimension tables against the per-dimension posteriors with
/// the same loss shape and optimizer as the circuit model: for each batch
/// item, an MMD term at a sampled `t ~ U(2,T)` plus an MMD term against
/// `δ_{x_0}` at `t = 1`, each dimension contributing through a 2-outcome
/// kernel. Circuit-only fields of the config (layers, topology, posterior
/// mode) are ignored.
pub fn train_factorized(dataset: &ProbVector, cfg: &TrainConfig) -> Result<FactorizedHistory> {
    let n = dataset.width();
    let t_steps = cfg.t_steps;
    let sched = cosine_schedule(t_steps, cfg.s)?;
    let kernel = build_kernel(1, &cfg.bandwidths_for(1), cfg.kernel_combine())?;
    let mut model = FactorizedModel::new(n, t_steps);
    let mut adam = AdamState::new(model.logits.len());
    let mut rng = substream(cfg.seed, Stream::Training);
    let mut history = FactorizedHistory {
        losses: Vec::with_capacity(cfg.iterations),
        kl_snapshots: Vec::new(),
        model: model.clone(),
    };

    // dMMD/dp(1) for a 2-outcome model row p against target q under gram K:
    // with e = p - q, dMMD/dp = 2·K·e and dp/dlogit = p1·(1-p1)·(e_1 - e_0 direction).
    let snapshot = |model: &FactorizedModel, iter: usize, out: &mut Vec<KlSnapshot>| {
        let gen = model.generated_distribution();
        let kl = kl_divergence(dataset, &gen).unwrap_or(f64::INFINITY);
        out.push(KlSnapshot { iteration: iter, kl_nats: kl });
    };

    for iter in 0..cfg.iterations {
        let lr = cosine_lr(iter, cfg.lr_initial, cfg.lr_final, cfg.lr_decay_steps);
        let mut grad = vec![0.0; model.logits.len()];
        let mut loss_acc = 0.0;
        for _ in 0..cfg.batch_size {
            let x0 = dataset.sample(&mut rng);
            let t: usize = rng.gen_range(2..=t_steps);
            // per-dimension noisy bits at t and at 1
            for &(step, is_l0) in &[(t, false), (1usize, true)] {
                let abar = sched.alpha_bar(step);
                for i in 0..n {
                    let x0_bit = x0.bit(i);
                    let keep: f64 = abar + (1.0 - abar) / 2.0;
                    let xt_bit = if rng.gen::<f64>() < keep { x0_bit } else { 1 - x0_bit };
                    let target = if is_l0 {
                        let mut d = [0.0; 2];
                        d[x0_bit as usize] = 1.0;
                        d
                    } else {
                        classical_posterior_dim(xt_bit, x0_bit, step, &sched)?
                    };
                    let row = model.table(i, step, xt_bit);
                    let p = ProbVector::new(row.to_vec(), 1)?;
                    let q = ProbVector::new(target.to_vec(), 1)?;
                    loss_acc += mmd_loss(&p, &q, &kernel)?;
                    // chain rule through the logit
                    let e = [row[0] - target[0], row[1] - target[1]];
                    let g = [
                        2.0 * (kernel.gram()[0] * e[0] + kernel.gram()[1] * e[1]),
                        2.0 * (kernel.gram()[2] * e[0] + kernel.gram()[3] * e[1]),
                    ];
                    let p1 = row[1];
                    let slot = model.slot(i, step, xt_bit);
                    grad[slot] += (g[1] - g[0]) * p1 * (1.0 - p1) / cfg.batch_size as f64;
                }
            }
        }
        let loss = loss_acc / cfg.batch_size as f64;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: iter, value: loss });
        }
        history.losses.push(loss);
        adam.step(&mut model.logits, &grad, lr);
        if cfg.snapshot_every > 0 && (iter + 1) % cfg.snapshot_every == 0 {
            snapshot(&model, iter + 1, &mut history.kl_snapshots);
        }
    }
    if cfg.iterations == 0 {
        snapshot(&model, 0, &mut history.kl_snapshots);
    }
    history.model = model;
    Ok(history)
}
