//! Cosine noise schedule.
//!
//! `ᾱ_t = g(t)/g(0)` with `g(t) = cos²(((t/T + s)/(1 + s)) · π/2)` and
//! per-step factors `α_t = ᾱ_t / ᾱ_{t-1}`. The endpoints are exact:
//! `ᾱ_0 = 1` and `ᾱ_T = 0` (the angle reaches π/2), so the terminal
//! distribution of the forward process is exactly uniform.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Paper-default number of timesteps.
pub const DEFAULT_T: usize = 30;
/// Paper-default offset.
pub const DEFAULT_S: f64 = 0.008;

/// The `α_t` / `ᾱ_t` sequences of a cosine schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    t_steps: usize,
    s: f64,
    alpha_bar: Vec<f64>,
    alpha: Vec<f64>,
}

/// Builds the cosine schedule for `t_steps ≥ 1` timesteps and offset `s > 0`.
pub fn cosine_schedule(t_steps: usize, s: f64) -> Result<NoiseSchedule> {
    if t_steps == 0 {
        return Err(Error::InvalidArgument("schedule needs at least one timestep".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("offset s must be positive, got {s}")));
    }
    let g = |t: usize| -> f64 {
        let angle = (t as f64 / t_steps as f64 + s) / (1.0 + s) * FRAC_PI_2;
        angle.cos().powi(2)
    };
    let g0 = g(0);
    let mut alpha_bar = Vec::with_capacity(t_steps + 1);
    alpha_bar.push(1.0);
    for t in 1..t_steps {
        alpha_bar.push(g(t) / g0);
    }
    // cos(π/2)² is an exact zero of g; pin it past floating-point cos.
    alpha_bar.push(0.0);

    for t in 1..=t_steps {
        if !(alpha_bar[t] < alpha_bar[t - 1]) {
            return Err(Error::InvalidArgument(format!(
                "schedule not strictly decreasing at t={t}"
            )));
        }
    }
    let alpha: Vec<f64> = (1..=t_steps).map(|t| alpha_bar[t] / alpha_bar[t - 1]).collect();
    Ok(NoiseSchedule { t_steps, s, alpha_bar, alpha })
}

impl NoiseSchedule {
    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `ᾱ_t` for `0 ≤ t ≤ T`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// `α_t` for `1 ≤ t ≤ T`.
    pub fn alpha(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.t_steps, "alpha defined for 1..=T, got {t}");
        self.alpha[t - 1]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }
}
