//! Loss evaluation and exact gradients of the batched objective.
//!
//! Every circuit gate is `exp(-iθP/2)` with a Pauli generator `P`, so the
//! π/2 parameter-shift rule gives the exact derivative of any observable
//! expectation. The MMD loss is a fixed quadratic in the output distribution,
//! which makes its gradient an expectation of the diagonal observable
//! `o[y] = (∂L/∂p)[y]`; the shift differences
//! `(E(θ_k+π/2) - E(θ_k-π/2))/2 = Im <ψ|O·Suffix_k·G_k·P_k|pre_{k-1}>`
//! are therefore all computable in a single backward sweep that un-applies
//! gates one by one, instead of re-running the circuit twice per parameter.
//! The literal two-run evaluation is kept in the test suite as an oracle, and
//! central finite differences remain available as [`GradMethod::FiniteDifference`].

use super::kernel::KernelSpec;
use crate::denoiser::{build_plan, kernels, run_plan, CircuitPlan, Topology};
use crate::error::Result;
use crate::posterior::{posterior_dist, PosteriorMode, PosteriorSpec};
use crate::schedule::NoiseSchedule;
use crate::sim::{BitString, ProbVector};
use num_complex::Complex64;

/// Gradient evaluation method. Parameter shift is the default; finite
/// differences are an oracle mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMethod {
    ParameterShift,
    FiniteDifference,
}

/// Central-difference step of the finite-difference oracle.
pub const FD_STEP: f64 = 1e-3;

/// One sampled training example: clean data, the drawn timestep, the noisy
/// sample at `t`, and the noisy sample at `t = 1` for the reconstruction term.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub x0: BitString,
    pub t: usize,
    pub xt: BitString,
    pub x1: BitString,
}

/// One MMD term: a conditioning `(t, xt)`, a target distribution, and an
/// optional posterior-mixing matrix for x0-predictor training (`Q[y][x̃0]`,
/// row-major), through which the model distribution is pushed before the
/// loss.
pub(crate) struct EvalContext {
    pub t: usize,
    pub xt: BitString,
    pub target: ProbVector,
    pub mix: Option<Vec<f64>>,
}

impl EvalContext {
    /// Assembled model distribution for this context.
    fn model_dist(&self, p_model: &[f64]) -> Vec<f64> {
        match &self.mix {
            None => p_model.to_vec(),
            Some(q) => {
                let d = p_model.len();
                let mut out = vec![0.0; d];
                for (y, o) in out.iter_mut().enumerate() {
                    let row = &q[y * d..(y + 1) * d];
                    *o = row.iter().zip(p_model).map(|(qq, pp)| qq * pp).sum();
                }
                out
            }
        }
    }

    /// Pulls the loss gradient back through the mixing matrix.
    fn pullback(&self, g_eval: &[f64]) -> Vec<f64> {
        match &self.mix {
            None => g_eval.to_vec(),
            Some(q) => {
                let d = g_eval.len();
                let mut out = vec![0.0; d];
                for y in 0..d {
                    let row = &q[y * d..(y + 1) * d];
                    for (o, qq) in out.iter_mut().zip(row) {
                        *o += qq * g_eval[y];
                    }
                }
                out
            }
        }
    }
}

/// Builds the posterior-mixing matrix `Q[y][x̃0] = q(y | x_t, x̃0)` for
/// x0-predictor step assembly.
pub(crate) fn posterior_matrix(
    xt: &BitString,
    t: usize,
    sched: &NoiseSchedule,
    mode: PosteriorMode,
) -> Result<Vec<f64>> {
    let n = xt.width();
    let d = 1usize << n;
    let mut q = vec![0.0; d * d];
    for x0_idx in 0..d {
        let x0 = BitString::from_index(x0_idx, n)?;
        let spec = PosteriorSpec::new(&x0, xt, t, sched, mode)?;
        let post = posterior_dist(&spec)?;
        for y in 0..d {
            q[y * d + x0_idx] = post.get(y);
        }
    }
    Ok(q)
}

/// Loss of one context at the given parameters.
pub(crate) fn context_loss(
    ctx: &EvalContext,
    flat: &[f64],
    n: usize,
    layers: usize,
    topo: &Topology,
    t_steps: usize,
    kernel: &KernelSpec,
) -> Result<f64> {
    let plan = build_plan(ctx.t, &ctx.xt, n, layers, topo, t_steps);
    let amps = run_plan(&plan, flat);
    let p_model = crate::denoiser::data_marginal(&amps, n);
    let p_eval = ctx.model_dist(&p_model);
    quadratic_loss(&p_eval, ctx.target.probs(), kernel)
}

fn quadratic_loss(p: &[f64], q: &[f64], kernel: &KernelSpec) -> Result<f64> {
    let diff: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
    let kd = kernel.apply(&diff);
    Ok(diff.iter().zip(&kd).map(|(a, b)| a * b).sum())
}

/// Loss and parameter-shift gradient of one context, accumulated into `grad`
/// with weight `weight`.
pub(crate) fn context_loss_and_grad_ps(
    ctx: &EvalContext,
    flat: &[f64],
    n: usize,
    layers: usize,
    topo: &Topology,
    t_steps: usize,
    kernel: &KernelSpec,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let plan = build_plan(ctx.t, &ctx.xt, n, layers, topo, t_steps);
    let amps = run_plan(&plan, flat);
    let p_model = crate::denoiser::data_marginal(&amps, n);
    let p_eval = ctx.model_dist(&p_model);

    let diff: Vec<f64> = p_eval.iter().zip(ctx.target.probs()).map(|(a, b)| a - b).collect();
    let kd = kernel.apply(&diff);
    let loss: f64 = diff.iter().zip(&kd).map(|(a, b)| a * b).sum();
    // ∂L/∂p_eval = 2·K·(p_eval - target), pulled back to the raw circuit output
    let g_eval: Vec<f64> = kd.iter().map(|v| 2.0 * v).collect();
    let g_model = ctx.pullback(&g_eval);

    backward_sweep(&plan, flat, amps, &g_model, weight, grad);
    Ok(loss)
}

/// Single backward sweep computing every parameter-shift difference for a
/// diagonal observable `o[full] = g_model[data bits of full]`.
fn backward_sweep(
    plan: &CircuitPlan,
    flat: &[f64],
    psi: Vec<Complex64>,
    g_model: &[f64],
    weight: f64,
    grad: &mut [f64],
) {
    let qc = plan.qubit_count;
    let data_mask = g_model.len() - 1;
    // λ = O|ψ>, φ = |ψ>
    let mut lambda: Vec<Complex64> =
        psi.iter().enumerate().map(|(i, a)| a * g_model[i & data_mask]).collect();
    let mut phi = psi;
    let mut pauli_scratch = vec![Complex64::ZERO; lambda.len()];

    for gate in plan.gates.iter().rev() {
        let angle = gate.angle(flat);
        kernels::apply(&mut lambda, qc, gate.generator, -angle);
        kernels::apply(&mut phi, qc, gate.generator, -angle);
        if let Some(idx) = gate.param_idx {
            if gate.scale != 0.0 {
                kernels::apply_pauli(&mut pauli_scratch, &phi, qc, gate.generator);
                let overlap: Complex64 = lambda
                    .iter()
                    .zip(&pauli_scratch)
                    .map(|(l, p)| l.conj() * p)
                    .sum();
                grad[idx] += weight * gate.scale * overlap.im;
            }
        }
    }
}

/// Loss and finite-difference gradient of one context.
#[allow(clippy::too_many_arguments)]
pub(crate) fn context_loss_and_grad_fd(
    ctx: &EvalContext,
    flat: &[f64],
    n: usize,
    layers: usize,
    topo: &Topology,
    t_steps: usize,
    kernel: &KernelSpec,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let loss = context_loss(ctx, flat, n, layers, topo, t_steps, kernel)?;
    let mut shifted = flat.to_vec();
    for idx in 0..flat.len() {
        shifted[idx] = flat[idx] + FD_STEP;
        let plus = context_loss(ctx, &shifted, n, layers, topo, t_steps, kernel)?;
        shifted[idx] = flat[idx] - FD_STEP;
        let minus = context_loss(ctx, &shifted, n, layers, topo, t_steps, kernel)?;
        shifted[idx] = flat[idx];
        grad[idx] += weight * (plus - minus) / (2.0 * FD_STEP);
    }
    Ok(loss)
}
