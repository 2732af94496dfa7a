//! Ground-truth denoising posteriors `q(x_{t-1} | x_t, x_0)` for the
//! depolarizing forward process.
//!
//! Two closed forms are first-class and selectable everywhere:
//!
//! * [`PosteriorMode::PaperEq17`] — the published posterior state
//!   `(α_t·<x_t|ρ_{t-1}|x_t>·|x_t><x_t| + (1-α_t)/d²·ρ_{t-1}) / Z`.
//! * [`PosteriorMode::BayesConsistent`] — classical Bayes over the joint
//!   depolarizing kernel, `post(y) ∝ (α_t·1[y=x_t] + (1-α_t)/d)·ρ_{t-1}(y)`.
//!
//! The two differ by a factor of `d` on the identity term: a strictly
//! normalized rerun of the conditional-states derivation produces an outcome
//! distribution summing to `1/d` whose normalization lands on the second
//! form, while the published statement drops the `1/d` on the `α_t` term
//! only. Both readings are kept so either can be reproduced exactly. Summing
//! the second form over `x_t` also recovers the marginal `q(x_{t-1}|x_0)`;
//! the first does not.
//!
//! Besides the closed forms this module simulates the ancilla/controlled-swap
//! posterior-preparation circuit and carries a dense Choi-operator oracle
//! that replays the conditional-states derivation with explicit matrices.

use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;
use crate::sim::{
    marginal_probs, BitString, DenseDensityMatrix, GateOp, ProbVector,
    StateVector,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

/// Which closed form of the posterior to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorMode {
    PaperEq17,
    BayesConsistent,
}

impl fmt::Display for PosteriorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosteriorMode::PaperEq17 => write!(f, "paper-eq17"),
            PosteriorMode::BayesConsistent => write!(f, "bayes-consistent"),
        }
    }
}

impl FromStr for PosteriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-eq17" => Ok(PosteriorMode::PaperEq17),
            "bayes-consistent" => Ok(PosteriorMode::BayesConsistent),
            _ => Err(Error::InvalidArgument(format!(
                "unknown posterior mode '{s}' (expected paper-eq17 or bayes-consistent)"
            ))),
        }
    }
}

/// Everything needed to evaluate one posterior: the conditioning pair, the
/// timestep, the schedule, and the chosen closed form.
#[derive(Debug, Clone)]
pub struct PosteriorSpec<'a> {
    pub x0: &'a BitString,
    pub xt: &'a BitString,
    pub t: usize,
    pub sched: &'a NoiseSchedule,
    pub mode: PosteriorMode,
}

impl<'a> PosteriorSpec<'a> {
    pub fn new(
        x0: &'a BitString,
        xt: &'a BitString,
        t: usize,
        sched: &'a NoiseSchedule,
        mode: PosteriorMode,
    ) -> Result<Self> {
        if x0.width() != xt.width() {
            return Err(Error::DimensionMismatch(format!(
                "x0 width {} vs xt width {}",
                x0.width(),
                xt.width()
            )));
        }
        if t < 1 || t > sched.t_steps() {
            return Err(Error::InvalidArgument(format!(
                "timestep {t} out of range 1..={}",
                sched.t_steps()
            )));
        }
        Ok(PosteriorSpec { x0, xt, t, sched, mode })
    }

    pub fn width(&self) -> usize {
        self.x0.width()
    }

    pub fn dim(&self) -> usize {
        1 << self.x0.width()
    }

    /// Diagonal of `ρ_{t-1} = (1-ᾱ_{t-1})·I/d + ᾱ_{t-1}·|x_0><x_0|`.
    fn rho_prev(&self) -> ProbVector {
        let abar = self.sched.alpha_bar(self.t - 1);
        let d = self.dim();
        let floor = (1.0 - abar) / d as f64;
        let mut probs = vec![floor; d];
        probs[self.x0.index()] += abar;
        ProbVector::new(probs, self.width()).expect("closed form is normalized")
    }
}

/// `<x_t | ρ_{t-1} | x_t>`: `ᾱ_{t-1} + (1-ᾱ_{t-1})/d` when `x_t = x_0`,
/// otherwise `(1-ᾱ_{t-1})/d`.
pub fn overlap_xt_rho(spec: &PosteriorSpec) -> f64 {
    let abar = spec.sched.alpha_bar(spec.t - 1);
    let floor = (1.0 - abar) / spec.dim() as f64;
    if spec.xt == spec.x0 {
        abar + floor
    } else {
        floor
    }
}

/// Peak/base decomposition of a posterior: `γ1·δ_{x_t} + γ2·base`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMixture {
    pub gamma1: f64,
    pub gamma2: f64,
    pub peak: BitString,
    pub base: ProbVector,
}

impl PosteriorMixture {
    /// Rebuilds the full distribution from the mixture weights.
    pub fn reconstruct(&self) -> Result<ProbVector> {
        let mut probs: Vec<f64> =
            self.base.probs().iter().map(|&b| self.gamma2 * b).collect();
        probs[self.peak.index()] += self.gamma1;
        ProbVector::new(probs, self.base.width())
    }
}

/// Mixture weights of the selected posterior form. For the published form
/// `γ1 = α_t·<x_t|ρ|x_t> / (α_t·<x_t|ρ|x_t> + (1-α_t)/d²)`; the
/// Bayes-consistent form replaces `d²` by `d`.
pub fn posterior_mixture(spec: &PosteriorSpec) -> Result<PosteriorMixture> {
    let alpha = spec.sched.alpha(spec.t);
    let overlap = overlap_xt_rho(spec);
    let d = spec.dim() as f64;
    let identity_term = match spec.mode {
        PosteriorMode::PaperEq17 => (1.0 - alpha) / (d * d),
        PosteriorMode::BayesConsistent => (1.0 - alpha) / d,
    };
    let normalizer = alpha * overlap + identity_term;
    if normalizer <= 0.0 {
        return Err(Error::DegeneratePosterior);
    }
    let gamma1 = alpha * overlap / normalizer;
    Ok(PosteriorMixture {
        gamma1,
        gamma2: 1.0 - gamma1,
        peak: spec.xt.clone(),
        base: spec.rho_prev(),
    })
}

/// The posterior distribution `q(x_{t-1} | x_t, x_0)` in the selected form.
pub fn posterior_dist(spec: &PosteriorSpec) -> Result<ProbVector> {
    let alpha = spec.sched.alpha(spec.t);
    let rho = spec.rho_prev();
    let d = spec.dim() as f64;
    let xt_idx = spec.xt.index();
    match spec.mode {
        PosteriorMode::PaperEq17 => {
            let overlap = rho.get(xt_idx);
            let identity_term = (1.0 - alpha) / (d * d);
            let normalizer = alpha * overlap + identity_term;
            if normalizer <= 0.0 {
                return Err(Error::DegeneratePosterior);
            }
            let mut probs: Vec<f64> =
                rho.probs().iter().map(|&r| identity_term * r / normalizer).collect();
            probs[xt_idx] += alpha * overlap / normalizer;
            ProbVector::new(probs, spec.width())
        }
        PosteriorMode::BayesConsistent => {
            let floor = (1.0 - alpha) / d;
            let weights: Vec<f64> = rho
                .probs()
                .iter()
                .enumerate()
                .map(|(y, &r)| (alpha * f64::from(u8::from(y == xt_idx)) + floor) * r)
                .collect();
            let normalizer: f64 = weights.iter().sum();
            if normalizer <= 0.0 {
                return Err(Error::DegeneratePosterior);
            }
            ProbVector::new(weights.into_iter().map(|w| w / normalizer).collect(), spec.width())
        }
    }
}

/// Rotation angle `φ = 2·arccos(√γ1)` preparing the mixture weight on the
/// circuit ancilla.
pub fn posterior_angle_phi(spec: &PosteriorSpec) -> Result<f64> {
    let gamma1 = posterior_mixture(spec)?.gamma1;
    Ok(2.0 * gamma1.clamp(0.0, 1.0).sqrt().acos())
}

/// Cap on the posterior-preparation circuit (it needs `2N+1` qubits).
pub const CIRCUIT_SIM_WIDTH_CAP: usize = 10;

/// Simulates the posterior-preparation circuit: `Ry(φ)` on an ancilla,
/// controlled swaps between register A (prepared in `ρ_{t-1}`) and register B
/// (prepared in `|x_t>`), then the marginal of register B.
///
/// `ρ_{t-1}` is diagonal, so the mixed input is handled by linearity: one
/// pure-state run per basis state with positive weight, convexly combined in
/// index order.
pub fn posterior_circuit_sim(spec: &PosteriorSpec) -> Result<ProbVector> {
    let n = spec.width();
    if n > CIRCUIT_SIM_WIDTH_CAP {
        return Err(Error::ResourceLimit(format!(
            "posterior circuit needs {} qubits, cap is {}",
            2 * n + 1,
            2 * CIRCUIT_SIM_WIDTH_CAP + 1
        )));
    }
    let phi = posterior_angle_phi(spec)?;
    let rho = spec.rho_prev();
    let qubits = 2 * n + 1;
    let mut out = vec![0.0; 1 << n];
    for (y, &weight) in rho.probs().iter().enumerate() {
        if weight <= 0.0 {
            continue;
        }
        // |0>_anc ⊗ |y>_A ⊗ |x_t>_B
        let mut bits = vec![0u8];
        bits.extend(BitString::from_index(y, n)?.bits());
        bits.extend(spec.xt.bits());
        let mut state = StateVector::basis_state(&BitString::new(bits)?);
        state.apply_mut(&GateOp::ry(0, phi))?;
        for i in 0..n {
            state.apply_mut(&GateOp::cswap(0, 1 + i, 1 + n + i))?;
        }
        let keep: Vec<usize> = (n + 1..qubits).collect();
        let marginal = marginal_probs(&state, &keep)?;
        for (o, &m) in out.iter_mut().zip(marginal.probs()) {
            *o += weight * m;
        }
    }
    ProbVector::new(out, n)
}

/// Cap on the Choi oracle (operators are `d² x d²`, lifted to `d³`).
pub const CHOI_WIDTH_CAP: usize = 3;

/// Dense replay of the conditional-states derivation of the posterior.
///
/// Builds the channel operator `ϱ_{H_t|H_{t-1}}` from the normalized
/// maximally entangled state, the measurement operator `ϱ_{X_t|H_t}`,
/// contracts out `H_t`, rescales the conditional block so the induced
/// outcome distribution sums to one, and applies the `⋆`-product update
/// `M ⋆ N = N^{1/2} M N^{1/2}`. The diagonal of the result matches the
/// Bayes-consistent closed form.
pub fn choi_posterior_oracle(spec: &PosteriorSpec) -> Result<DenseDensityMatrix> {
    let n = spec.width();
    if n > CHOI_WIDTH_CAP {
        return Err(Error::ResourceLimit(format!(
            "choi oracle capped at {CHOI_WIDTH_CAP} data qubits, got {n}"
        )));
    }
    let d = spec.dim();
    let alpha = spec.sched.alpha(spec.t);

    // Channel operator on H_t ⊗ H_{t-1}: α_t·|Φ+><Φ+| + (1-α_t)·(I/d)⊗(I/d).
    let mut channel = DMatrix::<Complex64>::zeros(d * d, d * d);
    let phi_amp = 1.0 / d as f64; // |Φ+><Φ+| entries between |i,i> and |j,j|
    for i in 0..d {
        for j in 0..d {
            channel[(i * d + i, j * d + j)] += Complex64::new(alpha * phi_amp, 0.0);
        }
    }
    let mixed = (1.0 - alpha) / (d * d) as f64;
    for k in 0..d * d {
        channel[(k, k)] += Complex64::new(mixed, 0.0);
    }

    // Measurement operator on X_t ⊗ H_t: Σ_x |x><x| ⊗ |x><x|.
    let mut measure = DMatrix::<Complex64>::zeros(d * d, d * d);
    for x in 0..d {
        measure[(x * d + x, x * d + x)] = Complex64::ONE;
    }

    // Lift to X_t ⊗ H_t ⊗ H_{t-1}, multiply, and trace out H_t.
    let id_d = DMatrix::<Complex64>::identity(d, d);
    let lifted_measure = measure.kronecker(&id_d);
    let lifted_channel = id_d.kronecker(&channel);
    let product = &lifted_measure * &lifted_channel;
    let mut cond = DMatrix::<Complex64>::zeros(d * d, d * d); // on X_t ⊗ H_{t-1}
    for x in 0..d {
        for i in 0..d {
            for xp in 0..d {
                for j in 0..d {
                    let mut acc = Complex64::ZERO;
                    for h in 0..d {
                        acc += product[((x * d + h) * d + i, (xp * d + h) * d + j)];
                    }
                    cond[(x * d + i, xp * d + j)] = acc;
                }
            }
        }
    }

    // Prior ρ_{t-1} and the raw outcome distribution it induces.
    let rho_prev = DenseDensityMatrix::from_prob_vector(&spec.rho_prev())?;
    let block = |x: usize| -> DMatrix<Complex64> {
        let mut b = DMatrix::<Complex64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] = cond[(x * d + i, x * d + j)];
            }
        }
        b
    };
    let outcome_raw: Vec<f64> =
        (0..d).map(|x| (block(x) * rho_prev.matrix()).diagonal().sum().re).collect();
    let total: f64 = outcome_raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegeneratePosterior);
    }
    // Rescale so the induced outcome distribution sums to one (the faithful
    // contraction comes out a factor of d short).
    let scale = 1.0 / total;
    let p_xt = outcome_raw[spec.xt.index()] * scale;
    if p_xt <= 0.0 {
        return Err(Error::DegeneratePosterior);
    }

    // ⋆-product update: √ρ_{t-1} · (M_scaled / p_xt) · √ρ_{t-1}.
    let sqrt_rho = rho_prev.sqrt_psd();
    let m_scaled = block(spec.xt.index()) * Complex64::new(scale / p_xt, 0.0);
    let posterior = &sqrt_rho * m_scaled * &sqrt_rho;
    DenseDensityMatrix::new(posterior)
}

/// Brute-force classical Bayes over the joint depolarizing kernel; test and
/// verification oracle for the Bayes-consistent mode.
pub fn brute_force_bayes(spec: &PosteriorSpec) -> Result<ProbVector> {
    let alpha = spec.sched.alpha(spec.t);
    let d = spec.dim() as f64;
    let rho = spec.rho_prev();
    let xt_idx = spec.xt.index();
    let kernel = |to: usize, from: usize| -> f64 {
        alpha * f64::from(u8::from(to == from)) + (1.0 - alpha) / d
    };
    let weights: Vec<f64> =
        (0..spec.dim()).map(|y| kernel(xt_idx, y) * rho.get(y)).collect();
    let z: f64 = weights.iter().sum();
    if z <= 0.0 {
        return Err(Error::DegeneratePosterior);
    }
    ProbVector::new(weights.into_iter().map(|w| w / z).collect(), spec.width())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::cosine_schedule;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Schedule stub with directly chosen α / ᾱ values for closed-form checks:
    /// ᾱ = [1, 0.5, 0.25], α = [0.5, 0.5].
    fn half_schedule() -> NoiseSchedule {
        // T=2 with ᾱ_1 = 0.5 is not a cosine schedule; build through the
        // public API with a schedule whose values we then assert.
        // cosine_schedule cannot produce these, so tests that need exact
        // halves use spec.t = 2 on this handcrafted instance.
        crate::schedule::tests_support::handcrafted(vec![1.0, 0.5, 0.25], vec![0.5, 0.5])
    }

    fn linf(a: &ProbVector, b: &ProbVector) -> f64 {
        a.probs()
            .iter()
            .zip(b.probs())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn overlap_at_t1() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0]).unwrap();
        let other = BitString::new(vec![0, 0]).unwrap();
        let spec = PosteriorSpec::new(&x0, &x0, 1, &sched, PosteriorMode::PaperEq17).unwrap();
        assert_eq!(overlap_xt_rho(&spec), 1.0);
        let spec = PosteriorSpec::new(&x0, &other, 1, &sched, PosteriorMode::PaperEq17).unwrap();
        assert_eq!(overlap_xt_rho(&spec), 0.0);
    }

    #[test]
    fn overlap_half_case() {
        // N=2, ᾱ_{t-1} = 0.5, xt = x0: 0.5 + 0.5/4 = 0.625
        let sched = half_schedule();
        let x0 = BitString::new(vec![1, 1]).unwrap();
        let spec = PosteriorSpec::new(&x0, &x0, 2, &sched, PosteriorMode::PaperEq17).unwrap();
        assert_abs_diff_eq!(overlap_xt_rho(&spec), 0.625, epsilon = 1e-15);
    }

    #[test]
    fn posterior_at_t1_is_delta_at_x0() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![0, 1, 1]).unwrap();
        for mode in [PosteriorMode::PaperEq17, PosteriorMode::BayesConsistent] {
            for xt_idx in 0..8 {
                let xt = BitString::from_index(xt_idx, 3).unwrap();
                let spec = PosteriorSpec::new(&x0, &xt, 1, &sched, mode).unwrap();
                let post = posterior_dist(&spec).unwrap();
                assert_eq!(post.get(x0.index()), 1.0, "mode {mode} xt {xt}");
            }
        }
    }

    #[test]
    fn one_bit_half_case_both_modes() {
        // N=1, α_t = 0.5, ᾱ_{t-1} = 0.5, x0 = 0, xt = 1.
        let sched = half_schedule();
        let x0 = BitString::new(vec![0]).unwrap();
        let xt = BitString::new(vec![1]).unwrap();
        let spec = PosteriorSpec::new(&x0, &xt, 2, &sched, PosteriorMode::PaperEq17).unwrap();
        let paper = posterior_dist(&spec).unwrap();
        assert_abs_diff_eq!(paper.get(0), 0.375, epsilon = 1e-14);
        assert_abs_diff_eq!(paper.get(1), 0.625, epsilon = 1e-14);

        let spec = PosteriorSpec::new(&x0, &xt, 2, &sched, PosteriorMode::BayesConsistent).unwrap();
        let bayes = posterior_dist(&spec).unwrap();
        assert_abs_diff_eq!(bayes.get(0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(bayes.get(1), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(linf(&bayes, &brute_force_bayes(&spec).unwrap()), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mixture_reconstructs_posterior() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0, 1]).unwrap();
        let xt = BitString::new(vec![0, 0, 1]).unwrap();
        for mode in [PosteriorMode::PaperEq17, PosteriorMode::BayesConsistent] {
            for t in [2, 10, 17, 30] {
                let spec = PosteriorSpec::new(&x0, &xt, t, &sched, mode).unwrap();
                let mix = posterior_mixture(&spec).unwrap();
                assert_abs_diff_eq!(mix.gamma1 + mix.gamma2, 1.0, epsilon = 1e-12);
                assert!(mix.gamma1 >= 0.0 && mix.gamma2 >= 0.0);
                let rebuilt = mix.reconstruct().unwrap();
                let direct = posterior_dist(&spec).unwrap();
                assert!(linf(&rebuilt, &direct) < 1e-12, "mode {mode} t={t}");
            }
        }
    }

    #[test]
    fn mixture_gamma_one_bit_case() {
        // γ1 = α·ov / (α·ov + (1-α)/d²) = 0.125 / 0.25 = 0.5 for the N=1 case.
        let sched = half_schedule();
        let x0 = BitString::new(vec![0]).unwrap();
        let xt = BitString::new(vec![1]).unwrap();
        let spec = PosteriorSpec::new(&x0, &xt, 2, &sched, PosteriorMode::PaperEq17).unwrap();
        let mix = posterior_mixture(&spec).unwrap();
        assert_abs_diff_eq!(mix.gamma1, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn angle_endpoints_and_roundtrip() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1]).unwrap();
        // t=1, xt=x0: γ1 = α·1/(α·1 + ...) with overlap 1 — not exactly 1;
        // check the algebraic round-trip instead across several specs.
        for t in [1, 5, 15, 30] {
            for xt_idx in 0..2 {
                let xt = BitString::from_index(xt_idx, 1).unwrap();
                let spec =
                    PosteriorSpec::new(&x0, &xt, t, &sched, PosteriorMode::PaperEq17).unwrap();
                let gamma1 = posterior_mixture(&spec).unwrap().gamma1;
                let phi = posterior_angle_phi(&spec).unwrap();
                assert_abs_diff_eq!((phi / 2.0).cos().powi(2), gamma1, epsilon = 1e-12);
            }
        }
        // γ1 = 0.8 numeric case
        let phi = 2.0 * (0.8f64).sqrt().acos();
        assert_abs_diff_eq!((phi / 2.0).cos().powi(2), 0.8, epsilon = 1e-15);
        // endpoints
        assert_abs_diff_eq!(2.0 * (1.0f64).sqrt().acos(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(2.0 * (0.0f64).sqrt().acos(), PI, epsilon = 1e-15);
    }

    #[test]
    fn circuit_matches_formula_one_bit_case() {
        let sched = half_schedule();
        let x0 = BitString::new(vec![0]).unwrap();
        let xt = BitString::new(vec![1]).unwrap();
        let spec = PosteriorSpec::new(&x0, &xt, 2, &sched, PosteriorMode::PaperEq17).unwrap();
        let sim = posterior_circuit_sim(&spec).unwrap();
        assert_abs_diff_eq!(sim.get(0), 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(sim.get(1), 0.625, epsilon = 1e-12);
    }

    #[test]
    fn circuit_at_t1_is_delta() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0]).unwrap();
        let spec = PosteriorSpec::new(&x0, &x0, 1, &sched, PosteriorMode::PaperEq17).unwrap();
        let sim = posterior_circuit_sim(&spec).unwrap();
        assert_abs_diff_eq!(sim.get(x0.index()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn choi_oracle_one_bit_case() {
        let sched = half_schedule();
        let x0 = BitString::new(vec![0]).unwrap();
        let xt = BitString::new(vec![1]).unwrap();
        let spec =
            PosteriorSpec::new(&x0, &xt, 2, &sched, PosteriorMode::BayesConsistent).unwrap();
        let dm = choi_posterior_oracle(&spec).unwrap();
        let diag = dm.diagonal_reals();
        assert_abs_diff_eq!(diag[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(diag[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn choi_oracle_t1_is_projector_on_x0() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0]).unwrap();
        let spec =
            PosteriorSpec::new(&x0, &x0, 1, &sched, PosteriorMode::BayesConsistent).unwrap();
        let dm = choi_posterior_oracle(&spec).unwrap();
        assert_abs_diff_eq!(dm.matrix()[(x0.index(), x0.index())].re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn argmax_agreement_when_xt_equals_x0() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 1]).unwrap();
        for mode in [PosteriorMode::PaperEq17, PosteriorMode::BayesConsistent] {
            for t in 2..=29 {
                let spec = PosteriorSpec::new(&x0, &x0, t, &sched, mode).unwrap();
                let post = posterior_dist(&spec).unwrap();
                let max = post.probs().iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(post.get(x0.index()), max, "mode {mode} t={t}");
            }
        }
    }

    #[test]
    fn marginal_consistency_of_bayes_mode() {
        // Σ_{x_t} q(x_t|x_0)·post(y|x_t,x_0) = q(x_{t-1}=y|x_0), Bayes mode only.
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0, 1]).unwrap();
        for t in [2, 9, 21, 30] {
            let fwd_t = crate::diffusion::forward_dist(&x0, t, &sched).unwrap();
            let fwd_prev = crate::diffusion::forward_dist(&x0, t - 1, &sched).unwrap();
            let mut mix = vec![0.0; fwd_t.dim()];
            for xt_idx in 0..fwd_t.dim() {
                let xt = BitString::from_index(xt_idx, 3).unwrap();
                let spec =
                    PosteriorSpec::new(&x0, &xt, t, &sched, PosteriorMode::BayesConsistent)
                        .unwrap();
                let post = posterior_dist(&spec).unwrap();
                for (m, &p) in mix.iter_mut().zip(post.probs()) {
                    *m += fwd_t.get(xt_idx) * p;
                }
            }
            for (a, b) in mix.iter().zip(fwd_prev.probs()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_posterior_is_an_error() {
        // α_t = 1 with ρ_{t-1}(x_t) = 0: force through a handcrafted schedule.
        let sched = crate::schedule::tests_support::handcrafted(vec![1.0, 1.0, 0.5], vec![1.0, 0.5]);
        let x0 = BitString::new(vec![0]).unwrap();
        let xt = BitString::new(vec![1]).unwrap();
        // at t=1: ᾱ_0 = 1 so ρ_0 = |x0><x0| and α_1 = 1 — conditioning on xt≠x0
        let spec = PosteriorSpec::new(&x0, &xt, 1, &sched, PosteriorMode::PaperEq17).unwrap();
        assert_eq!(posterior_dist(&spec), Err(Error::DegeneratePosterior));
        let spec =
            PosteriorSpec::new(&x0, &xt, 1, &sched, PosteriorMode::BayesConsistent).unwrap();
        assert_eq!(posterior_dist(&spec), Err(Error::DegeneratePosterior));
    }
}
