//! Depolarizing forward diffusion over joint distributions.
//!
//! A depolarizing channel with retention `α` maps `ρ` to
//! `(1-α)·I/d + α·ρ`. Diagonal inputs stay diagonal, so the whole forward
//! process acts on probability vectors; the dense form exists only as an
//! oracle. Composing channels multiplies retentions, which is what makes the
//! closed form `ρ_t = (1-ᾱ_t)·I/d + ᾱ_t·|x_0><x_0|` valid at every `t`.

use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;
use crate::sim::{BitString, DenseDensityMatrix, ProbVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// A forward-process distribution at a fixed timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState {
    pub dist: ProbVector,
    pub t: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0,1], got {alpha}")));
    }
    Ok(())
}

/// One application of the depolarizing channel to a diagonal state:
/// entry `i` becomes `alpha·p[i] + (1-alpha)/d`.
pub fn depolarize_prob(p: &ProbVector, alpha: f64) -> Result<ProbVector> {
    check_alpha(alpha)?;
    let d = p.dim() as f64;
    let floor = (1.0 - alpha) / d;
    let probs = p.probs().iter().map(|&pi| alpha * pi + floor).collect();
    ProbVector::new(probs, p.width())
}

/// Closed-form distribution of `x_t` given clean data `x_0`:
/// mass `ᾱ_t + (1-ᾱ_t)/d` on `x_0` and `(1-ᾱ_t)/d` elsewhere.
pub fn forward_dist(x0: &BitString, t: usize, sched: &NoiseSchedule) -> Result<ProbVector> {
    if t > sched.t_steps() {
        return Err(Error::InvalidArgument(format!(
            "timestep {t} out of range 0..={}",
            sched.t_steps()
        )));
    }
    let alpha_bar = sched.alpha_bar(t);
    let d = 1usize << x0.width();
    let floor = (1.0 - alpha_bar) / d as f64;
    let mut probs = vec![floor; d];
    probs[x0.index()] += alpha_bar;
    ProbVector::new(probs, x0.width())
}

/// Draws `x_t ~ q(x_t | x_0)` by inverse CDF over the two-level closed form,
/// in O(1) instead of scanning all `2^N` outcomes.
pub fn sample_xt<R: Rng>(
    x0: &BitString,
    t: usize,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<BitString> {
    if t > sched.t_steps() {
        return Err(Error::InvalidArgument(format!(
            "timestep {t} out of range 0..={}",
            sched.t_steps()
        )));
    }
    let alpha_bar = sched.alpha_bar(t);
    let width = x0.width();
    let d = 1usize << width;
    let peak = x0.index();
    let floor = (1.0 - alpha_bar) / d as f64;

    // CDF of "uniform floor everywhere plus extra mass ᾱ at the peak".
    let u: f64 = rng.gen::<f64>();
    let below_peak = peak as f64 * floor;
    let idx = if u < below_peak {
        (u / floor) as usize
    } else if u < below_peak + floor + alpha_bar {
        peak
    } else {
        ((u - alpha_bar) / floor) as usize
    };
    BitString::from_index(idx.min(d - 1), width)
}

/// Dense-oracle form of [`depolarize_prob`]: `(1-alpha)·I/d + alpha·ρ`.
pub fn dm_depolarize(dm: &DenseDensityMatrix, alpha: f64) -> Result<DenseDensityMatrix> {
    check_alpha(alpha)?;
    let d = dm.dim();
    let floor = Complex64::new((1.0 - alpha) / d as f64, 0.0);
    let mixed = DMatrix::<Complex64>::identity(d, d) * floor;
    let out = dm.matrix() * Complex64::new(alpha, 0.0) + mixed;
    DenseDensityMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::cosine_schedule;
    use approx::assert_abs_diff_eq;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_one_is_identity() {
        let p = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4], 2).unwrap();
        let out = depolarize_prob(&p, 1.0).unwrap();
        assert_eq!(out.probs(), p.probs());
    }

    #[test]
    fn alpha_zero_is_uniform() {
        let p = ProbVector::delta(2, 1);
        let out = depolarize_prob(&p, 0.0).unwrap();
        for &v in out.probs() {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn half_depolarized_delta() {
        let p = ProbVector::delta(2, 0);
        let out = depolarize_prob(&p, 0.5).unwrap();
        assert_eq!(out.probs(), &[0.625, 0.125, 0.125, 0.125]);
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        let p = ProbVector::uniform(1);
        assert!(depolarize_prob(&p, -0.1).is_err());
        assert!(depolarize_prob(&p, 1.1).is_err());
    }

    #[test]
    fn forward_endpoints() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0, 1]).unwrap();
        let at0 = forward_dist(&x0, 0, &sched).unwrap();
        assert_eq!(at0.get(x0.index()), 1.0);
        let at_t = forward_dist(&x0, 30, &sched).unwrap();
        for &v in at_t.probs() {
            assert_eq!(v, 0.125);
        }
        assert!(forward_dist(&x0, 31, &sched).is_err());
    }

    #[test]
    fn folding_single_steps_matches_closed_form() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![0, 1, 1, 0]).unwrap();
        let mut p = ProbVector::delta(4, x0.index());
        for t in 1..=30 {
            p = depolarize_prob(&p, sched.alpha(t)).unwrap();
            let closed = forward_dist(&x0, t, &sched).unwrap();
            for (a, b) in p.probs().iter().zip(closed.probs()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn depolarize_semigroup() {
        let p = ProbVector::new(vec![0.4, 0.1, 0.25, 0.25], 2).unwrap();
        let (a, b) = (0.7, 0.3);
        let two_step = depolarize_prob(&depolarize_prob(&p, a).unwrap(), b).unwrap();
        let one_step = depolarize_prob(&p, a * b).unwrap();
        for (x, y) in two_step.probs().iter().zip(one_step.probs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_is_a_fixed_point() {
        let p = ProbVector::uniform(3);
        let out = depolarize_prob(&p, 0.37).unwrap();
        for &v in out.probs() {
            assert_abs_diff_eq!(v, 0.125, epsilon = 1e-15);
        }
    }

    #[test]
    fn sample_at_t0_is_x0() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 1, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            assert_eq!(sample_xt(&x0, 0, &sched, &mut rng).unwrap(), x0);
        }
    }

    #[test]
    fn sample_frequencies_match_closed_form() {
        let sched = cosine_schedule(30, 0.008).unwrap();
        let x0 = BitString::new(vec![1, 0, 1, 0]).unwrap();
        let draws = 100_000;
        for t in [15, 30] {
            let expected = forward_dist(&x0, t, &sched).unwrap();
            let mut counts = vec![0usize; expected.dim()];
            let mut rng = ChaCha8Rng::seed_from_u64(4242);
            for _ in 0..draws {
                counts[sample_xt(&x0, t, &sched, &mut rng).unwrap().index()] += 1;
            }
            for (i, &c) in counts.iter().enumerate() {
                let p = expected.get(i);
                let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
                assert!(
                    ((c as f64) - draws as f64 * p).abs() <= 3.0 * sigma,
                    "t={t} outcome {i}: count {c}, expected {}",
                    draws as f64 * p
                );
            }
        }
    }

    #[test]
    fn dense_depolarize_matches_diagonal_path() {
        let p = ProbVector::new(vec![0.4, 0.1, 0.25, 0.25], 2).unwrap();
        let dm = DenseDensityMatrix::from_prob_vector(&p).unwrap();
        let alpha = 0.6;
        let dense = dm_depolarize(&dm, alpha).unwrap();
        let diag = depolarize_prob(&p, alpha).unwrap();
        for (a, b) in dense.diagonal_reals().iter().zip(diag.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        assert!(dense.max_offdiagonal() < 1e-14);
    }

    #[test]
    fn dense_depolarize_endpoints() {
        let p = ProbVector::new(vec![0.7, 0.3], 1).unwrap();
        let dm = DenseDensityMatrix::from_prob_vector(&p).unwrap();
        let same = dm_depolarize(&dm, 1.0).unwrap();
        assert_eq!(same.matrix(), dm.matrix());
        let mixed = dm_depolarize(&dm, 0.0).unwrap();
        assert_abs_diff_eq!(mixed.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mixed.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
    }
}
