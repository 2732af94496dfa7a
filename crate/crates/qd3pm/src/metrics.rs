//! Exact divergences and entropy decompositions, all in nats.
//!
//! KL against a distribution with missing support returns the `+∞` sentinel
//! rather than clipping. Conversions to bits happen only at reporting time.

use crate::baseline::product_of_marginals;
use crate::datasets::{dfc_distribution, Bijection};
use crate::error::{Error, Result};
use crate::sim::{BitString, ProbVector};

fn check_widths(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.width() != q.width() {
        return Err(Error::DimensionMismatch(format!(
            "width {} vs {}",
            p.width(),
            q.width()
        )));
    }
    Ok(())
}

/// `Σ p·ln(p/q)` with `0·ln(0/·) = 0`; `+∞` if `p` has mass where `q` has none.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_widths(p, q)?;
    let mut acc = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok(acc)
}

/// Total variation distance `(1/2)·Σ|p - q| ∈ [0, 1]`.
pub fn tv_distance(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_widths(p, q)?;
    Ok(p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

/// Shannon entropy in nats.
pub fn entropy(p: &ProbVector) -> f64 {
    p.probs().iter().filter(|&&pi| pi > 0.0).map(|&pi| -pi * pi.ln()).sum()
}

/// Total correlation `Σ_i H(marginal_i) - H(p)`: the mutual information shared
/// across all dimensions, and exactly the KL from `p` to its product of
/// marginals.
pub fn mutual_information_total(p: &ProbVector) -> f64 {
    let marginal_sum: f64 = (0..p.width())
        .map(|i| {
            let m = p.bit_marginal(i);
            m.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum::<f64>()
        })
        .sum();
    marginal_sum - entropy(p)
}

/// Normalized counts of a sample list.
pub fn empirical_distribution(samples: &[BitString], width: usize) -> Result<ProbVector> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample list".into()));
    }
    let mut counts = vec![0usize; 1 << width];
    for s in samples {
        if s.width() != width {
            return Err(Error::DimensionMismatch(format!(
                "sample width {} vs {width}",
                s.width()
            )));
        }
        counts[s.index()] += 1;
    }
    let total = samples.len() as f64;
    ProbVector::new(counts.into_iter().map(|c| c as f64 / total).collect(), width)
}

/// One row of the factorization-gap report.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Row {
    pub n: usize,
    /// "joint" (ideal joint model, KL exactly 0) or "factorized".
    pub model: &'static str,
    pub measured_nats: f64,
    pub predicted_nats: f64,
    pub abs_diff: f64,
}

/// Per-`N` comparison of the measured KL from the fully correlated dataset to
/// its product of marginals against the predicted `(N-1)·ln 2`, plus the
/// ideal joint-model row at exactly zero.
pub fn theorem1_report(n_values: &[usize]) -> Result<Vec<Theorem1Row>> {
    let mut rows = Vec::with_capacity(n_values.len() * 2);
    for &n in n_values {
        if n > 10 {
            return Err(Error::ResourceLimit(format!("theorem1 report capped at N=10, got {n}")));
        }
        // alternate bijections to exercise more than the identity instance
        let bijections: Vec<Bijection> = (0..n.saturating_sub(1))
            .map(|j| if j % 2 == 0 { Bijection::Not } else { Bijection::Identity })
            .collect();
        let p = dfc_distribution(n, &bijections)?;
        let joint_kl = kl_divergence(&p, &p)?;
        rows.push(Theorem1Row {
            n,
            model: "joint",
            measured_nats: joint_kl,
            predicted_nats: 0.0,
            abs_diff: joint_kl.abs(),
        });
        let factorized = product_of_marginals(&p);
        let measured = kl_divergence(&p, &factorized)?;
        let predicted = (n as f64 - 1.0) * std::f64::consts::LN_2;
        rows.push(Theorem1Row {
            n,
            model: "factorized",
            measured_nats: measured,
            predicted_nats: predicted,
            abs_diff: (measured - predicted).abs(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn random_dist(width: usize, rng: &mut ChaCha8Rng) -> ProbVector {
        let raw: Vec<f64> = (0..1usize << width).map(|_| rng.gen::<f64>() + 1e-6).collect();
        let total: f64 = raw.iter().sum();
        ProbVector::new(raw.into_iter().map(|x| x / total).collect(), width).unwrap()
    }

    /// Second, independently coded KL route: Σ p·ln p − Σ p·ln q.
    fn kl_oracle(p: &ProbVector, q: &ProbVector) -> f64 {
        let a: f64 = p.probs().iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
        let b: f64 = p
            .probs()
            .iter()
            .zip(q.probs())
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &qi)| pi * qi.ln())
            .sum();
        a - b
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = ProbVector::new(vec![0.25, 0.75], 1).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_of_dfc_to_its_marginal_product_is_ln2() {
        let p = dfc_distribution(2, &[Bijection::Identity]).unwrap();
        let q = product_of_marginals(&p);
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), LN_2, epsilon = 1e-12);
    }

    #[test]
    fn kl_matches_independent_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for width in 1..=6 {
            let p = random_dist(width, &mut rng);
            let q = random_dist(width, &mut rng);
            assert_abs_diff_eq!(
                kl_divergence(&p, &q).unwrap(),
                kl_oracle(&p, &q),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn kl_missing_support_is_infinite() {
        let p = ProbVector::new(vec![0.5, 0.5], 1).unwrap();
        let q = ProbVector::delta(1, 0);
        assert_eq!(kl_divergence(&p, &q).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tv_basics() {
        let p = ProbVector::new(vec![0.7, 0.3], 1).unwrap();
        let u = ProbVector::uniform(1);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(tv_distance(&p, &u).unwrap(), 0.2, epsilon = 1e-15);
        let a = ProbVector::delta(1, 0);
        let b = ProbVector::delta(1, 1);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn entropy_and_mi_of_uniform() {
        for n in 1..=4 {
            let u = ProbVector::uniform(n);
            assert_abs_diff_eq!(entropy(&u), n as f64 * LN_2, epsilon = 1e-12);
            assert_abs_diff_eq!(mutual_information_total(&u), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mi_of_dfc_matches_theorem() {
        for n in 2..=6 {
            let bijections: Vec<Bijection> = (0..n - 1).map(|_| Bijection::Not).collect();
            let p = dfc_distribution(n, &bijections).unwrap();
            assert_abs_diff_eq!(entropy(&p), LN_2, epsilon = 1e-12);
            assert_abs_diff_eq!(
                mutual_information_total(&p),
                (n as f64 - 1.0) * LN_2,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mi_equals_kl_to_marginal_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let width = rng.gen_range(1..=8);
            let p = random_dist(width, &mut rng);
            let q = product_of_marginals(&p);
            assert_abs_diff_eq!(
                mutual_information_total(&p),
                kl_divergence(&p, &q).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn empirical_distribution_basics() {
        let s = BitString::new(vec![1, 0]).unwrap();
        let dist = empirical_distribution(&vec![s.clone(); 10], 2).unwrap();
        assert_eq!(dist.get(2), 1.0);
        assert!(empirical_distribution(&[], 2).is_err());
    }

    #[test]
    fn empirical_distribution_converges() {
        let target = ProbVector::new(vec![0.5, 0.125, 0.25, 0.125], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let samples: Vec<BitString> = (0..draws).map(|_| target.sample(&mut rng)).collect();
        let emp = empirical_distribution(&samples, 2).unwrap();
        for i in 0..4 {
            let p = target.get(i);
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((emp.get(i) - p).abs() <= 3.0 * sigma, "outcome {i}");
        }
    }

    #[test]
    fn theorem1_rows() {
        let rows = theorem1_report(&[2, 10]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].model, "joint");
        assert_eq!(rows[0].measured_nats, 0.0);
        assert_abs_diff_eq!(rows[1].measured_nats, LN_2, epsilon = 1e-9);
        assert!(rows[1].abs_diff < 1e-9);
        assert_abs_diff_eq!(rows[3].measured_nats, 9.0 * LN_2, epsilon = 1e-9);
    }
}
