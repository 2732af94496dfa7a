//! Target distributions: bars-and-stripes grids, a bimodal mixed Gaussian
//! over bitstring-encoded integers, and the fully correlated two-point
//! dataset used for the factorization-gap analysis.

use crate::error::{Error, Result};
use crate::sim::{BitString, ProbVector};
use rand::Rng;

/// Soft cap on bars-and-stripes grid size; override with
/// [`bas_distribution_with_limit`] when a larger grid is really wanted.
pub const BAS_DEFAULT_BIT_LIMIT: usize = 10;

/// Per-dimension bijection of the fully correlated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bijection {
    Identity,
    Not,
}

impl Bijection {
    fn apply(self, bit: u8) -> u8 {
        match self {
            Bijection::Identity => bit,
            Bijection::Not => 1 - bit,
        }
    }
}

/// A named target distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Bas { rows: usize, cols: usize },
    MixedGaussian { n: usize },
    Dfc { n: usize, bijections: Vec<Bijection> },
}

impl DatasetSpec {
    pub fn n(&self) -> usize {
        match self {
            DatasetSpec::Bas { rows, cols } => rows * cols,
            DatasetSpec::MixedGaussian { n } => *n,
            DatasetSpec::Dfc { n, .. } => *n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DatasetSpec::Bas { .. } => "bas",
            DatasetSpec::MixedGaussian { .. } => "mixed-gaussian",
            DatasetSpec::Dfc { .. } => "dfc",
        }
    }

    pub fn distribution(&self) -> Result<ProbVector> {
        match self {
            DatasetSpec::Bas { rows, cols } => bas_distribution(*rows, *cols),
            DatasetSpec::MixedGaussian { n } => mixed_gaussian_distribution(*n),
            DatasetSpec::Dfc { n, bijections } => dfc_distribution(*n, bijections),
        }
    }
}

/// Grid shape used for an `n`-bit bars-and-stripes problem. The paper never
/// states its shapes; these are the documented choices with the smaller side
/// at most 3.
pub fn bas_grid_shape(n: usize) -> Option<(usize, usize)> {
    match n {
        4 => Some((2, 2)),
        6 => Some((2, 3)),
        8 => Some((2, 4)),
        9 => Some((3, 3)),
        10 => Some((2, 5)),
        _ => None,
    }
}

/// True when the row-major grid is a bar (constant columns) or stripe
/// (constant rows) pattern.
pub fn is_bar_or_stripe(bits: &BitString, rows: usize, cols: usize) -> bool {
    assert_eq!(bits.width(), rows * cols, "grid shape mismatch");
    let at = |r: usize, c: usize| bits.bit(r * cols + c);
    let constant_rows = (0..rows).all(|r| (1..cols).all(|c| at(r, c) == at(r, 0)));
    let constant_cols = (0..cols).all(|c| (1..rows).all(|r| at(r, c) == at(0, c)));
    constant_rows || constant_cols
}

/// Uniform distribution over all bar and stripe patterns of a `rows x cols`
/// grid; `2^rows + 2^cols - 2` patterns in total (the all-zero and all-one
/// grids are both bars and stripes). Pixels map to bits row-major.
pub fn bas_distribution(rows: usize, cols: usize) -> Result<ProbVector> {
    bas_distribution_with_limit(rows, cols, BAS_DEFAULT_BIT_LIMIT)
}

/// As [`bas_distribution`] with an explicit bit limit.
pub fn bas_distribution_with_limit(
    rows: usize,
    cols: usize,
    max_bits: usize,
) -> Result<ProbVector> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid sides must be at least 1".into()));
    }
    let n = rows * cols;
    if n > max_bits {
        return Err(Error::ResourceLimit(format!(
            "bars-and-stripes grid has {n} bits, limit is {max_bits}"
        )));
    }
    let d = 1usize << n;
    let mut support = vec![false; d];
    // stripes: one bit per row
    for pattern in 0..(1usize << rows) {
        let mut idx = 0usize;
        for r in 0..rows {
            let bit = (pattern >> (rows - 1 - r)) & 1;
            for _ in 0..cols {
                idx = (idx << 1) | bit;
            }
        }
        support[idx] = true;
    }
    // bars: one bit per column
    for pattern in 0..(1usize << cols) {
        let mut idx = 0usize;
        for _ in 0..rows {
            for c in 0..cols {
                idx = (idx << 1) | ((pattern >> (cols - 1 - c)) & 1);
            }
        }
        support[idx] = true;
    }
    let count = support.iter().filter(|&&s| s).count();
    debug_assert_eq!(count, (1 << rows) + (1 << cols) - 2);
    let mass = 1.0 / count as f64;
    let probs = support.iter().map(|&s| if s { mass } else { 0.0 }).collect();
    ProbVector::new(probs, n)
}

/// Bimodal distribution `π(x) ∝ e^{-((x-μ1)/ν)²/2} + e^{-((x-μ2)/ν)²/2}` over
/// integers `x ∈ {1..2^N}` with `ν = x_max/8`, `μ1 = (2/7)·x_max`,
/// `μ2 = (5/7)·x_max`; the integer `x` is encoded as the bitstring of `x-1`.
pub fn mixed_gaussian_distribution(n: usize) -> Result<ProbVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one bit".into()));
    }
    let x_max = (1usize << n) as f64;
    let nu = x_max / 8.0;
    let mu1 = 2.0 / 7.0 * x_max;
    let mu2 = 5.0 / 7.0 * x_max;
    let weights: Vec<f64> = (1..=(1usize << n))
        .map(|x| {
            let x = x as f64;
            let z1 = (x - mu1) / nu;
            let z2 = (x - mu2) / nu;
            (-0.5 * z1 * z1).exp() + (-0.5 * z2 * z2).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    ProbVector::new(weights.into_iter().map(|w| w / total).collect(), n)
}

/// The fully correlated dataset: the first dimension is a fair bit and every
/// other dimension is a fixed bijection of it, so exactly two strings carry
/// probability 1/2 each.
pub fn dfc_distribution(n: usize, bijections: &[Bijection]) -> Result<ProbVector> {
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one dimension".into()));
    }
    if bijections.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected {} bijections for {n} dimensions, got {}",
            n - 1,
            bijections.len()
        )));
    }
    let mut probs = vec![0.0; 1 << n];
    for first in 0..2u8 {
        let mut bits = vec![first];
        bits.extend(bijections.iter().map(|f| f.apply(first)));
        probs[BitString::new(bits)?.index()] = 0.5;
    }
    ProbVector::new(probs, n)
}

/// I.i.d. draws from a distribution; deterministic given the generator.
pub fn sample_dataset<R: Rng>(dist: &ProbVector, count: usize, rng: &mut R) -> Vec<BitString> {
    (0..count).map(|_| dist.sample(rng)).collect()
}
