//! Gaussian kernels over bitstrings and the exact-distribution MMD.
//!
//! The kernel distance is the squared Euclidean distance between bit vectors,
//! which for binary data is the Hamming distance. With full distributions
//! available from simulation, the MMD's three expectation terms collapse to
//! the quadratic form `(p-q)ᵀ K (p-q)`.

use crate::error::{Error, Result};
use crate::sim::ProbVector;

/// How a bandwidth list enters the gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelCombine {
    /// One bandwidth.
    Single,
    /// Arithmetic mean of the per-bandwidth kernels.
    Mean,
}

/// Bandwidth scale factors of the default multi-bandwidth kernel; multiplied
/// by the data dimension `N`.
pub const DEFAULT_BANDWIDTH_SCALES: [f64; 6] = [0.01, 0.1, 0.25, 0.5, 1.0, 10.0];

/// The default bandwidth list for `n`-bit data.
pub fn default_bandwidths(n: usize) -> Vec<f64> {
    DEFAULT_BANDWIDTH_SCALES.iter().map(|s| s * n as f64).collect()
}

/// A precomputed `d x d` gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    bandwidths: Vec<f64>,
    combine: KernelCombine,
    gram: Vec<f64>,
    width: usize,
}

impl KernelSpec {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn combine(&self) -> KernelCombine {
        self.combine
    }

    /// Row-major gram matrix.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// `K·v` for a length-`d` vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = 1usize << self.width;
        debug_assert_eq!(v.len(), d);
        let mut out = vec![0.0; d];
        for (x, o) in out.iter_mut().enumerate() {
            let row = &self.gram[x * d..(x + 1) * d];
            *o = row.iter().zip(v).map(|(k, vi)| k * vi).sum();
        }
        out
    }
}

/// Builds the gram matrix `K[x][y] = mean_σ exp(-H(x,y)/(2σ²))` over `n`-bit
/// strings, `H` the Hamming distance.
pub fn build_kernel(n: usize, bandwidths: &[f64], combine: KernelCombine) -> Result<KernelSpec> {
    if n == 0 || n >= usize::BITS as usize {
        return Err(Error::InvalidArgument(format!("unsupported width {n}")));
    }
    if bandwidths.is_empty() {
        return Err(Error::InvalidArgument("need at least one bandwidth".into()));
    }
    if combine == KernelCombine::Single && bandwidths.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "single-bandwidth kernel got {} bandwidths",
            bandwidths.len()
        )));
    }
    if bandwidths.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("bandwidths must be positive".into()));
    }
    let d = 1usize << n;
    // precompute per-Hamming-weight values; H(x,y) = popcount(x XOR y)
    let per_distance: Vec<f64> = (0..=n)
        .map(|h| {
            bandwidths
                .iter()
                .map(|&sigma| (-(h as f64) / (2.0 * sigma * sigma)).exp())
                .sum::<f64>()
                / bandwidths.len() as f64
        })
        .collect();
    let mut gram = vec![0.0; d * d];
    for x in 0..d {
        for y in 0..d {
            gram[x * d + y] = per_distance[(x ^ y).count_ones() as usize];
        }
    }
    Ok(KernelSpec { bandwidths: bandwidths.to_vec(), combine, gram, width: n })
}

/// Exact-distribution MMD `(p-q)ᵀ K (p-q)`; non-negative up to rounding and
/// symmetric in its arguments.
pub fn mmd_loss(p: &ProbVector, q: &ProbVector, kernel: &KernelSpec) -> Result<f64> {
    if p.width() != q.width() || p.width() != kernel.width() {
        return Err(Error::DimensionMismatch(format!(
            "widths p={} q={} kernel={}",
            p.width(),
            q.width(),
            kernel.width()
        )));
    }
    let diff: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| a - b).collect();
    let kd = kernel.apply(&diff);
    Ok(diff.iter().zip(&kd).map(|(a, b)| a * b).sum())
}
