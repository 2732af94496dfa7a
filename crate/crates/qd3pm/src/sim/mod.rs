//! Simulation primitives: bitstrings, probability vectors, statevectors with
//! gate kernels, and a dense density-matrix path.
//!
//! Bit and qubit ordering is big-endian throughout: dimension 1 of a data
//! point is the most significant bit and lives on qubit 0, so the basis state
//! `|b_0 b_1 ... b_{n-1}>` has integer index `Σ_i b_i · 2^(n-1-i)`. Every
//! round-trip in the crate assumes this single convention.
//!
//! The statevector path is the workhorse; the dense path exists to verify it
//! and is capped at [`dense::DENSE_QUBIT_CAP`] qubits.

mod dense;
mod gates;

pub use dense::{dm_from_statevector, dm_partial_trace, DenseDensityMatrix, DENSE_QUBIT_CAP};
pub use gates::{apply_gate, marginal_probs, GateKind, GateOp, StateVector};

use crate::error::{Error, Result};
use rand::Rng;
use std::fmt;

/// An `N`-dimensional binary sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    /// Builds from explicit digits; every digit must be 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("bitstring must be non-empty".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bitstring digits must be 0 or 1".into()));
        }
        Ok(BitString { bits })
    }

    /// The all-zero string of the given width.
    pub fn zeros(width: usize) -> Self {
        BitString { bits: vec![0; width] }
    }

    /// Decodes a big-endian integer index into a width-`width` string.
    pub fn from_index(index: usize, width: usize) -> Result<Self> {
        if width == 0 || width >= usize::BITS as usize {
            return Err(Error::InvalidArgument(format!("unsupported width {width}")));
        }
        if index >= (1 << width) {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range for width {width}"
            )));
        }
        let bits = (0..width).map(|i| ((index >> (width - 1 - i)) & 1) as u8).collect();
        Ok(BitString { bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    /// Big-endian integer index of this string.
    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidArgument(format!("invalid bit character '{c}'"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitString::new(bits)
    }
}

/// Tolerance on the sum of a probability vector.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// A length-`2^N` probability distribution over `N`-bit strings; the diagonal
/// representation of every diffusion-process density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
    width: usize,
}

impl ProbVector {
    /// Validates length, non-negativity and normalization. Entries within
    /// `-1e-12` of zero are clamped to zero.
    pub fn new(mut probs: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 || width >= usize::BITS as usize {
            return Err(Error::InvalidArgument(format!("unsupported width {width}")));
        }
        if probs.len() != 1 << width {
            return Err(Error::DimensionMismatch(format!(
                "expected 2^{width} = {} entries, got {}",
                1usize << width,
                probs.len()
            )));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite entry {p}")));
            }
            if *p < 0.0 {
                if *p < -1e-12 {
                    return Err(Error::InvalidDistribution(format!("negative entry {p}")));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("sum {sum} != 1")));
        }
        Ok(ProbVector { probs, width })
    }

    /// The uniform distribution over `2^width` outcomes.
    pub fn uniform(width: usize) -> Self {
        let d = 1usize << width;
        ProbVector { probs: vec![1.0 / d as f64; d], width }
    }

    /// A point mass on the given outcome.
    pub fn delta(width: usize, index: usize) -> Self {
        let d = 1usize << width;
        assert!(index < d, "delta index out of range");
        let mut probs = vec![0.0; d];
        probs[index] = 1.0;
        ProbVector { probs, width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of outcomes, `2^width`.
    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn get_bits(&self, x: &BitString) -> f64 {
        self.probs[x.index()]
    }

    /// Inverse-CDF draw. Deterministic given the generator state.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> BitString {
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        let mut chosen = self.probs.len() - 1;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        BitString::from_index(chosen, self.width).expect("index in range")
    }

    /// Marginal distribution of bit `i` as `[P(0), P(1)]`.
    pub fn bit_marginal(&self, i: usize) -> [f64; 2] {
        assert!(i < self.width);
        let shift = self.width - 1 - i;
        let mut m = [0.0; 2];
        for (idx, &p) in self.probs.iter().enumerate() {
            m[(idx >> shift) & 1] += p;
        }
        m
    }
}
