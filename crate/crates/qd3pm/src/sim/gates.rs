//! Pure-state simulation: strided gate kernels and marginal extraction.
//!
//! Gates operate in place over amplitude pairs rather than through full
//! matrices; with big-endian ordering, qubit `q` of an `n`-qubit register
//! owns bit mask `1 << (n - 1 - q)`.
//!
//! Rotation conventions: `Rx(θ) = exp(-iθX/2)`, `Ry(θ) = exp(-iθY/2)`,
//! `Rz(θ) = exp(-iθZ/2)`, and `ZZ(v) = exp(-iv(Z⊗Z)/2)`. `R3` is the
//! composite `Rx`-then-`Ry`-then-`Rx` with one angle per factor in
//! application order. Global phase is not contractual anywhere.

use super::{BitString, ProbVector};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Norm tolerance accepted when constructing a state from raw amplitudes.
const NORM_TOL: f64 = 1e-10;

/// Complex amplitudes of an `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubit_count: usize,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        assert!(n >= 1 && n < 28, "unsupported qubit count {n}");
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[0] = Complex64::ONE;
        StateVector { amps, qubit_count: n }
    }

    /// The computational basis state `|x>`.
    pub fn basis_state(x: &BitString) -> Self {
        let mut s = Self::zero_state(x.width());
        s.amps[0] = Complex64::ZERO;
        s.amps[x.index()] = Complex64::ONE;
        s
    }

    /// Builds from raw amplitudes; the norm must be 1 within `1e-10`.
    pub fn new(amps: Vec<Complex64>, qubit_count: usize) -> Result<Self> {
        if qubit_count == 0 || amps.len() != 1 << qubit_count {
            return Err(Error::DimensionMismatch(format!(
                "expected 2^{qubit_count} amplitudes, got {}",
                amps.len()
            )));
        }
        let s = StateVector { amps, qubit_count };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("state norm {norm} != 1")));
        }
        Ok(s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born-rule probabilities over all `2^n` outcomes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.qubit_count - 1 - qubit)
    }

    fn check_targets(&self, gate: &GateOp) -> Result<()> {
        for &t in &gate.targets {
            if t >= self.qubit_count {
                return Err(Error::QubitOutOfRange { index: t, qubit_count: self.qubit_count });
            }
        }
        for i in 0..gate.targets.len() {
            for j in i + 1..gate.targets.len() {
                if gate.targets[i] == gate.targets[j] {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate target qubit {}",
                        gate.targets[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// In-place gate application.
    pub fn apply_mut(&mut self, gate: &GateOp) -> Result<()> {
        self.check_targets(gate)?;
        match gate.kind {
            GateKind::Rx => self.apply_single(gate.targets[0], rx_matrix(gate.angles[0])),
            GateKind::Ry => self.apply_single(gate.targets[0], ry_matrix(gate.angles[0])),
            GateKind::Rz => self.apply_single(gate.targets[0], rz_matrix(gate.angles[0])),
            GateKind::R3 => self.apply_single(
                gate.targets[0],
                r3_matrix(gate.angles[0], gate.angles[1], gate.angles[2]),
            ),
            GateKind::ZZ => self.apply_zz(gate.targets[0], gate.targets[1], gate.angles[0]),
            GateKind::CSwap => {
                self.apply_cswap(gate.targets[0], gate.targets[1], gate.targets[2])
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, u: [Complex64; 4]) {
        let mask = self.mask(qubit);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for low in base..base + mask {
                let a = self.amps[low];
                let b = self.amps[low + mask];
                self.amps[low] = u[0] * a + u[1] * b;
                self.amps[low + mask] = u[2] * a + u[3] * b;
            }
            base += mask << 1;
        }
    }

    fn apply_zz(&mut self, qa: usize, qb: usize, v: f64) {
        let ma = self.mask(qa);
        let mb = self.mask(qb);
        // +1 eigenvalue of Z⊗Z (aligned bits) picks up e^{-iv/2}, -1 picks up e^{+iv/2}.
        let aligned = Complex64::from_polar(1.0, -v / 2.0);
        let anti = Complex64::from_polar(1.0, v / 2.0);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
            *amp *= if parity { anti } else { aligned };
        }
    }

    fn apply_cswap(&mut self, control: usize, qa: usize, qb: usize) {
        let mc = self.mask(control);
        let ma = self.mask(qa);
        let mb = self.mask(qb);
        for i in 0..self.amps.len() {
            if (i & mc) != 0 && (i & ma) != 0 && (i & mb) == 0 {
                let j = (i & !ma) | mb;
                self.amps.swap(i, j);
            }
        }
    }

}

/// Gate families used by the denoising and posterior circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    /// `Rx`, then `Ry`, then `Rx`, with independent angles.
    R3,
    /// `exp(-iv(Z⊗Z)/2)` on two qubits.
    ZZ,
    /// Swap two targets when the control qubit is set.
    CSwap,
}

/// A single circuit operation: kind, target qubits, rotation angles.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angles: Vec<f64>,
}

impl GateOp {
    pub fn rx(qubit: usize, theta: f64) -> Self {
        GateOp { kind: GateKind::Rx, targets: vec![qubit], angles: vec![theta] }
    }

    pub fn ry(qubit: usize, theta: f64) -> Self {
        GateOp { kind: GateKind::Ry, targets: vec![qubit], angles: vec![theta] }
    }

    pub fn rz(qubit: usize, theta: f64) -> Self {
        GateOp { kind: GateKind::Rz, targets: vec![qubit], angles: vec![theta] }
    }

    pub fn r3(qubit: usize, angles: [f64; 3]) -> Self {
        GateOp { kind: GateKind::R3, targets: vec![qubit], angles: angles.to_vec() }
    }

    pub fn zz(qa: usize, qb: usize, v: f64) -> Self {
        GateOp { kind: GateKind::ZZ, targets: vec![qa, qb], angles: vec![v] }
    }

    pub fn cswap(control: usize, qa: usize, qb: usize) -> Self {
        GateOp { kind: GateKind::CSwap, targets: vec![control, qa, qb], angles: vec![] }
    }

    /// The inverse gate: negated angles; CSWAP is self-inverse. For `R3` the
    /// factor order also reverses, which is again an `R3` with the angle list
    /// reversed and negated.
    pub fn inverse(&self) -> Self {
        let mut g = self.clone();
        match self.kind {
            GateKind::CSwap => {}
            GateKind::R3 => {
                g.angles = vec![-self.angles[2], -self.angles[1], -self.angles[0]];
            }
            _ => {
                for a in g.angles.iter_mut() {
                    *a = -*a;
                }
            }
        }
        g
    }
}

pub(crate) fn rx_matrix(theta: f64) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s),
        Complex64::new(0.0, -s),
        Complex64::new(c, 0.0),
    ]
}

pub(crate) fn ry_matrix(theta: f64) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

pub(crate) fn rz_matrix(theta: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

fn mat_mul2(a: [Complex64; 4], b: [Complex64; 4]) -> [Complex64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn r3_matrix(a0: f64, a1: f64, a2: f64) -> [Complex64; 4] {
    mat_mul2(rx_matrix(a2), mat_mul2(ry_matrix(a1), rx_matrix(a0)))
}

/// Unitary evolution of `state` by `gate`; the norm is preserved within
/// `1e-12`.
pub fn apply_gate(state: &StateVector, gate: &GateOp) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_mut(gate)?;
    Ok(out)
}

/// Measurement distribution over the `keep` qubits, traced over the rest.
///
/// `keep[0]` becomes the most significant bit of the outcome index, matching
/// the crate-wide big-endian convention when `keep` is ascending.
pub fn marginal_probs(state: &StateVector, keep: &[usize]) -> Result<ProbVector> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set must be non-empty".into()));
    }
    let n = state.qubit_count();
    for &q in keep {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, qubit_count: n });
        }
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if seen[q] {
            return Err(Error::InvalidArgument(format!("duplicate qubit {q} in keep set")));
        }
        seen[q] = true;
    }

    let width = keep.len();
    let shifts: Vec<usize> = keep.iter().map(|&q| n - 1 - q).collect();
    let mut probs = vec![0.0; 1 << width];
    for (i, amp) in state.amplitudes().iter().enumerate() {
        let mut out = 0usize;
        for &sh in &shifts {
            out = (out << 1) | ((i >> sh) & 1);
        }
        probs[out] += amp.norm_sqr();
    }
    ProbVector::new(probs, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn linf(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn ry_zero_is_identity() {
        let s = StateVector::basis_state(&BitString::new(vec![1, 0]).unwrap());
        let out = apply_gate(&s, &GateOp::ry(0, 0.0)).unwrap();
        assert_eq!(out.amplitudes(), s.amplitudes());
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let s = StateVector::zero_state(1);
        let out = apply_gate(&s, &GateOp::ry(0, PI)).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[1].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zz_phase_on_antialigned_pair() {
        // |01> is a -1 eigenstate of Z⊗Z, so ZZ(0.7) applies e^{+i·0.35}.
        let s = StateVector::basis_state(&BitString::new(vec![0, 1]).unwrap());
        let out = apply_gate(&s, &GateOp::zz(0, 1, 0.7)).unwrap();
        let expected = Complex64::from_polar(1.0, 0.35);
        assert_abs_diff_eq!((out.amplitudes()[1] - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zz_matches_matrix_exponential_oracle() {
        // Oracle: exp(-iv(Z⊗Z)/2) built termwise from the diagonal eigenvalues
        // and applied as a dense 4x4 matrix to a random two-qubit state.
        let v = 0.7;
        let amps = vec![
            Complex64::new(0.5, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.2, -0.2),
            Complex64::new(0.1, 0.6283176918183363),
        ];
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<Complex64> = amps.into_iter().map(|a| a / norm).collect();
        let s = StateVector::new(amps.clone(), 2).unwrap();

        // Z⊗Z = diag(1, -1, -1, 1); exp of a diagonal matrix is elementwise.
        let eig = [1.0, -1.0, -1.0, 1.0];
        let dense: Vec<Complex64> = (0..4)
            .map(|i| Complex64::from_polar(1.0, -v * eig[i] / 2.0) * amps[i])
            .collect();

        let out = apply_gate(&s, &GateOp::zz(0, 1, v)).unwrap();
        for (a, b) in out.amplitudes().iter().zip(dense.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn cswap_permutes_basis_states() {
        // control set: |1,1,0> -> |1,0,1>
        let s = StateVector::basis_state(&BitString::new(vec![1, 1, 0]).unwrap());
        let out = apply_gate(&s, &GateOp::cswap(0, 1, 2)).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0b101].norm(), 1.0, epsilon = 1e-15);
        // control clear: untouched
        let s = StateVector::basis_state(&BitString::new(vec![0, 1, 0]).unwrap());
        let out = apply_gate(&s, &GateOp::cswap(0, 1, 2)).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0b010].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_targets_are_rejected() {
        let s = StateVector::zero_state(2);
        assert!(apply_gate(&s, &GateOp::ry(2, 1.0)).is_err());
        assert!(apply_gate(&s, &GateOp::zz(1, 1, 0.3)).is_err());
    }

    #[test]
    fn marginal_of_product_state() {
        let s = StateVector::basis_state(&BitString::new(vec![0, 1]).unwrap());
        let m = marginal_probs(&s, &[1]).unwrap();
        assert_eq!(m.probs(), &[0.0, 1.0]);
    }

    #[test]
    fn marginal_of_bell_state() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let amps = vec![
            Complex64::new(inv, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(inv, 0.0),
        ];
        let s = StateVector::new(amps, 2).unwrap();
        let m = marginal_probs(&s, &[0]).unwrap();
        assert_abs_diff_eq!(linf(m.probs(), &[0.5, 0.5]), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn marginal_rejects_empty_keep() {
        let s = StateVector::zero_state(2);
        assert!(marginal_probs(&s, &[]).is_err());
    }

    #[test]
    fn r3_is_the_three_rotation_composite() {
        let mut s = StateVector::zero_state(2);
        for g in [GateOp::rx(1, 0.3), GateOp::ry(1, -0.9), GateOp::rx(1, 1.7)] {
            s.apply_mut(&g).unwrap();
        }
        let composite =
            apply_gate(&StateVector::zero_state(2), &GateOp::r3(1, [0.3, -0.9, 1.7])).unwrap();
        for (a, b) in s.amplitudes().iter().zip(composite.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }
}
