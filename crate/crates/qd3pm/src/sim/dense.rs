//! Dense density-matrix path. Verification oracle only; capped at
//! [`DENSE_QUBIT_CAP`] qubits.

use super::{ProbVector, StateVector};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Hard cap on the dense path.
pub const DENSE_QUBIT_CAP: usize = 12;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

/// A full `d x d` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDensityMatrix {
    m: DMatrix<Complex64>,
    qubit_count: usize,
}

impl DenseDensityMatrix {
    /// Validates squareness, the qubit cap, Hermiticity and unit trace.
    /// Positivity is not checked here (it costs an eigendecomposition); use
    /// [`DenseDensityMatrix::min_eigenvalue`] where it matters.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || m.ncols() != d || !d.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square with power-of-two size, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let qubit_count = d.trailing_zeros() as usize;
        if qubit_count > DENSE_QUBIT_CAP {
            return Err(Error::ResourceLimit(format!(
                "dense path capped at {DENSE_QUBIT_CAP} qubits, requested {qubit_count}"
            )));
        }
        for i in 0..d {
            for j in i..d {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        let trace: Complex64 = m.diagonal().sum();
        if (trace - Complex64::ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!("trace {trace} != 1")));
        }
        Ok(DenseDensityMatrix { m, qubit_count })
    }

    /// Diagonal density matrix carrying a classical distribution.
    pub fn from_prob_vector(p: &ProbVector) -> Result<Self> {
        let d = p.dim();
        let mut m = DMatrix::zeros(d, d);
        for (i, &pi) in p.probs().iter().enumerate() {
            m[(i, i)] = Complex64::new(pi, 0.0);
        }
        Self::new(m)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    /// Real parts of the diagonal.
    pub fn diagonal_reals(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|c| c.re).collect()
    }

    /// Diagonal as a probability distribution.
    pub fn diagonal_dist(&self) -> Result<ProbVector> {
        ProbVector::new(self.diagonal_reals(), self.qubit_count)
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_offdiagonal(&self) -> f64 {
        let d = self.dim();
        let mut max = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    max = max.max(self.m[(i, j)].norm());
                }
            }
        }
        max
    }

    /// Eigenvalues of the (Hermitian) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self.m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Positive-semidefinite square root via eigendecomposition; negative
    /// eigenvalues within tolerance are clamped to zero.
    pub(crate) fn sqrt_psd(&self) -> DMatrix<Complex64> {
        let eig = self.m.clone().symmetric_eigen();
        let d = self.dim();
        let mut sqrt_diag = DMatrix::<Complex64>::zeros(d, d);
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            let lam = lambda.max(0.0);
            sqrt_diag[(i, i)] = Complex64::new(lam.sqrt(), 0.0);
        }
        &eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint()
    }
}

/// Outer product `|ψ><ψ|`.
pub fn dm_from_statevector(state: &StateVector) -> Result<DenseDensityMatrix> {
    let n = state.qubit_count();
    if n > DENSE_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "dense path capped at {DENSE_QUBIT_CAP} qubits, requested {n}"
        )));
    }
    let d = 1usize << n;
    let mut m = DMatrix::zeros(d, d);
    let amps = state.amplitudes();
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = amps[i] * amps[j].conj();
        }
    }
    DenseDensityMatrix::new(m)
}

/// Partial trace over the `trace_out` qubits. Kept qubits retain their
/// relative order; trace and Hermiticity are preserved.
pub fn dm_partial_trace(
    dm: &DenseDensityMatrix,
    trace_out: &[usize],
) -> Result<DenseDensityMatrix> {
    let n = dm.qubit_count();
    let mut out_mask = vec![false; n];
    for &q in trace_out {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, qubit_count: n });
        }
        if out_mask[q] {
            return Err(Error::InvalidArgument(format!("duplicate qubit {q} in trace set")));
        }
        out_mask[q] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|q| !out_mask[*q]).collect();
    if kept.is_empty() {
        return Err(Error::InvalidArgument("cannot trace out all qubits".into()));
    }

    let kept_shifts: Vec<usize> = kept.iter().map(|&q| n - 1 - q).collect();
    let traced_shifts: Vec<usize> =
        (0..n).filter(|q| out_mask[*q]).map(|q| n - 1 - q).collect();

    // Expand a compact kept/traced index into the original bit positions.
    let expand = |compact: usize, shifts: &[usize]| -> usize {
        let w = shifts.len();
        let mut full = 0usize;
        for (pos, &sh) in shifts.iter().enumerate() {
            full |= ((compact >> (w - 1 - pos)) & 1) << sh;
        }
        full
    };

    let dk = 1usize << kept.len();
    let dt = 1usize << traced_shifts.len();
    let mut out = DMatrix::<Complex64>::zeros(dk, dk);
    for a in 0..dk {
        let fa = expand(a, &kept_shifts);
        for b in 0..dk {
            let fb = expand(b, &kept_shifts);
            let mut acc = Complex64::ZERO;
            for s in 0..dt {
                let fs = expand(s, &traced_shifts);
                acc += dm.matrix()[(fa | fs, fb | fs)];
            }
            out[(a, b)] = acc;
        }
    }
    DenseDensityMatrix::new(out)
}
