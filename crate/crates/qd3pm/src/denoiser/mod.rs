//! The time-conditioned parameterized denoising circuit.
//!
//! Layout on `N+1` qubits: qubit 0 is the time ancilla, qubits `1..=N` carry
//! the data. The encoding layer prepares
//! `Ry(2πt/(T+1))|0> ⊗_i Ry(w_i·x_t^(i))|0>`; the learnable data rotations
//! are what lets the circuit act nontrivially on the terminal uniform input,
//! which a unitary alone cannot reshape. Each of the `L` body layers applies
//! `Rx·Ry·Rx` to every qubit and then `ZZ` to every topology edge in
//! lexicographic order; a fixed order keeps runs bit-reproducible even though
//! the `ZZ` set commutes. The ancilla participates in the entangling layers
//! so time information reaches the data qubits.

mod checkpoint;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointHeader, TargetKind, FORMAT_VERSION,
};

use crate::error::{Error, Result};
use crate::sim::{BitString, ProbVector, StateVector};
use num_complex::Complex64;
use rand::Rng;
use std::fmt;
use std::str::FromStr;

/// Connectivity of the entangling layers over the `N+1` circuit qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    AllToAll,
    Chain,
    Star,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::AllToAll => write!(f, "all-to-all"),
            TopologyKind::Chain => write!(f, "chain"),
            TopologyKind::Star => write!(f, "star"),
        }
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-to-all" => Ok(TopologyKind::AllToAll),
            "chain" => Ok(TopologyKind::Chain),
            "star" => Ok(TopologyKind::Star),
            _ => Err(Error::InvalidArgument(format!(
                "unknown topology '{s}' (expected all-to-all, chain, or star)"
            ))),
        }
    }
}

/// Edge list of a topology, in deterministic lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    qubit_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Topology over the `n_data + 1` circuit qubits.
    pub fn new(kind: TopologyKind, n_data: usize) -> Result<Self> {
        if n_data == 0 {
            return Err(Error::InvalidArgument("need at least one data qubit".into()));
        }
        let q = n_data + 1;
        let edges = match kind {
            TopologyKind::AllToAll => {
                let mut e = Vec::with_capacity(q * (q - 1) / 2);
                for a in 0..q {
                    for b in a + 1..q {
                        e.push((a, b));
                    }
                }
                e
            }
            TopologyKind::Chain => (0..q - 1).map(|a| (a, a + 1)).collect(),
            TopologyKind::Star => (1..q).map(|b| (0, b)).collect(),
        };
        Ok(Topology { kind, qubit_count: q, edges })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Trainable parameters θ = {w, v}: `N` encoding weights, `L·(N+1)·3`
/// single-qubit angles, `L·|edges|` entangler angles. The flat order —
/// `w`, then singles layer-major, then entanglers layer-major — is the
/// checkpoint order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    n: usize,
    layers: usize,
    edge_count: usize,
    w: Vec<f64>,
    v_singles: Vec<f64>,
    v_entanglers: Vec<f64>,
}

impl DenoiserParams {
    pub fn zeros(n: usize, layers: usize, topo: &Topology) -> Self {
        DenoiserParams {
            n,
            layers,
            edge_count: topo.edge_count(),
            w: vec![0.0; n],
            v_singles: vec![0.0; layers * (n + 1) * 3],
            v_entanglers: vec![0.0; layers * topo.edge_count()],
        }
    }

    pub fn from_flat(flat: &[f64], n: usize, layers: usize, topo: &Topology) -> Result<Self> {
        let expected = param_count(n, layers, topo);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} parameters, got {}",
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        let singles = layers * (n + 1) * 3;
        Ok(DenoiserParams {
            n,
            layers,
            edge_count: topo.edge_count(),
            w: flat[..n].to_vec(),
            v_singles: flat[n..n + singles].to_vec(),
            v_entanglers: flat[n + singles..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.len());
        flat.extend_from_slice(&self.w);
        flat.extend_from_slice(&self.v_singles);
        flat.extend_from_slice(&self.v_entanglers);
        flat
    }

    pub fn len(&self) -> usize {
        self.w.len() + self.v_singles.len() + self.v_entanglers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn single(&self, layer: usize, qubit: usize, axis: usize) -> f64 {
        self.v_singles[(layer * (self.n + 1) + qubit) * 3 + axis]
    }

    pub fn entangler(&self, layer: usize, edge: usize) -> f64 {
        self.v_entanglers[layer * self.edge_count + edge]
    }
}

/// Total parameter count `N + L·(3(N+1) + |edges|)`.
pub fn param_count(n: usize, layers: usize, topo: &Topology) -> usize {
    n + layers * (3 * (n + 1) + topo.edge_count())
}

/// Pauli generator of one plan gate; rotations are `exp(-iθ·P/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Generator {
    X(usize),
    Y(usize),
    ZZ(usize, usize),
}

/// One gate of the unrolled circuit: `angle = base + scale·param[param_idx]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PlanGate {
    pub generator: Generator,
    pub param_idx: Option<usize>,
    pub base: f64,
    pub scale: f64,
}

impl PlanGate {
    pub fn angle(&self, flat: &[f64]) -> f64 {
        match self.param_idx {
            Some(idx) => self.base + self.scale * flat[idx],
            None => self.base,
        }
    }
}

/// The unrolled gate sequence for a fixed `(t, x_t)` conditioning.
#[derive(Debug, Clone)]
pub(crate) struct CircuitPlan {
    pub gates: Vec<PlanGate>,
    pub qubit_count: usize,
}

pub(crate) fn build_plan(
    t: usize,
    xt: &BitString,
    n: usize,
    layers: usize,
    topo: &Topology,
    t_steps: usize,
) -> CircuitPlan {
    let q = n + 1;
    let mut gates = Vec::with_capacity(1 + n + layers * (3 * q + topo.edge_count()));
    // encoding: time ancilla, then data-controlled rotations
    gates.push(PlanGate {
        generator: Generator::Y(0),
        param_idx: None,
        base: 2.0 * std::f64::consts::PI * t as f64 / (t_steps as f64 + 1.0),
        scale: 0.0,
    });
    for i in 0..n {
        gates.push(PlanGate {
            generator: Generator::Y(1 + i),
            param_idx: Some(i),
            base: 0.0,
            scale: xt.bit(i) as f64,
        });
    }
    let singles_offset = n;
    let entangler_offset = n + layers * q * 3;
    for l in 0..layers {
        for qubit in 0..q {
            let base_idx = singles_offset + (l * q + qubit) * 3;
            for (axis, generator) in
                [Generator::X(qubit), Generator::Y(qubit), Generator::X(qubit)]
                    .into_iter()
                    .enumerate()
            {
                gates.push(PlanGate {
                    generator,
                    param_idx: Some(base_idx + axis),
                    base: 0.0,
                    scale: 1.0,
                });
            }
        }
        for (e, &(a, b)) in topo.edges().iter().enumerate() {
            gates.push(PlanGate {
                generator: Generator::ZZ(a, b),
                param_idx: Some(entangler_offset + l * topo.edge_count() + e),
                base: 0.0,
                scale: 1.0,
            });
        }
    }
    CircuitPlan { gates, qubit_count: q }
}

/// Fast in-place rotation kernels keyed by generator. Mirrors the public
/// `GateOp` kernels; kept separate so the training inner loop avoids
/// per-gate allocation and validation.
pub(crate) mod kernels {
    use super::Generator;
    use num_complex::Complex64;

    pub fn apply(amps: &mut [Complex64], qubit_count: usize, gen: Generator, angle: f64) {
        match gen {
            Generator::X(q) => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let m = mask(qubit_count, q);
                pairwise(amps, m, |a, b| {
                    (
                        Complex64::new(c * a.re + s * b.im, c * a.im - s * b.re),
                        Complex64::new(s * a.im + c * b.re, -s * a.re + c * b.im),
                    )
                });
            }
            Generator::Y(q) => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let m = mask(qubit_count, q);
                pairwise(amps, m, |a, b| (c * a - s * b, s * a + c * b));
            }
            Generator::ZZ(qa, qb) => {
                let ma = mask(qubit_count, qa);
                let mb = mask(qubit_count, qb);
                let aligned = Complex64::from_polar(1.0, -angle / 2.0);
                let anti = Complex64::from_polar(1.0, angle / 2.0);
                for (i, amp) in amps.iter_mut().enumerate() {
                    let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
                    *amp *= if parity { anti } else { aligned };
                }
            }
        }
    }

    /// Applies the bare Pauli generator (X, Y, or Z⊗Z) to `src`, writing into
    /// `dst`.
    pub fn apply_pauli(
        dst: &mut [Complex64],
        src: &[Complex64],
        qubit_count: usize,
        gen: Generator,
    ) {
        match gen {
            Generator::X(q) => {
                let m = mask(qubit_count, q);
                for i in 0..src.len() {
                    dst[i] = src[i ^ m];
                }
            }
            Generator::Y(q) => {
                let m = mask(qubit_count, q);
                let i_pos = Complex64::new(0.0, 1.0);
                let i_neg = Complex64::new(0.0, -1.0);
                for i in 0..src.len() {
                    // Y|0> = i|1>, Y|1> = -i|0>
                    dst[i] = if i & m == 0 { i_neg * src[i ^ m] } else { i_pos * src[i ^ m] };
                }
            }
            Generator::ZZ(qa, qb) => {
                let ma = mask(qubit_count, qa);
                let mb = mask(qubit_count, qb);
                for i in 0..src.len() {
                    let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
                    dst[i] = if parity { -src[i] } else { src[i] };
                }
            }
        }
    }

    fn mask(qubit_count: usize, qubit: usize) -> usize {
        1 << (qubit_count - 1 - qubit)
    }

    fn pairwise(
        amps: &mut [Complex64],
        m: usize,
        f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64),
    ) {
        let dim = amps.len();
        let mut base = 0;
        while base < dim {
            for low in base..base + m {
                let (x, y) = f(amps[low], amps[low + m]);
                amps[low] = x;
                amps[low + m] = y;
            }
            base += m << 1;
        }
    }
}

pub(crate) fn run_plan(plan: &CircuitPlan, flat: &[f64]) -> Vec<Complex64> {
    let mut amps = vec![Complex64::ZERO; 1 << plan.qubit_count];
    amps[0] = Complex64::ONE;
    for gate in &plan.gates {
        kernels::apply(&mut amps, plan.qubit_count, gate.generator, gate.angle(flat));
    }
    amps
}

/// Marginal over the data qubits (dropping the ancilla) of a full-register
/// amplitude vector.
pub(crate) fn data_marginal(amps: &[Complex64], n: usize) -> Vec<f64> {
    let d = 1usize << n;
    let mut probs = vec![0.0; d];
    // ancilla is the most significant bit
    for (i, amp) in amps.iter().enumerate() {
        probs[i & (d - 1)] += amp.norm_sqr();
    }
    probs
}

fn check_args(t: usize, xt: &BitString, params: &DenoiserParams, t_steps: usize) -> Result<()> {
    if xt.width() != params.n {
        return Err(Error::DimensionMismatch(format!(
            "xt width {} vs circuit data width {}",
            xt.width(),
            params.n
        )));
    }
    if t < 1 || t > t_steps {
        return Err(Error::InvalidArgument(format!("timestep {t} out of range 1..={t_steps}")));
    }
    Ok(())
}

/// The encoding layer state `Ry(2πt/(T+1))|0> ⊗_i Ry(w_i·x_t^(i))|0>`.
pub fn encode(t: usize, xt: &BitString, w: &[f64], t_steps: usize) -> Result<StateVector> {
    if w.len() != xt.width() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for width {}",
            w.len(),
            xt.width()
        )));
    }
    if t > t_steps {
        return Err(Error::InvalidArgument(format!("timestep {t} out of range 0..={t_steps}")));
    }
    let n = xt.width();
    let mut amps = vec![Complex64::ZERO; 1 << (n + 1)];
    amps[0] = Complex64::ONE;
    kernels::apply(
        &mut amps,
        n + 1,
        Generator::Y(0),
        2.0 * std::f64::consts::PI * t as f64 / (t_steps as f64 + 1.0),
    );
    for i in 0..n {
        kernels::apply(&mut amps, n + 1, Generator::Y(1 + i), w[i] * xt.bit(i) as f64);
    }
    StateVector::new(amps, n + 1)
}

/// Model distribution `p_θ(· | x_t)` at timestep `t`: the exact measurement
/// distribution of the data register after the full circuit.
pub fn denoise_dist(
    t: usize,
    xt: &BitString,
    params: &DenoiserParams,
    topo: &Topology,
    t_steps: usize,
) -> Result<ProbVector> {
    check_args(t, xt, params, t_steps)?;
    if topo.qubit_count() != params.n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "topology has {} qubits, circuit needs {}",
            topo.qubit_count(),
            params.n + 1
        )));
    }
    let plan = build_plan(t, xt, params.n, params.layers, topo, t_steps);
    let amps = run_plan(&plan, &params.to_flat());
    ProbVector::new(data_marginal(&amps, params.n), params.n)
}

/// Draws one denoised sample from [`denoise_dist`].
pub fn sample_denoised<R: Rng>(
    t: usize,
    xt: &BitString,
    params: &DenoiserParams,
    topo: &Topology,
    t_steps: usize,
    rng: &mut R,
) -> Result<BitString> {
    Ok(denoise_dist(t, xt, params, topo, t_steps)?.sample(rng))
}
