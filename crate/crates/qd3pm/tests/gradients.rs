//! Gradient correctness: the production parameter-shift path against a
//! literal shifted-circuit evaluation rebuilt from the declared layer
//! structure, and against central finite differences.

use qd3pm::denoiser::{param_count, DenoiserParams, TargetKind, Topology, TopologyKind};
use qd3pm::posterior::{posterior_dist, PosteriorMode, PosteriorSpec};
use qd3pm::schedule::cosine_schedule;
use qd3pm::sim::{apply_gate, marginal_probs, BitString, GateOp, ProbVector, StateVector};
use qd3pm::train::{BatchItem, GradMethod, KernelSpec, TrainConfig, Trainer};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy)]
enum OracleKind {
    Rx(usize),
    Ry(usize),
    Zz(usize, usize),
}

/// One gate of the independently rebuilt circuit.
struct OracleGate {
    kind: OracleKind,
    param_idx: Option<usize>,
    scale: f64,
    base: f64,
}

/// Unrolls the declared circuit structure: time rotation, data-controlled
/// rotations, then per layer Rx/Ry/Rx on every qubit and ZZ on every edge in
/// lexicographic order.
fn oracle_gates(
    t: usize,
    xt: &BitString,
    n: usize,
    layers: usize,
    topo: &Topology,
    t_steps: usize,
) -> Vec<OracleGate> {
    let q = n + 1;
    let mut gates: Vec<OracleGate> = Vec::new();
    gates.push(OracleGate {
        kind: OracleKind::Ry(0),
        param_idx: None,
        scale: 0.0,
        base: 2.0 * PI * t as f64 / (t_steps as f64 + 1.0),
    });
    for i in 0..n {
        gates.push(OracleGate {
            kind: OracleKind::Ry(1 + i),
            param_idx: Some(i),
            scale: xt.bit(i) as f64,
            base: 0.0,
        });
    }
    for l in 0..layers {
        for qubit in 0..q {
            let base_idx = n + (l * q + qubit) * 3;
            let axes =
                [OracleKind::Rx(qubit), OracleKind::Ry(qubit), OracleKind::Rx(qubit)];
            for (axis, kind) in axes.into_iter().enumerate() {
                gates.push(OracleGate {
                    kind,
                    param_idx: Some(base_idx + axis),
                    scale: 1.0,
                    base: 0.0,
                });
            }
        }
        for (e, &(a, b)) in topo.edges().iter().enumerate() {
            gates.push(OracleGate {
                kind: OracleKind::Zz(a, b),
                param_idx: Some(n + layers * q * 3 + l * topo.edge_count() + e),
                scale: 1.0,
                base: 0.0,
            });
        }
    }
    gates
}

fn run_oracle(
    gates: &[OracleGate],
    flat: &[f64],
    n: usize,
    shift: Option<(usize, f64)>,
) -> ProbVector {
    let mut state = StateVector::zero_state(n + 1);
    for (gi, g) in gates.iter().enumerate() {
        let mut angle = g.base + g.scale * g.param_idx.map_or(0.0, |i| flat[i]);
        if let Some((target_gate, delta)) = shift {
            if gi == target_gate {
                angle += delta;
            }
        }
        let op = match g.kind {
            OracleKind::Rx(q) => GateOp::rx(q, angle),
            OracleKind::Ry(q) => GateOp::ry(q, angle),
            OracleKind::Zz(a, b) => GateOp::zz(a, b, angle),
        };
        state = apply_gate(&state, &op).unwrap();
    }
    let keep: Vec<usize> = (1..=n).collect();
    marginal_probs(&state, &keep).unwrap()
}

/// Literal parameter-shift gradient of one MMD context via two circuit runs
/// per parameter.
#[allow(clippy::too_many_arguments)]
fn literal_ps_grad(
    t: usize,
    xt: &BitString,
    target: &ProbVector,
    flat: &[f64],
    n: usize,
    layers: usize,
    topo: &Topology,
    t_steps: usize,
    kernel: &KernelSpec,
) -> Vec<f64> {
    let gates = oracle_gates(t, xt, n, layers, topo, t_steps);
    let p0 = run_oracle(&gates, flat, n, None);
    let diff: Vec<f64> = p0.probs().iter().zip(target.probs()).map(|(a, b)| a - b).collect();
    let g: Vec<f64> = kernel.apply(&diff).iter().map(|v| 2.0 * v).collect();

    let mut grad = vec![0.0; flat.len()];
    for (gi, gate) in gates.iter().enumerate() {
        let Some(idx) = gate.param_idx else { continue };
        if gate.scale == 0.0 {
            continue;
        }
        let plus = run_oracle(&gates, flat, n, Some((gi, FRAC_PI_2)));
        let minus = run_oracle(&gates, flat, n, Some((gi, -FRAC_PI_2)));
        let dp: f64 = plus
            .probs()
            .iter()
            .zip(minus.probs())
            .zip(&g)
            .map(|((p, m), gy)| gy * (p - m) / 2.0)
            .sum();
        grad[idx] += gate.scale * dp;
    }
    grad
}

fn random_params(n: usize, layers: usize, topo: &Topology, seed: u64) -> DenoiserParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> =
        (0..param_count(n, layers, topo)).map(|_| rng.gen_range(-1.2..1.2)).collect();
    DenoiserParams::from_flat(&flat, n, layers, topo).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn parameter_shift_matches_literal_shifted_circuits() {
    let n = 3;
    let layers = 2;
    let cfg = TrainConfig { layers, ..TrainConfig::bas_defaults(n) };
    let trainer = Trainer::new(n, cfg.clone()).unwrap();
    let sched = cosine_schedule(cfg.t_steps, cfg.s).unwrap();
    let topo = Topology::new(cfg.topology, n).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for case in 0..6 {
        let params = random_params(n, layers, &topo, 100 + case);
        let x0 = BitString::from_index(rng.gen_range(0..8), n).unwrap();
        let t = rng.gen_range(2..=cfg.t_steps);
        let xt = BitString::from_index(rng.gen_range(0..8), n).unwrap();
        let x1 = BitString::from_index(rng.gen_range(0..8), n).unwrap();
        let item = BatchItem { x0: x0.clone(), t, xt: xt.clone(), x1: x1.clone() };

        let (_, grad) = trainer.grad_params(&[item], &params).unwrap();

        // independent rebuild: posterior context + reconstruction context
        let spec = PosteriorSpec::new(&x0, &xt, t, &sched, cfg.posterior_mode).unwrap();
        let target_t = posterior_dist(&spec).unwrap();
        let target_0 = ProbVector::delta(n, x0.index());
        let flat = params.to_flat();
        let g1 = literal_ps_grad(
            t,
            &xt,
            &target_t,
            &flat,
            n,
            layers,
            &topo,
            cfg.t_steps,
            trainer.kernel(),
        );
        let g0 = literal_ps_grad(
            1,
            &x1,
            &target_0,
            &flat,
            n,
            layers,
            &topo,
            cfg.t_steps,
            trainer.kernel(),
        );
        let expected: Vec<f64> = g1.iter().zip(&g0).map(|(a, b)| a + b).collect();
        let gap = max_abs_diff(&grad, &expected);
        assert!(gap < 1e-11, "case {case}: literal-shift mismatch {gap}");
    }
}

#[test]
fn parameter_shift_matches_finite_differences_on_random_configs() {
    // 20 random configurations at the gradient-check scale (N=4, L=2)
    let n = 4;
    let layers = 2;
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
        let cfg = TrainConfig {
            layers,
            target_kind: if case % 4 == 3 {
                TargetKind::X0Predictor
            } else {
                TargetKind::StepPredictor
            },
            posterior_mode: if case % 2 == 0 {
                PosteriorMode::PaperEq17
            } else {
                PosteriorMode::BayesConsistent
            },
            ..TrainConfig::bas_defaults(n)
        };
        let topo = Topology::new(cfg.topology, n).unwrap();
        let params = random_params(n, layers, &topo, 300 + case);
        let batch: Vec<BatchItem> = (0..2)
            .map(|_| BatchItem {
                x0: BitString::from_index(rng.gen_range(0..16), n).unwrap(),
                t: rng.gen_range(2..=cfg.t_steps),
                xt: BitString::from_index(rng.gen_range(0..16), n).unwrap(),
                x1: BitString::from_index(rng.gen_range(0..16), n).unwrap(),
            })
            .collect();

        let ps_trainer = Trainer::new(n, cfg.clone()).unwrap();
        let (loss_ps, grad_ps) = ps_trainer.grad_params(&batch, &params).unwrap();
        let fd_trainer =
            Trainer::new(n, TrainConfig { grad_method: GradMethod::FiniteDifference, ..cfg })
                .unwrap();
        let (loss_fd, grad_fd) = fd_trainer.grad_params(&batch, &params).unwrap();

        assert!((loss_ps - loss_fd).abs() < 1e-12);
        let gap = max_abs_diff(&grad_ps, &grad_fd);
        worst = worst.max(gap);
        assert!(gap < 1e-5, "case {case}: PS vs FD gap {gap}");
    }
    println!("worst PS-vs-FD gap over 20 configs: {worst:.3e}");
}

#[test]
fn encoding_gradient_vanishes_on_zero_bits() {
    let n = 3;
    let cfg = TrainConfig { layers: 1, ..TrainConfig::bas_defaults(n) };
    let trainer = Trainer::new(n, cfg.clone()).unwrap();
    let topo = Topology::new(cfg.topology, n).unwrap();
    let params = random_params(n, 1, &topo, 9);
    // xt = x1 = 000 for every item: all data-encoding angles are zero
    let batch = vec![BatchItem {
        x0: BitString::from_index(5, n).unwrap(),
        t: 7,
        xt: BitString::zeros(n),
        x1: BitString::zeros(n),
    }];
    let (_, grad) = trainer.grad_params(&batch, &params).unwrap();
    for i in 0..n {
        assert_eq!(grad[i], 0.0, "w[{i}] gradient should vanish");
    }
}

#[test]
fn zero_params_symmetric_target_fd_agreement() {
    let n = 3;
    let cfg = TrainConfig { layers: 2, ..TrainConfig::bas_defaults(n) };
    let topo = Topology::new(cfg.topology, n).unwrap();
    let params = DenoiserParams::zeros(n, 2, &topo);
    let batch = vec![BatchItem {
        x0: BitString::zeros(n),
        t: 15,
        xt: BitString::from_index(6, n).unwrap(),
        x1: BitString::from_index(1, n).unwrap(),
    }];
    let ps = Trainer::new(n, cfg.clone()).unwrap();
    let fd =
        Trainer::new(n, TrainConfig { grad_method: GradMethod::FiniteDifference, ..cfg }).unwrap();
    let (_, grad_ps) = ps.grad_params(&batch, &params).unwrap();
    let (_, grad_fd) = fd.grad_params(&batch, &params).unwrap();
    assert!(max_abs_diff(&grad_ps, &grad_fd) < 1e-6);
}

#[test]
fn chain_and_star_topologies_pass_fd_check() {
    let n = 3;
    for kind in [TopologyKind::Chain, TopologyKind::Star] {
        let cfg = TrainConfig { layers: 2, topology: kind, ..TrainConfig::bas_defaults(n) };
        let topo = Topology::new(kind, n).unwrap();
        let params = random_params(n, 2, &topo, 55);
        let batch = vec![BatchItem {
            x0: BitString::from_index(3, n).unwrap(),
            t: 11,
            xt: BitString::from_index(4, n).unwrap(),
            x1: BitString::from_index(2, n).unwrap(),
        }];
        let ps = Trainer::new(n, cfg.clone()).unwrap();
        let fd =
            Trainer::new(n, TrainConfig { grad_method: GradMethod::FiniteDifference, ..cfg })
                .unwrap();
        let (_, grad_ps) = ps.grad_params(&batch, &params).unwrap();
        let (_, grad_fd) = fd.grad_params(&batch, &params).unwrap();
        assert!(max_abs_diff(&grad_ps, &grad_fd) < 1e-5, "{kind:?}");
    }
}
