use qd3pm::datasets::bas_distribution;
use qd3pm::denoiser::{TargetKind, Topology};
use qd3pm::metrics::kl_divergence;
use qd3pm::onestep::exact_one_step_distribution;
use qd3pm::posterior::PosteriorMode;
use qd3pm::rng::{substream, Stream};
use qd3pm::schedule::cosine_schedule;
use qd3pm::sim::BitString;
use qd3pm::train::{cosine_lr, init_params, AdamState, BatchItem, TrainConfig, Trainer, X0Objective};

fn main() {
    let n = 4usize;
    let dataset = bas_distribution(2, 2).unwrap();
    let mut cfg = TrainConfig::x0_predictor_defaults(n);
    cfg.posterior_mode = PosteriorMode::BayesConsistent;
    cfg.x0_objective = X0Objective::DirectX0;
    cfg.include_reconstruction_term = false;
    let trainer = Trainer::new(n, cfg.clone()).unwrap();
    let sched = cosine_schedule(cfg.t_steps, cfg.s).unwrap();
    let topo = Topology::new(cfg.topology, n).unwrap();
    let mut rng = substream(7, Stream::Training);
    let mut params = init_params(&mut substream(7, Stream::Init), 0.01, n, cfg.layers, &topo).unwrap();
    let mut adam = AdamState::new(params.len());
    let iters = 4000;
    for it in 0..iters {
        let lr = cosine_lr(it, 1e-3, 1e-5, 3200);
        // all 16 x_T contexts at t = T, x0 resampled from the dataset
        let batch: Vec<BatchItem> = (0..16)
            .map(|xt_idx| BatchItem {
                x0: dataset.sample(&mut rng),
                t: 30,
                xt: BitString::from_index(xt_idx, n).unwrap(),
                x1: BitString::zeros(n), // unused (no reconstruction term)
            })
            .collect();
        let (_, grad) = trainer.grad_params(&batch, &params).unwrap();
        let mut flat = params.to_flat();
        adam.step(&mut flat, &grad, lr);
        params = qd3pm::denoiser::DenoiserParams::from_flat(&flat, n, cfg.layers, &topo).unwrap();
        if (it + 1) % 500 == 0 {
            let one = exact_one_step_distribution(&params, &topo, &sched).unwrap();
            println!("iter {:4}: one-step KL {:.5}", it + 1, kl_divergence(&dataset, &one).unwrap());
        }
    }
    let _ = TargetKind::X0Predictor;
}
