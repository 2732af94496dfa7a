use qd3pm::datasets::bas_distribution;
use qd3pm::posterior::PosteriorMode;
use qd3pm::train::{TrainConfig, Trainer, X0Objective};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let decay: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1000);
    let with_l0: bool = args.get(2).map(|s| s == "l0").unwrap_or(true);
    let sigma: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0);
    let dataset = bas_distribution(2, 2).unwrap();
    let mut cfg = TrainConfig::x0_predictor_defaults(4);
    cfg.posterior_mode = PosteriorMode::BayesConsistent;
    cfg.x0_objective = X0Objective::DirectX0;
    cfg.include_reconstruction_term = with_l0;
    cfg.lr_decay_steps = decay;
    cfg.init_sigma = sigma;
    cfg.snapshot_every = 100;
    cfg.seed = seed;
    let trainer = Trainer::new(4, cfg).unwrap();
    let hist = trainer.train(&dataset).unwrap();
    let fin = hist.kl_snapshots.last().unwrap().kl_nats;
    let (mit, min) = hist.kl_snapshots.iter().map(|s| (s.iteration, s.kl_nats))
        .fold((0usize, f64::MAX), |acc, (i, k)| if k < acc.1 { (i, k) } else { acc });
    println!("decay {decay} l0 {with_l0} sigma {sigma} seed {seed}: final {fin:.4} min {min:.4}@{mit}");
}
