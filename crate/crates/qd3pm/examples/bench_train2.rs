use qd3pm::datasets::bas_distribution;
use qd3pm::denoiser::{TargetKind, Topology};
use qd3pm::metrics::{empirical_distribution, kl_divergence};
use qd3pm::onestep::{exact_iterative_distribution, iterative_generate};
use qd3pm::posterior::PosteriorMode;
use qd3pm::schedule::cosine_schedule;
use qd3pm::train::{TrainConfig, Trainer};

fn main() {
    let dataset = bas_distribution(2, 2).unwrap();
    let mut cfg = TrainConfig::bas_defaults(4);
    cfg.posterior_mode = PosteriorMode::BayesConsistent;
    cfg.snapshot_every = 0;
    cfg.seed = 0;
    let trainer = Trainer::new(4, cfg.clone()).unwrap();
    let hist = trainer.train(&dataset).unwrap();
    let sched = cosine_schedule(cfg.t_steps, cfg.s).unwrap();
    let topo = Topology::new(cfg.topology, 4).unwrap();
    let exact = exact_iterative_distribution(&hist.final_params, &topo, &sched, TargetKind::StepPredictor, cfg.posterior_mode).unwrap();
    let samples = iterative_generate(&hist.final_params, &topo, &sched, TargetKind::StepPredictor, cfg.posterior_mode, 777, 100_000).unwrap();
    let emp = empirical_distribution(&samples, 4).unwrap();
    println!("exact-chain KL {:.5}", kl_divergence(&dataset, &exact).unwrap());
    println!("empirical(1e5) KL {:.5}", kl_divergence(&dataset, &emp).unwrap());
    let linf: f64 = exact.probs().iter().zip(emp.probs()).map(|(a,b)| (a-b).abs()).fold(0.0, f64::max);
    println!("L_inf(exact, empirical) {:.5}", linf);
}
