use qd3pm::datasets::bas_distribution;
use qd3pm::posterior::PosteriorMode;
use qd3pm::train::{BandwidthSpec, TrainConfig, Trainer};

fn main() {
    let dataset = bas_distribution(2, 2).unwrap();
    let mut cfg = TrainConfig::bas_defaults(4);
    cfg.posterior_mode = PosteriorMode::BayesConsistent;
    cfg.snapshot_every = 3000;
    cfg.bandwidth = BandwidthSpec::Single(5.0);
    let mut finals = Vec::new();
    for seed in 0..5u64 {
        let mut c = cfg.clone();
        c.seed = seed;
        let trainer = Trainer::new(4, c).unwrap();
        let hist = trainer.train(&dataset).unwrap();
        finals.push(hist.kl_snapshots.last().unwrap().kl_nats);
    }
    finals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("sigma=5 finals {:?} median {:.4}", finals.iter().map(|x| (x*1e3).round()/1e3).collect::<Vec<_>>(), finals[2]);
}
