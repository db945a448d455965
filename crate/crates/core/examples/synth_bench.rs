//! Compares pooling strategies and codebook sizes on the default synthetic
//! benchmark.
//!
//! cargo run --release -p actionvlad --example synth_bench

use std::time::Instant;

use actionvlad::codebook::{kmeans_init, subsample_rows, KMeansOptions};
use actionvlad::io::Split;
use actionvlad::synth::{synth_generate, SynthConfig};
use actionvlad::training::{accuracy, predict, train_stage1, train_stage2, Pooling, Sample, TrainConfig};

fn descriptors(samples: &[Sample]) -> (Vec<f64>, usize) {
    let dim = samples[0].features.dim();
    let mut all = Vec::new();
    for s in samples {
        all.extend_from_slice(s.features.data());
    }
    (all, dim)
}

fn main() -> actionvlad::Result<()> {
    let start = Instant::now();
    let ds = synth_generate(&SynthConfig::default())?;
    let train = ds.samples(Split::Train, 0);
    let val = ds.samples(Split::Val, 0);
    let labels = || val.iter().map(|s| s.label);

    for pooling in [Pooling::Avg, Pooling::Max].into_iter().filter(|_| std::env::var("ALPHA").is_err()) {
        let cfg = TrainConfig { pooling, ..TrainConfig::default() };
        let out = train_stage1(&train, &val, None, &cfg)?;
        let acc = accuracy(&predict(&val, pooling, None, &out.model)?, labels());
        println!("{pooling:>4}: val acc {:.3}", acc);
    }

    let (all, dim) = descriptors(&train);
    let samples = subsample_rows(&all, dim, 100_000, 0);
    for k in [1, 4, 8, 16] {
        let alpha: f64 = std::env::var("ALPHA").ok().and_then(|v| v.parse().ok()).unwrap_or(1000.0);
        let cfg = TrainConfig { k, alpha, ..TrainConfig::default() };
        let cb = kmeans_init(&samples, dim, k, cfg.alpha, KMeansOptions { max_iters: 100, seed: 0 })?;
        let s1 = train_stage1(&train, &val, Some(&cb), &cfg)?;
        let acc1 = accuracy(&predict(&val, Pooling::Vlad, Some(&cb), &s1.model)?, labels());
        let s2 = train_stage2(&train, &val, &cb, &s1.model, &cfg)?;
        let acc2 = accuracy(&predict(&val, Pooling::Vlad, Some(&s2.codebook), &s2.model)?, labels());
        println!("vlad k={k:>2}: stage1 {acc1:.3} stage2 {acc2:.3}  ({:.1}s)", start.elapsed().as_secs_f64());
    }
    Ok(())
}
