mod common;

use std::fs;
use std::path::Path;

use actionvlad::io::{load_manifest, Split};
use actionvlad::synth::{synth_generate, write_synth_dataset, Composition, SynthConfig};
use actionvlad::{actionvlad_descriptor, average_pool, Codebook, Sample};
use common::*;

fn small(composition: Composition, seed: u64) -> SynthConfig {
    SynthConfig {
        num_classes: 4,
        frames: 8,
        locations: 3,
        dim: 8,
        train_per_class: 6,
        val_per_class: 6,
        composition,
        seed,
        ..SynthConfig::default()
    }
}

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = walk(dir)
        .into_iter()
        .map(|p| {
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn generation_is_a_function_of_the_seed() {
    let cfg = SynthConfig {
        streams: 2,
        test_per_class: 2,
        ..small(Composition::Confounded { blocks: 4 }, 11)
    };
    let a = synth_generate(&cfg).unwrap();
    assert_eq!(a, synth_generate(&cfg).unwrap());
    assert_ne!(a.videos, synth_generate(&SynthConfig { seed: 12, ..cfg.clone() }).unwrap().videos);

    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_synth_dataset(&a, d1.path()).unwrap();
    write_synth_dataset(&synth_generate(&cfg).unwrap(), d2.path()).unwrap();
    let files = sorted_files(d1.path());
    assert_eq!(files.len(), 1 + 2 * a.videos.len());
    assert_eq!(files, sorted_files(d2.path()));

    let m = load_manifest(d1.path().join("manifest.tsv")).unwrap();
    assert_eq!(m.num_classes, 4);
    assert!(m.is_paired());
    assert_eq!(m.split(Split::Test).count(), 8);
    let (first, second) = m.entries[0].load().unwrap();
    assert_eq!((first.frames(), first.locations(), first.dim()), (8, 3, 8));
    assert_eq!(second.unwrap().frames(), 8);
}

fn mean(rows: &[&[f64]]) -> Vec<f64> {
    let mut m = vec![0.0; rows[0].len()];
    for r in rows {
        m.iter_mut().zip(r.iter()).for_each(|(a, b)| *a += b / rows.len() as f64);
    }
    m
}

#[test]
fn confounded_classes_share_mean_and_maximum() {
    for seed in 0..5 {
        let ds = synth_generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let vocab = &ds.vocabulary[0];
        let means: Vec<Vec<f64>> = ds
            .class_subactions
            .iter()
            .map(|ms| mean(&ms.iter().map(|&s| vocab[s].as_slice()).collect::<Vec<_>>()))
            .collect();
        let maxima: Vec<Vec<f64>> = ds
            .class_subactions
            .iter()
            .map(|ms| {
                (0..vocab[0].len())
                    .map(|j| ms.iter().map(|&s| vocab[s][j]).fold(f64::NEG_INFINITY, f64::max))
                    .collect()
            })
            .collect();
        for c in 1..means.len() {
            assert!(max_abs_diff(&means[c], &means[0]) <= 1e-12);
            assert_eq!(maxima[c], maxima[0]);
            assert_ne!(ds.class_subactions[c], ds.class_subactions[0]);
        }
        assert!(vocab.len() <= ds.config.num_subactions);
    }
}

/// Accuracy of a nearest-class-mean rule fitted on `train`.
fn nearest_mean_accuracy(train: &[(Vec<f64>, usize)], test: &[(Vec<f64>, usize)], classes: usize) -> f64 {
    let centroids: Vec<Vec<f64>> = (0..classes)
        .map(|c| {
            let rows: Vec<&[f64]> = train.iter().filter(|(_, y)| *y == c).map(|(v, _)| v.as_slice()).collect();
            mean(&rows)
        })
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let correct = test
        .iter()
        .filter(|(v, y)| {
            let best = (0..classes)
                .min_by(|&a, &b| dist(v, &centroids[a]).total_cmp(&dist(v, &centroids[b])))
                .unwrap();
            best == *y
        })
        .count();
    correct as f64 / test.len() as f64
}

fn encode(samples: &[Sample], f: impl Fn(&Sample) -> Vec<f64>) -> Vec<(Vec<f64>, usize)> {
    samples.iter().map(|s| (f(s), s.label)).collect()
}

#[test]
fn averaging_hides_confounded_classes_that_vlad_separates() {
    let ds = synth_generate(&SynthConfig::default()).unwrap();
    let (train, val) = (ds.samples(Split::Train, 0), ds.samples(Split::Val, 0));
    let classes = ds.config.num_classes;

    let avg = |s: &Sample| average_pool(&s.features);
    let avg_acc = nearest_mean_accuracy(&encode(&train, avg), &encode(&val, avg), classes);

    let vocab = &ds.vocabulary[0];
    let d = ds.config.dim;
    let anchors: Vec<f64> = vocab.iter().flatten().copied().collect();
    let cb = Codebook::new(vocab.len(), d, anchors, 1.0).unwrap();
    let vlad = |s: &Sample| actionvlad_descriptor(&s.features, &cb).unwrap().values().to_vec();
    let vlad_acc = nearest_mean_accuracy(&encode(&train, vlad), &encode(&val, vlad), classes);

    assert!(avg_acc < 0.4, "avg {avg_acc}");
    assert!(vlad_acc > 0.9, "vlad {vlad_acc}");
}

#[test]
fn noiseless_disjoint_classes_are_separable_by_averaging() {
    let ds = synth_generate(&SynthConfig {
        composition: Composition::Disjoint,
        noise: 0.0,
        ..small(Composition::Disjoint, 3)
    })
    .unwrap();
    let avg = |s: &Sample| average_pool(&s.features);
    let train = encode(&ds.samples(Split::Train, 0), avg);
    let val = encode(&ds.samples(Split::Val, 0), avg);
    assert_eq!(nearest_mean_accuracy(&train, &val, 4), 1.0);
    for (v, y) in &val {
        let centroid = &train.iter().find(|(_, c)| c == y).unwrap().0;
        assert!(max_abs_diff(v, centroid) <= 1e-12);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let base = SynthConfig::default();
    for cfg in [
        SynthConfig { num_classes: 1, ..base.clone() },
        SynthConfig { noise: -1.0, ..base.clone() },
        SynthConfig { streams: 3, ..base.clone() },
        SynthConfig { composition: Composition::Confounded { blocks: 9 }, ..base.clone() },
        SynthConfig { num_classes: 500, ..base.clone() },
    ] {
        assert_eq!(synth_generate(&cfg).unwrap_err().category(), "invalid-argument");
    }
}
