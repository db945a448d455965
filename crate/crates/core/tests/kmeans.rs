mod common;

use actionvlad::codebook::subsample_rows;
use actionvlad::{kmeans, kmeans_init, KMeansOptions};
use common::*;
use rand::Rng;

fn cost_1d(samples: &[f64], labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|c| {
            let members: Vec<f64> = samples
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(x, _)| *x)
                .collect();
            if members.is_empty() {
                return 0.0;
            }
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            members.iter().map(|x| (x - mean).powi(2)).sum()
        })
        .sum()
}

/// Minimum within-cluster cost over every labelling of `samples` into `k`
/// groups.
fn exhaustive_optimum(samples: &[f64], k: usize) -> f64 {
    let n = samples.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(cost_1d(samples, &labels, k));
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

#[test]
fn four_points_two_clusters_reach_global_optimum() {
    let samples = [0.0, 1.0, 10.0, 11.0];
    let optimum = exhaustive_optimum(&samples, 2);
    assert_eq!(optimum, 1.0);
    for seed in 0..10 {
        let km = kmeans(&samples, 1, 2, KMeansOptions { max_iters: 100, seed }).unwrap();
        assert!((km.cost() - optimum).abs() < 1e-12);
        let mut centers = [km.center(0)[0], km.center(1)[0]];
        centers.sort_by(f64::total_cmp);
        assert_eq!(centers, [0.5, 10.5]);
    }
}

#[test]
fn separated_groups_reach_exhaustive_optimum() {
    let mut r = rng(20);
    for _ in 0..10 {
        let k = r.random_range(2..=3);
        let samples: Vec<f64> = (0..8)
            .map(|i| 100.0 * (i % k) as f64 + r.random_range(-1.0..1.0))
            .collect();
        let optimum = exhaustive_optimum(&samples, k);
        let km = kmeans(&samples, 1, k, KMeansOptions { max_iters: 100, seed: 1 }).unwrap();
        assert!((km.cost() - optimum).abs() < 1e-9, "{} vs {optimum}", km.cost());
    }
}

#[test]
fn one_center_per_distinct_sample_has_zero_cost() {
    let mut r = rng(21);
    let distinct: Vec<Vec<f64>> = (0..6).map(|_| uniform(&mut r, 3, 5.0)).collect();
    let mut samples = Vec::new();
    for i in 0..30 {
        samples.extend_from_slice(&distinct[i % 6]);
    }
    let km = kmeans(&samples, 3, 6, KMeansOptions::default()).unwrap();
    assert!(km.cost() < 1e-24);
    let mut matched: Vec<usize> = (0..6)
        .map(|c| {
            distinct
                .iter()
                .position(|d| max_abs_diff(d, km.center(c)) < 1e-12)
                .expect("center on a sample")
        })
        .collect();
    matched.sort();
    assert_eq!(matched, (0..6).collect::<Vec<_>>());
}

#[test]
fn lloyd_cost_never_increases_and_runs_are_reproducible() {
    let mut r = rng(22);
    let samples = uniform(&mut r, 400 * 4, 1.0);
    let opts = KMeansOptions { max_iters: 50, seed: 9 };
    let a = kmeans(&samples, 4, 7, opts).unwrap();
    assert!(a.costs.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0]));
    let b = kmeans(&samples, 4, 7, opts).unwrap();
    assert_eq!(a, b);
    let cb = kmeans_init(&samples, 4, 7, 1000.0, opts).unwrap();
    assert_eq!(cb.residual_anchors(), cb.assign_anchors());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let again = kmeans_init(&samples, 4, 7, 1000.0, opts).unwrap();
    assert_eq!(bits(cb.residual_anchors()), bits(again.residual_anchors()));
}

#[test]
fn subsampling_keeps_whole_rows() {
    let samples: Vec<f64> = (0..1000).flat_map(|i| [i as f64, -(i as f64)]).collect();
    let sub = subsample_rows(&samples, 2, 100, 3);
    assert_eq!(sub.len(), 200);
    for row in sub.chunks(2) {
        assert_eq!(row[0], -row[1]);
    }
    assert_eq!(subsample_rows(&samples, 2, 5000, 3), samples);
}
