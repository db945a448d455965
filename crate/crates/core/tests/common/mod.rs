//! Brute-force reference implementations shared by the integration tests
//! and the acceptance harness. They favor obviousness over speed and share
//! no code with the library kernels.

#![allow(dead_code, clippy::needless_range_loop)]

use actionvlad::{Codebook, FeatureMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_map(rng: &mut impl Rng, t: usize, n: usize, d: usize) -> FeatureMap {
    FeatureMap::new(t, n, d, uniform(rng, t * n * d, 1.0)).unwrap()
}

/// Codebook whose assignment anchors are perturbed away from the residual
/// anchors, so the two parameter sets are exercised independently.
pub fn random_codebook(rng: &mut impl Rng, k: usize, d: usize, alpha: f64) -> Codebook {
    let c = uniform(rng, k * d, 1.0);
    let a: Vec<f64> = c.iter().map(|v| v + rng.random_range(-0.2..0.2)).collect();
    Codebook::from_parts(k, d, alpha, c, a).unwrap()
}

/// `V[j][k] = Σ_t Σ_i softmax_k(−α‖x_it − a_k‖²) (x_it[j] − c_k[j])`,
/// evaluated with explicit loops over t, i, k and j.
pub fn forward_oracle(f: &FeatureMap, cb: &Codebook) -> Vec<Vec<f64>> {
    let (k, d) = (cb.k(), cb.dim());
    let mut v = vec![vec![0.0; k]; d];
    for t in 0..f.frames() {
        for i in 0..f.locations() {
            let x = f.descriptor(t, i);
            let p = assignment_oracle(x, cb);
            for (cell, pk) in p.iter().enumerate() {
                for j in 0..d {
                    v[j][cell] += pk * (x[j] - cb.residual_anchor(cell)[j]);
                }
            }
        }
    }
    v
}

/// Soft assignment via log-sum-exp.
pub fn assignment_oracle(x: &[f64], cb: &Codebook) -> Vec<f64> {
    let logits: Vec<f64> = (0..cb.k())
        .map(|cell| {
            let a = cb.assign_anchor(cell);
            -cb.alpha() * x.iter().zip(a).map(|(u, v)| (u - v).powi(2)).sum::<f64>()
        })
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| (l - lse).exp()).collect()
}

/// Classic VLAD: each descriptor's residual goes to its nearest assignment
/// anchor (lowest index on ties).
pub fn hard_vlad_oracle(f: &FeatureMap, cb: &Codebook) -> Vec<Vec<f64>> {
    let (k, d) = (cb.k(), cb.dim());
    let mut v = vec![vec![0.0; k]; d];
    for x in f.descriptors() {
        let dist = |cell: usize| -> f64 {
            x.iter()
                .zip(cb.assign_anchor(cell))
                .map(|(u, v)| (u - v).powi(2))
                .sum()
        };
        let mut best = 0;
        for cell in 1..k {
            if dist(cell) < dist(best) {
                best = cell;
            }
        }
        for j in 0..d {
            v[j][best] += x[j] - cb.residual_anchor(best)[j];
        }
    }
    v
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Intra-normalize the columns of a `d × k` matrix, flatten column by
/// column, then L2-normalize. Norms below `1e-12` count as zero.
pub fn normalize_oracle(v: &[Vec<f64>]) -> Vec<f64> {
    let (d, k) = (v.len(), v.first().map_or(0, Vec::len));
    let mut out = Vec::with_capacity(d * k);
    for cell in 0..k {
        let col: Vec<f64> = (0..d).map(|j| v[j][cell]).collect();
        let n = norm(&col);
        out.extend(col.iter().map(|x| if n < 1e-12 { 0.0 } else { x / n }));
    }
    let n = norm(&out);
    if n < 1e-12 {
        out.iter_mut().for_each(|x| *x = 0.0);
    } else {
        out.iter_mut().for_each(|x| *x /= n);
    }
    out
}

/// Column-major flattening of a `d × k` oracle matrix (cell by cell).
pub fn columns(v: &[Vec<f64>]) -> Vec<f64> {
    let k = v.first().map_or(0, Vec::len);
    (0..k).flat_map(|cell| v.iter().map(move |row| row[cell])).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Central finite difference of `loss` with respect to every entry of `x`.
pub fn numeric_gradient(x: &[f64], h: f64, mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = loss(&probe);
            probe[i] = orig - h;
            let down = loss(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞, floor)`: one relative error for a whole
/// gradient tensor, with a floor so that all-zero gradients compare cleanly.
pub fn relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    let scale = analytic
        .iter()
        .chain(numeric)
        .map(|v| v.abs())
        .fold(floor, f64::max);
    max_abs_diff(analytic, numeric) / scale
}

/// Feature map whose values are exactly representable in `f32`, so an
/// `AVF1` round trip must reproduce it bit for bit.
pub fn f32_exact_map(rng: &mut impl Rng, t: usize, n: usize, d: usize) -> FeatureMap {
    let data = (0..t * n * d)
        .map(|_| rng.random_range(-4.0f32..4.0) as f64)
        .collect();
    FeatureMap::new(t, n, d, data).unwrap()
}

/// Copy of `bytes` with one to four random header bytes overwritten and,
/// half the time, a random truncation or extension.
pub fn mutate_header(rng: &mut impl Rng, bytes: &[u8], header_len: usize) -> Vec<u8> {
    let mut out = bytes.to_vec();
    for _ in 0..rng.random_range(1..=4) {
        let i = rng.random_range(0..header_len.min(out.len()));
        out[i] = rng.random();
    }
    if rng.random_bool(0.5) {
        if rng.random_bool(0.5) {
            out.truncate(rng.random_range(0..out.len()));
        } else {
            out.extend((0..rng.random_range(1..16)).map(|_| rng.random::<u8>()));
        }
    }
    out
}
