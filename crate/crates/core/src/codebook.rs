//! Codebook of "action words" and its k-means initialization.
//!
//! A codebook carries two anchor sets of identical shape. The residual
//! anchors are subtracted from descriptors before accumulation; the
//! assignment anchors only enter the soft-assignment softmax. Both start out
//! as the same centers and are free to drift apart during joint training.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default sharpness of the soft assignment.
pub const DEFAULT_ALPHA: f64 = 1000.0;
/// Default number of cells.
pub const DEFAULT_K: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    k: usize,
    dim: usize,
    alpha: f64,
    residual_anchors: Vec<f64>,
    assign_anchors: Vec<f64>,
}

impl Codebook {
    /// Builds a codebook whose assignment anchors are an exact copy of the
    /// residual anchors. `anchors` is `k × dim`, row-major.
    pub fn new(k: usize, dim: usize, anchors: Vec<f64>, alpha: f64) -> Result<Self> {
        let assign = anchors.clone();
        Self::from_parts(k, dim, alpha, anchors, assign)
    }

    pub fn from_rows(rows: &[Vec<f64>], alpha: f64) -> Result<Self> {
        let k = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let mut anchors = Vec::with_capacity(k * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::mismatch("anchor dim", dim, row.len()));
            }
            anchors.extend_from_slice(row);
        }
        Self::new(k, dim, anchors, alpha)
    }

    /// Reassembles a codebook whose anchor sets may differ (e.g. after
    /// finetuning, or when loading a checkpoint).
    pub fn from_parts(
        k: usize,
        dim: usize,
        alpha: f64,
        residual_anchors: Vec<f64>,
        assign_anchors: Vec<f64>,
    ) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::Empty("codebook anchors"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        let expected = k
            .checked_mul(dim)
            .ok_or_else(|| Error::DimensionOverflow(format!("{k}x{dim} anchors")))?;
        for anchors in [&residual_anchors, &assign_anchors] {
            if anchors.len() != expected {
                return Err(Error::mismatch("anchor matrix length", expected, anchors.len()));
            }
            if anchors.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("codebook anchors"));
            }
        }
        Ok(Self {
            k,
            dim,
            alpha,
            residual_anchors,
            assign_anchors,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn residual_anchors(&self) -> &[f64] {
        &self.residual_anchors
    }

    pub fn assign_anchors(&self) -> &[f64] {
        &self.assign_anchors
    }

    pub fn residual_anchor(&self, k: usize) -> &[f64] {
        &self.residual_anchors[k * self.dim..(k + 1) * self.dim]
    }

    pub fn assign_anchor(&self, k: usize) -> &[f64] {
        &self.assign_anchors[k * self.dim..(k + 1) * self.dim]
    }

    /// Mutable access to both anchor sets, `(residual, assign)`.
    pub fn anchors_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.residual_anchors, &mut self.assign_anchors)
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        self.alpha = alpha;
        Ok(())
    }
}

/// Wraps a `k × dim` anchor matrix into a codebook with identical anchor sets.
pub fn build_codebook(anchors: &[Vec<f64>], alpha: f64) -> Result<Codebook> {
    Codebook::from_rows(anchors, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub k: usize,
    pub dim: usize,
    /// `k × dim`, row-major.
    pub centers: Vec<f64>,
    /// Within-cluster sum of squares after each assignment step.
    pub costs: Vec<f64>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeans {
    pub fn cost(&self) -> f64 {
        self.costs.last().copied().unwrap_or(0.0)
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k * self.dim..(k + 1) * self.dim]
    }

    pub fn into_codebook(self, alpha: f64) -> Result<Codebook> {
        Codebook::new(self.k, self.dim, self.centers, alpha)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center and its squared distance; lowest index wins ties.
fn nearest(x: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn assign_all(samples: &[f64], centers: &[f64], dim: usize) -> Vec<(usize, f64)> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        samples
            .par_chunks_exact(dim)
            .map(|x| nearest(x, centers, dim))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        samples
            .chunks_exact(dim)
            .map(|x| nearest(x, centers, dim))
            .collect()
    }
}

fn plus_plus_seed(samples: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = samples.len() / dim;
    let row = |i: usize| &samples[i * dim..(i + 1) * dim];
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(row(first));

    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just above the final partial sum.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            // Every sample already coincides with a center.
            rng.random_range(0..n)
        };
        centers.extend_from_slice(row(pick));
        for (i, slot) in d2.iter_mut().enumerate() {
            let d = sq_dist(row(i), row(pick));
            if d < *slot {
                *slot = d;
            }
        }
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding. `samples` holds `n × dim`
/// values row-major. Deterministic for a fixed `(samples, k, seed)`.
pub fn kmeans(samples: &[f64], dim: usize, k: usize, opts: KMeansOptions) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("sample dim must be at least 1".into()));
    }
    if !samples.len().is_multiple_of(dim) {
        return Err(Error::mismatch("sample buffer length", samples.len() / dim * dim, samples.len()));
    }
    let n = samples.len() / dim;
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "k-means needs at least k={k} samples, got {n}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means samples"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centers = plus_plus_seed(samples, dim, k, &mut rng);
    let mut costs = Vec::new();
    let mut assignments: Vec<usize> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters.max(1) {
        let nearest = assign_all(samples, &centers, dim);
        let cost: f64 = nearest.iter().map(|&(_, d)| d).sum();
        let new_assign: Vec<usize> = nearest.iter().map(|&(c, _)| c).collect();
        if let Some(&prev) = costs.last() {
            let prev: f64 = prev;
            debug_assert!(
                cost <= prev + 1e-9 * prev.abs().max(1.0),
                "k-means cost increased: {prev} -> {cost}"
            );
        }
        costs.push(cost);
        iterations += 1;
        if new_assign == assignments {
            converged = true;
            break;
        }
        assignments = new_assign;

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (x, &c) in samples.chunks_exact(dim).zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            let center = &mut centers[c * dim..(c + 1) * dim];
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in center.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *dst = s * inv;
                }
            } else {
                // Empty cell: move it onto the sample worst served by its center.
                let far = nearest
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken[*i])
                    .fold((0usize, -1.0f64), |best, (i, &(_, d))| {
                        if d > best.1 {
                            (i, d)
                        } else {
                            best
                        }
                    })
                    .0;
                taken[far] = true;
                center.copy_from_slice(&samples[far * dim..(far + 1) * dim]);
            }
        }
    }

    if assignments.len() != n {
        assignments = assign_all(samples, &centers, dim).into_iter().map(|(c, _)| c).collect();
    }

    Ok(KMeans {
        k,
        dim,
        centers,
        costs,
        assignments,
        iterations,
        converged,
    })
}

/// Runs k-means on `samples` and wraps the centers into a codebook.
pub fn kmeans_init(
    samples: &[f64],
    dim: usize,
    k: usize,
    alpha: f64,
    opts: KMeansOptions,
) -> Result<Codebook> {
    kmeans(samples, dim, k, opts)?.into_codebook(alpha)
}

/// Uniformly subsamples at most `limit` rows (without replacement) from
/// `samples`, preserving their original order.
pub fn subsample_rows(samples: &[f64], dim: usize, limit: usize, seed: u64) -> Vec<f64> {
    let n = samples.len() / dim.max(1);
    if n <= limit {
        return samples.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, limit).into_vec();
    picked.sort_unstable();
    let mut out = Vec::with_capacity(limit * dim);
    for i in picked {
        out.extend_from_slice(&samples[i * dim..(i + 1) * dim]);
    }
    out
}
