//! Soft-assignment VLAD aggregation over a video's descriptors, its exact
//! backward pass, and the average/max pooling baselines.
//!
//! For each descriptor `x` the soft assignment to cell `k` is
//! `softmax_k(-alpha * |x - a_k|^2)` over the assignment anchors `a_k`; the
//! aggregated matrix accumulates `p_k(x) * (x - c_k)` over every frame and
//! location, with `c_k` the residual anchors. Columns are then L2-normalized
//! independently, concatenated in cell order and L2-normalized as a whole.

use crate::codebook::{sq_dist, Codebook};
use crate::error::{Error, Result};
use crate::feature::FeatureMap;

/// Norms below this are treated as zero: the vector is set to exact zeros
/// and its normalization passes no gradient.
pub const NORM_EPS: f64 = 1e-12;

/// Aggregated residual matrix, `dim × k`, stored column-major so that cell
/// `k` occupies `data[k * dim..(k + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawVlad {
    dim: usize,
    k: usize,
    data: Vec<f64>,
}

impl RawVlad {
    pub fn zeros(dim: usize, k: usize) -> Self {
        Self {
            dim,
            k,
            data: vec![0.0; dim * k],
        }
    }

    pub fn from_columns(dim: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * k {
            return Err(Error::mismatch("raw vlad length", dim * k, data.len()));
        }
        Ok(Self { dim, k, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.k).map(move |k| self.column(k))
    }

    /// Entry `V[j, k]`.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[k * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Final video representation of length `k · dim`; cell `k` occupies
/// positions `[k·dim, (k+1)·dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VladDescriptor {
    dim: usize,
    k: usize,
    values: Vec<f64>,
}

impl VladDescriptor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `v` to unit length and returns its original norm. Vectors with
/// norm below [`NORM_EPS`] become exact zeros.
pub fn l2_normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = l2_norm(v);
    if norm < NORM_EPS {
        v.fill(0.0);
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Backpropagates through `y = x / |x|` given the output `y` and the input
/// norm. Writes the input gradient into `grad` in place.
fn normalize_backward(y: &[f64], norm: f64, grad: &mut [f64]) {
    if norm < NORM_EPS {
        grad.fill(0.0);
        return;
    }
    let dot: f64 = y.iter().zip(grad.iter()).map(|(a, b)| a * b).sum();
    let inv = 1.0 / norm;
    for (g, yi) in grad.iter_mut().zip(y) {
        *g = (*g - yi * dot) * inv;
    }
}

fn check_descriptor(x: &[f64], cb: &Codebook) -> Result<()> {
    if x.len() != cb.dim() {
        return Err(Error::mismatch("descriptor dim vs codebook", cb.dim(), x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("descriptor"));
    }
    Ok(())
}

fn check_map(f: &FeatureMap, cb: &Codebook) -> Result<()> {
    if f.dim() != cb.dim() {
        return Err(Error::mismatch("feature dim vs codebook", cb.dim(), f.dim()));
    }
    Ok(())
}

/// Stable softmax of `-alpha * |x - a_k|^2` written into `out` (length k).
fn soft_assign_into(x: &[f64], cb: &Codebook, out: &mut [f64]) {
    let alpha = cb.alpha();
    let mut max = f64::NEG_INFINITY;
    for (k, slot) in out.iter_mut().enumerate() {
        let z = -alpha * sq_dist(x, cb.assign_anchor(k));
        *slot = z;
        if z > max {
            max = z;
        }
    }
    let mut sum = 0.0;
    for slot in out.iter_mut() {
        *slot = (*slot - max).exp();
        sum += *slot;
    }
    let inv = 1.0 / sum;
    out.iter_mut().for_each(|p| *p *= inv);
}

/// Soft assignment of a single descriptor to every cell; sums to one.
pub fn soft_assign(x: &[f64], cb: &Codebook) -> Result<Vec<f64>> {
    check_descriptor(x, cb)?;
    let mut p = vec![0.0; cb.k()];
    soft_assign_into(x, cb, &mut p);
    Ok(p)
}

/// Soft assignments of every descriptor, `len × k`, frame-major.
pub fn soft_assign_all(f: &FeatureMap, cb: &Codebook) -> Result<Vec<f64>> {
    check_map(f, cb)?;
    let k = cb.k();
    let mut out = vec![0.0; f.len() * k];
    if k > 0 {
        for (x, p) in f.descriptors().zip(out.chunks_exact_mut(k)) {
            soft_assign_into(x, cb, p);
        }
    }
    Ok(out)
}

/// Most likely cell per descriptor, lowest index on ties. Row-major `T × N`.
pub fn assignment_map(f: &FeatureMap, cb: &Codebook) -> Result<Vec<usize>> {
    let k = cb.k();
    let probs = soft_assign_all(f, cb)?;
    Ok(probs.chunks_exact(k).map(argmax).collect())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn accumulate(f: &FeatureMap, cb: &Codebook, assignments: &[f64]) -> RawVlad {
    let (k, dim) = (cb.k(), cb.dim());
    let mut v = RawVlad::zeros(dim, k);
    for (x, p) in f.descriptors().zip(assignments.chunks_exact(k)) {
        for (cell, &pk) in p.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            let col = &mut v.data[cell * dim..(cell + 1) * dim];
            for ((acc, xj), cj) in col.iter_mut().zip(x).zip(cb.residual_anchor(cell)) {
                *acc += pk * (xj - cj);
            }
        }
    }
    v
}

/// Aggregates residuals of every descriptor to every cell, weighted by the
/// soft assignment. Descriptors are visited frame by frame, locations in
/// order, so the result is reproducible bit for bit.
pub fn actionvlad_forward(f: &FeatureMap, cb: &Codebook) -> Result<RawVlad> {
    check_map(f, cb)?;
    let (k, dim) = (cb.k(), cb.dim());
    let mut v = RawVlad::zeros(dim, k);
    let mut p = vec![0.0; k];
    for x in f.descriptors() {
        soft_assign_into(x, cb, &mut p);
        for (cell, &pk) in p.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            let col = &mut v.data[cell * dim..(cell + 1) * dim];
            for ((acc, xj), cj) in col.iter_mut().zip(x).zip(cb.residual_anchor(cell)) {
                *acc += pk * (xj - cj);
            }
        }
    }
    Ok(v)
}

/// Classic hard-assignment VLAD: each descriptor contributes its residual
/// only to the cell of its nearest assignment anchor (lowest index on ties).
pub fn hard_vlad_forward(f: &FeatureMap, cb: &Codebook) -> Result<RawVlad> {
    check_map(f, cb)?;
    let (k, dim) = (cb.k(), cb.dim());
    let mut v = RawVlad::zeros(dim, k);
    for x in f.descriptors() {
        let mut best = (0, f64::INFINITY);
        for cell in 0..k {
            let d = sq_dist(x, cb.assign_anchor(cell));
            if d < best.1 {
                best = (cell, d);
            }
        }
        let cell = best.0;
        let col = &mut v.data[cell * dim..(cell + 1) * dim];
        for ((acc, xj), cj) in col.iter_mut().zip(x).zip(cb.residual_anchor(cell)) {
            *acc += xj - cj;
        }
    }
    Ok(v)
}

/// Per-column L2 normalization; degenerate columns become exact zeros.
pub fn intra_normalize(v: &RawVlad) -> RawVlad {
    let mut out = v.clone();
    for col in out.data.chunks_exact_mut(out.dim.max(1)) {
        l2_normalize_in_place(col);
    }
    out
}

/// Concatenates the columns in cell order and L2-normalizes the result.
pub fn flatten_l2_normalize(v: &RawVlad) -> VladDescriptor {
    let mut values = v.data.clone();
    l2_normalize_in_place(&mut values);
    VladDescriptor {
        dim: v.dim,
        k: v.k,
        values,
    }
}

/// Full pipeline: aggregation, intra-normalization, flatten and L2.
pub fn actionvlad_descriptor(f: &FeatureMap, cb: &Codebook) -> Result<VladDescriptor> {
    let raw = actionvlad_forward(f, cb)?;
    Ok(flatten_l2_normalize(&intra_normalize(&raw)))
}

/// Gradients of a scalar objective with respect to the layer inputs and
/// parameters. All buffers are row-major: `features` mirrors the feature
/// map, anchors are `k × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct VladGradients {
    pub features: Vec<f64>,
    pub residual_anchors: Vec<f64>,
    pub assign_anchors: Vec<f64>,
}

/// Forward intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct VladPass {
    assignments: Vec<f64>,
    raw: RawVlad,
    intra: RawVlad,
    column_norms: Vec<f64>,
    total_norm: f64,
    descriptor: VladDescriptor,
}

impl VladPass {
    pub fn run(f: &FeatureMap, cb: &Codebook) -> Result<Self> {
        let assignments = soft_assign_all(f, cb)?;
        let raw = accumulate(f, cb, &assignments);
        let mut intra = raw.clone();
        let column_norms = intra
            .data
            .chunks_exact_mut(raw.dim)
            .map(l2_normalize_in_place)
            .collect();
        let descriptor = flatten_l2_normalize(&intra);
        let total_norm = l2_norm(&intra.data);
        Ok(Self {
            assignments,
            raw,
            intra,
            column_norms,
            total_norm,
            descriptor,
        })
    }

    pub fn assignments(&self) -> &[f64] {
        &self.assignments
    }

    pub fn raw(&self) -> &RawVlad {
        &self.raw
    }

    pub fn descriptor(&self) -> &VladDescriptor {
        &self.descriptor
    }

    /// Backpropagates `upstream` (gradient w.r.t. the final descriptor)
    /// through normalization and aggregation.
    pub fn backward(&self, f: &FeatureMap, cb: &Codebook, upstream: &[f64]) -> Result<VladGradients> {
        check_map(f, cb)?;
        let (k, dim) = (cb.k(), cb.dim());
        if upstream.len() != k * dim {
            return Err(Error::mismatch("upstream gradient length", k * dim, upstream.len()));
        }
        if self.assignments.len() != f.len() * k {
            return Err(Error::mismatch("cached assignments", self.assignments.len(), f.len() * k));
        }

        // Through the global L2 normalization.
        let mut grad_v = upstream.to_vec();
        normalize_backward(self.descriptor.values(), self.total_norm, &mut grad_v);
        // Through the per-column normalization.
        for (cell, g) in grad_v.chunks_exact_mut(dim).enumerate() {
            normalize_backward(self.intra.column(cell), self.column_norms[cell], g);
        }

        let alpha2 = 2.0 * cb.alpha();
        let mut grad_x = vec![0.0; f.len() * dim];
        let mut grad_c = vec![0.0; k * dim];
        let mut grad_a = vec![0.0; k * dim];
        let mut mass = vec![0.0; k];
        let mut q = vec![0.0; k];

        for ((x, p), gx) in f
            .descriptors()
            .zip(self.assignments.chunks_exact(k))
            .zip(grad_x.chunks_exact_mut(dim))
        {
            // dL/dp_k = <dL/dV_k, x - c_k>
            let mut qbar = 0.0;
            for cell in 0..k {
                let gv = &grad_v[cell * dim..(cell + 1) * dim];
                let c = cb.residual_anchor(cell);
                q[cell] = gv
                    .iter()
                    .zip(x.iter().zip(c))
                    .map(|(g, (xj, cj))| g * (xj - cj))
                    .sum();
                qbar += p[cell] * q[cell];
                mass[cell] += p[cell];
            }
            for cell in 0..k {
                let pk = p[cell];
                let gv = &grad_v[cell * dim..(cell + 1) * dim];
                let a = cb.assign_anchor(cell);
                // dL/dz_k through the softmax, z_k = -alpha |x - a_k|^2.
                let dz = pk * (q[cell] - qbar);
                let ga = &mut grad_a[cell * dim..(cell + 1) * dim];
                for j in 0..dim {
                    let diff = x[j] - a[j];
                    gx[j] += pk * gv[j] - alpha2 * dz * diff;
                    ga[j] += alpha2 * dz * diff;
                }
            }
        }
        for cell in 0..k {
            let gv = &grad_v[cell * dim..(cell + 1) * dim];
            for (gc, g) in grad_c[cell * dim..(cell + 1) * dim].iter_mut().zip(gv) {
                *gc = -mass[cell] * g;
            }
        }

        Ok(VladGradients {
            features: grad_x,
            residual_anchors: grad_c,
            assign_anchors: grad_a,
        })
    }
}

/// Gradients of the full pipeline given the gradient w.r.t. the final
/// descriptor. Recomputes the forward pass.
pub fn actionvlad_backward(f: &FeatureMap, cb: &Codebook, upstream: &[f64]) -> Result<VladGradients> {
    VladPass::run(f, cb)?.backward(f, cb, upstream)
}

/// Elementwise mean over all descriptors (zero vector for an empty map).
pub fn average_pool_raw(f: &FeatureMap) -> Vec<f64> {
    let mut mean = vec![0.0; f.dim()];
    for x in f.descriptors() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    if !f.is_empty() {
        let inv = 1.0 / f.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
    }
    mean
}

/// Mean descriptor, L2-normalized.
pub fn average_pool(f: &FeatureMap) -> Vec<f64> {
    let mut v = average_pool_raw(f);
    l2_normalize_in_place(&mut v);
    v
}

/// Elementwise maximum and the index of the first descriptor attaining it.
fn max_with_argmax(f: &FeatureMap) -> (Vec<f64>, Vec<usize>) {
    let dim = f.dim();
    if f.is_empty() {
        return (vec![0.0; dim], vec![0; dim]);
    }
    let mut max = f.descriptor(0, 0).to_vec();
    let mut arg = vec![0; dim];
    for (n, x) in f.descriptors().enumerate().skip(1) {
        for j in 0..dim {
            if x[j] > max[j] {
                max[j] = x[j];
                arg[j] = n;
            }
        }
    }
    (max, arg)
}

pub fn max_pool_raw(f: &FeatureMap) -> Vec<f64> {
    max_with_argmax(f).0
}

/// Elementwise maximum, L2-normalized.
pub fn max_pool(f: &FeatureMap) -> Vec<f64> {
    let mut v = max_pool_raw(f);
    l2_normalize_in_place(&mut v);
    v
}

/// Gradient of `average_pool` w.r.t. the feature map.
pub fn average_pool_backward(f: &FeatureMap, upstream: &[f64]) -> Result<Vec<f64>> {
    if upstream.len() != f.dim() {
        return Err(Error::mismatch("upstream gradient length", f.dim(), upstream.len()));
    }
    let mut mean = average_pool_raw(f);
    let norm = l2_normalize_in_place(&mut mean);
    let mut g = upstream.to_vec();
    normalize_backward(&mean, norm, &mut g);
    let inv = if f.is_empty() { 0.0 } else { 1.0 / f.len() as f64 };
    Ok(g.iter().map(|v| v * inv).collect::<Vec<_>>().repeat(f.len()))
}

/// Gradient of `max_pool` w.r.t. the feature map: each component's gradient
/// goes to the first descriptor attaining the maximum.
pub fn max_pool_backward(f: &FeatureMap, upstream: &[f64]) -> Result<Vec<f64>> {
    let dim = f.dim();
    if upstream.len() != dim {
        return Err(Error::mismatch("upstream gradient length", dim, upstream.len()));
    }
    let (mut max, arg) = max_with_argmax(f);
    let norm = l2_normalize_in_place(&mut max);
    let mut g = upstream.to_vec();
    normalize_backward(&max, norm, &mut g);
    let mut out = vec![0.0; f.len() * dim];
    if !f.is_empty() {
        for j in 0..dim {
            out[arg[j] * dim + j] = g[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cb(rows: &[Vec<f64>], alpha: f64) -> Codebook {
        Codebook::from_rows(rows, alpha).unwrap()
    }

    #[test]
    fn soft_assign_single_cell() {
        let c = cb(&[vec![3.0, -2.0]], 1000.0);
        assert_eq!(soft_assign(&[100.0, 5.0], &c).unwrap(), vec![1.0]);
    }

    #[test]
    fn soft_assign_symmetric() {
        for alpha in [0.1, 1.0, 1000.0] {
            let c = cb(&[vec![1.0, 0.0], vec![0.0, 1.0]], alpha);
            let p = soft_assign(&[0.0, 0.0], &c).unwrap();
            assert_eq!(p, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn soft_assign_closed_form() {
        let c = cb(&[vec![1.0, 0.0], vec![2.0, 0.0]], 1.0);
        let p = soft_assign(&[0.0, 0.0], &c).unwrap();
        let e = (-3.0f64).exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-15);
        assert!((p[0] - 0.95257).abs() < 1e-5);
        assert!((p[1] - 0.04743).abs() < 1e-5);
    }

    #[test]
    fn soft_assign_survives_large_exponents() {
        let c = cb(&[vec![0.0], vec![100.0]], 1000.0);
        let p = soft_assign(&[60.0], &c).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn soft_assign_errors() {
        let c = cb(&[vec![0.0, 0.0]], 1.0);
        assert!(matches!(
            soft_assign(&[1.0], &c),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            soft_assign(&[1.0, f64::INFINITY], &c),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn hard_limit_single_descriptor() {
        let c = cb(&[vec![0.0, 0.0], vec![5.0, 5.0], vec![-5.0, 5.0]], 1e6);
        let f = FeatureMap::new(1, 1, 2, vec![4.0, 6.0]).unwrap();
        let v = actionvlad_forward(&f, &c).unwrap();
        assert_eq!(v.column(1), &[-1.0, 1.0]);
        assert!(v.column(0).iter().all(|x| x.abs() < 1e-12));
        assert!(v.column(2).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn zero_residuals() {
        let c = cb(&[vec![1.5, -0.5, 2.0]], 10.0);
        let f = FeatureMap::new(2, 3, 3, [1.5, -0.5, 2.0].repeat(6)).unwrap();
        let v = actionvlad_forward(&f, &c).unwrap();
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
        let d = actionvlad_descriptor(&f, &c).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn forward_rejects_dim_mismatch() {
        let c = cb(&[vec![0.0, 0.0]], 1.0);
        let f = FeatureMap::new(1, 1, 3, vec![0.0; 3]).unwrap();
        assert!(actionvlad_forward(&f, &c).is_err());
        assert!(actionvlad_backward(&f, &c, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn intra_normalize_examples() {
        let v = RawVlad::from_columns(2, 2, vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        let n = intra_normalize(&v);
        assert_eq!(n.column(0), &[0.6, 0.8]);
        assert_eq!(n.column(1), &[0.0, 0.0]);
    }

    #[test]
    fn tiny_columns_are_zeroed() {
        let v = RawVlad::from_columns(2, 1, vec![1e-13, 0.0]).unwrap();
        assert_eq!(intra_normalize(&v).column(0), &[0.0, 0.0]);
    }

    #[test]
    fn flatten_examples() {
        let v = RawVlad::from_columns(2, 1, vec![0.0, 2.0]).unwrap();
        assert_eq!(flatten_l2_normalize(&v).values(), &[0.0, 1.0]);
        let z = RawVlad::zeros(3, 2);
        assert_eq!(flatten_l2_normalize(&z).values(), &[0.0; 6]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let c = cb(&[vec![0.0, 1.0], vec![1.0, 0.0]], 2.0);
        let f = FeatureMap::new(2, 2, 2, vec![0.3, 0.1, -0.2, 0.5, 1.0, 0.9, 0.4, -0.7]).unwrap();
        let g = actionvlad_backward(&f, &c, &[0.0; 4]).unwrap();
        assert!(g.features.iter().all(|&v| v == 0.0));
        assert!(g.residual_anchors.iter().all(|&v| v == 0.0));
        assert!(g.assign_anchors.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_gradient_is_shared() {
        let c = cb(&[vec![0.1, -0.3, 0.2]], 5.0);
        let f = FeatureMap::new(2, 3, 3, (0..18).map(|v| (v as f64 * 0.37).sin()).collect()).unwrap();
        let g = actionvlad_backward(&f, &c, &[0.4, -1.0, 0.25]).unwrap();
        let first = &g.features[..3];
        for gx in g.features.chunks_exact(3) {
            for (a, b) in gx.iter().zip(first) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        for (gc, gx) in g.residual_anchors.iter().zip(first) {
            assert!((gc + 6.0 * gx).abs() < 1e-12);
        }
        assert!(g.assign_anchors.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pooling_examples() {
        let f = FeatureMap::new(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let avg = average_pool(&f);
        let max = max_pool(&f);
        for v in [avg, max] {
            assert!((v[0] - h).abs() < 1e-15 && (v[1] - h).abs() < 1e-15);
        }
        let u = FeatureMap::new(3, 1, 2, [3.0, 4.0].repeat(3)).unwrap();
        let avg = average_pool(&u);
        assert!((avg[0] - 0.6).abs() < 1e-15 && (avg[1] - 0.8).abs() < 1e-15);
        let single = FeatureMap::new(1, 1, 2, vec![0.0, -2.0]).unwrap();
        assert_eq!(max_pool(&single), vec![0.0, -1.0]);
    }

    #[test]
    fn max_pool_backward_routes_to_first_argmax() {
        let f = FeatureMap::new(1, 3, 2, vec![1.0, 0.0, 1.0, 2.0, 0.5, 2.0]).unwrap();
        let g = max_pool_backward(&f, &[1.0, 0.0]).unwrap();
        // Column 0 ties between descriptors 0 and 1: the first wins.
        assert!(g[0] != 0.0 && g[2] == 0.0);
        // Column 1 ties between descriptors 1 and 2.
        assert!(g[3] != 0.0 && g[5] == 0.0);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[4], 0.0);
    }

    #[test]
    fn assignment_map_single_cell_is_zero() {
        let c = cb(&[vec![0.0]], 1.0);
        let f = FeatureMap::new(2, 2, 1, vec![1.0, -4.0, 2.0, 0.0]).unwrap();
        assert_eq!(assignment_map(&f, &c).unwrap(), vec![0; 4]);
    }

    #[test]
    fn empty_map_aggregates_to_zero() {
        let c = cb(&[vec![0.0, 1.0]], 1.0);
        let f = FeatureMap::empty(2);
        assert!(actionvlad_forward(&f, &c).unwrap().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(average_pool(&f), vec![0.0, 0.0]);
        assert_eq!(max_pool(&f), vec![0.0, 0.0]);
    }
}
