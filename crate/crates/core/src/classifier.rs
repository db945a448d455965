//! Linear softmax classifier and the optimizer primitives used to train it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `logits = W · v + b` with `W` stored row-major, one row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    classes: usize,
    input_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    dropout: f64,
}

impl ClassifierModel {
    pub fn zeros(classes: usize, input_dim: usize, dropout: f64) -> Result<Self> {
        Self::from_parts(
            classes,
            input_dim,
            vec![0.0; classes * input_dim],
            vec![0.0; classes],
            dropout,
        )
    }

    pub fn from_parts(
        classes: usize,
        input_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        dropout: f64,
    ) -> Result<Self> {
        if classes == 0 || input_dim == 0 {
            return Err(Error::Empty("classifier shape"));
        }
        if weights.len() != classes * input_dim {
            return Err(Error::mismatch("classifier weights", classes * input_dim, weights.len()));
        }
        if bias.len() != classes {
            return Err(Error::mismatch("classifier bias", classes, bias.len()));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("classifier parameters"));
        }
        check_rate(dropout)?;
        Ok(Self {
            classes,
            input_dim,
            weights,
            bias,
            dropout,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn weight_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.input_dim..(class + 1) * self.input_dim]
    }

    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim {
            return Err(Error::mismatch("classifier input", self.input_dim, v.len()));
        }
        Ok(self
            .weights
            .chunks_exact(self.input_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect())
    }

    /// Accumulates `dL/dW` and `dL/db` for one sample into the given buffers
    /// and returns `dL/dv`.
    pub fn backward_into(
        &self,
        v: &[f64],
        grad_logits: &[f64],
        grad_w: &mut [f64],
        grad_b: &mut [f64],
    ) -> Vec<f64> {
        let mut grad_v = vec![0.0; self.input_dim];
        for (c, &g) in grad_logits.iter().enumerate() {
            grad_b[c] += g;
            if g == 0.0 {
                continue;
            }
            let row = c * self.input_dim..(c + 1) * self.input_dim;
            for ((gw, w), (x, gv)) in grad_w[row.clone()]
                .iter_mut()
                .zip(&self.weights[row])
                .zip(v.iter().zip(grad_v.iter_mut()))
            {
                *gw += g * x;
                *gv += g * w;
            }
        }
        grad_v
    }
}

/// Convenience wrapper for [`ClassifierModel::forward`].
pub fn classifier_forward(v: &[f64], model: &ClassifierModel) -> Result<Vec<f64>> {
    model.forward(v)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum);
    p
}

/// Cross-entropy of the softmax of `logits` against `label`, with its
/// gradient `softmax(logits) − onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_sum = max + sum.ln();
    let loss = log_sum - logits[label];
    let mut grad: Vec<f64> = logits.iter().map(|z| (z - log_sum).exp()).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Inverted-dropout multipliers: `0` with probability `rate`, otherwise
/// `1 / (1 − rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_rate(rate)?;
    if rate == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

/// Inverted dropout; identity outside training or at rate 0.
pub fn apply_dropout<R: Rng + ?Sized>(v: &[f64], rate: f64, rng: &mut R, training: bool) -> Result<Vec<f64>> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(v.to_vec());
    }
    let mask = dropout_mask(v.len(), rate, rng)?;
    Ok(v.iter().zip(&mask).map(|(x, m)| x * m).collect())
}

pub fn global_norm(grads: &[Vec<f64>]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Rescales all tensors jointly so their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_gradients(grads: &mut [Vec<f64>], max_norm: f64) -> Result<f64> {
    if max_norm.is_nan() || max_norm <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "clip norm must be positive, got {max_norm}"
        )));
    }
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            g.iter_mut().for_each(|x| *x *= scale);
        }
    }
    Ok(norm)
}

/// Elementwise mean of several gradient sets with identical shapes.
pub fn accumulate_gradients(micro: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
    let first = micro.first().ok_or(Error::Empty("micro-batch gradients"))?;
    let mut sum: Vec<Vec<f64>> = first.clone();
    for set in &micro[1..] {
        if set.len() != sum.len() {
            return Err(Error::mismatch("gradient tensor count", sum.len(), set.len()));
        }
        for (acc, g) in sum.iter_mut().zip(set) {
            if acc.len() != g.len() {
                return Err(Error::mismatch("gradient tensor length", acc.len(), g.len()));
            }
            acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
    }
    if micro.len() > 1 {
        let inv = 1.0 / micro.len() as f64;
        for acc in sum.iter_mut() {
            acc.iter_mut().for_each(|a| *a *= inv);
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, epsilon: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(shapes: &[usize]) -> Self {
        Self {
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update applied to every parameter tensor.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() || state.first.len() != grads.len() {
        return Err(Error::mismatch("adam tensor count", grads.len(), params.len()));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.first) {
        if p.len() != g.len() || m.len() != g.len() {
            return Err(Error::mismatch("adam tensor length", p.len(), g.len()));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first[i];
        let v = &mut state.second[i];
        for j in 0..g.len() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
