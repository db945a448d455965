//! Two-stage training: a linear softmax classifier over fixed pooled
//! descriptors, then joint finetuning of classifier and codebook.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{actionvlad_descriptor, argmax, average_pool, max_pool, VladPass};
use crate::classifier::{
    accumulate_gradients, adam_step, clip_gradients, dropout_mask, softmax_cross_entropy,
    AdamConfig, AdamState, ClassifierModel,
};
use crate::codebook::{Codebook, DEFAULT_ALPHA, DEFAULT_K};
use crate::error::{Error, Result};
use crate::feature::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Vlad,
    Avg,
    Max,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Vlad => "vlad",
            Pooling::Avg => "avg",
            Pooling::Max => "max",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vlad" => Ok(Pooling::Vlad),
            "avg" => Ok(Pooling::Avg),
            "max" => Ok(Pooling::Max),
            other => Err(Error::InvalidArgument(format!("unknown pooling mode {other:?}"))),
        }
    }
}

/// Stream combination applied before pooling. Score-level (late) fusion is
/// an evaluation-time choice and is not part of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamFusion {
    None,
    Concat,
    Early,
}

impl fmt::Display for StreamFusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamFusion::None => "none",
            StreamFusion::Concat => "concat",
            StreamFusion::Early => "early",
        })
    }
}

impl FromStr for StreamFusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StreamFusion::None),
            "concat" => Ok(StreamFusion::Concat),
            "early" => Ok(StreamFusion::Early),
            other => Err(Error::InvalidArgument(format!("unknown fusion mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub k: usize,
    pub dropout: f64,
    pub clip_norm: f64,
    pub stage1_lr: f64,
    pub stage2_lr: f64,
    pub adam_epsilon: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// Micro-batches averaged into one optimizer step.
    pub accumulation_steps: usize,
    /// Videos per micro-batch.
    pub batch_size: usize,
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub seed: u64,
    /// Whether layers below the pooling layer would be trained. Features
    /// are precomputed here, so this is recorded but has no effect.
    pub freeze_boundary: bool,
    /// Share one parameter set between residual and assignment anchors.
    pub tie_anchors: bool,
    pub pooling: Pooling,
    pub fusion: StreamFusion,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
            dropout: 0.5,
            clip_norm: 5.0,
            stage1_lr: 0.01,
            stage2_lr: 1e-4,
            adam_epsilon: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            accumulation_steps: 1,
            batch_size: 16,
            stage1_epochs: 60,
            stage2_epochs: 30,
            seed: 0,
            freeze_boundary: true,
            tie_anchors: false,
            pooling: Pooling::Vlad,
            fusion: StreamFusion::None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("clip_norm", self.clip_norm),
            ("adam_epsilon", self.adam_epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("stage1_lr", self.stage1_lr), ("stage2_lr", self.stage2_lr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        for (name, v) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.k == 0 || self.batch_size == 0 || self.accumulation_steps == 0 {
            return Err(Error::InvalidArgument(
                "k, batch_size and accumulation_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureMap,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub stage: u8,
    pub train_loss: f64,
    pub val_acc: Option<f64>,
}

impl EpochMetrics {
    /// `epoch<TAB>stage<TAB>train_loss<TAB>val_acc`; missing accuracy is `nan`.
    pub fn to_log_line(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.4}",
            self.epoch,
            self.stage,
            self.train_loss,
            self.val_acc.unwrap_or(f64::NAN)
        )
    }
}

#[derive(Debug, Clone)]
pub struct Stage1Outcome {
    pub model: ClassifierModel,
    pub curve: Vec<EpochMetrics>,
}

#[derive(Debug, Clone)]
pub struct Stage2Outcome {
    pub codebook: Codebook,
    pub model: ClassifierModel,
    pub curve: Vec<EpochMetrics>,
}

fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Video-level representation under the given pooling mode.
pub fn pool_features(f: &FeatureMap, pooling: Pooling, cb: Option<&Codebook>) -> Result<Vec<f64>> {
    match pooling {
        Pooling::Vlad => {
            let cb = cb.ok_or_else(|| {
                Error::InvalidArgument("vlad pooling requires a codebook".into())
            })?;
            Ok(actionvlad_descriptor(f, cb)?.into_vec())
        }
        Pooling::Avg => Ok(average_pool(f)),
        Pooling::Max => Ok(max_pool(f)),
    }
}

pub fn pool_all(samples: &[Sample], pooling: Pooling, cb: Option<&Codebook>) -> Result<Vec<Vec<f64>>> {
    par_map(samples, |s| pool_features(&s.features, pooling, cb))
        .into_iter()
        .collect()
}

/// Logits for every sample.
pub fn predict(
    samples: &[Sample],
    pooling: Pooling,
    cb: Option<&Codebook>,
    model: &ClassifierModel,
) -> Result<Vec<Vec<f64>>> {
    par_map(samples, |s| model.forward(&pool_features(&s.features, pooling, cb)?))
        .into_iter()
        .collect()
}

pub fn accuracy(logits: &[Vec<f64>], labels: impl IntoIterator<Item = usize>) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for (l, y) in logits.iter().zip(labels) {
        total += 1;
        if argmax(l) == y {
            correct += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

fn class_count(train: &[Sample], val: &[Sample]) -> Result<usize> {
    let max = train
        .iter()
        .map(|s| s.label)
        .max()
        .ok_or(Error::Empty("training set"))?;
    let classes = max + 1;
    if let Some(s) = val.iter().find(|s| s.label >= classes) {
        return Err(Error::InvalidArgument(format!(
            "validation label {} not present in training labels (0..{classes})",
            s.label
        )));
    }
    Ok(classes)
}

/// Mean cross-entropy and its gradients `[dW, db]` over fixed descriptors,
/// without dropout. This is the convex stage-1 objective.
pub fn stage1_objective(
    model: &ClassifierModel,
    descriptors: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Vec<Vec<f64>>)> {
    if descriptors.is_empty() {
        return Err(Error::Empty("descriptor set"));
    }
    let mut gw = vec![0.0; model.weights().len()];
    let mut gb = vec![0.0; model.classes()];
    let mut loss = 0.0;
    for (v, &y) in descriptors.iter().zip(labels) {
        let (l, gl) = softmax_cross_entropy(&model.forward(v)?, y)?;
        loss += l;
        model.backward_into(v, &gl, &mut gw, &mut gb);
    }
    let inv = 1.0 / descriptors.len() as f64;
    gw.iter_mut().chain(gb.iter_mut()).for_each(|g| *g *= inv);
    Ok((loss * inv, vec![gw, gb]))
}

/// Loss and gradients `[dW, db]` for one micro-batch of fixed descriptors.
fn descriptor_batch_grads(
    model: &ClassifierModel,
    batch: &[(Vec<f64>, usize)],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut gw = vec![0.0; model.weights().len()];
    let mut gb = vec![0.0; model.classes()];
    let mut loss = 0.0;
    for (v, y) in batch {
        let (l, gl) = softmax_cross_entropy(&model.forward(v)?, *y)?;
        loss += l;
        model.backward_into(v, &gl, &mut gw, &mut gb);
    }
    let inv = 1.0 / batch.len() as f64;
    gw.iter_mut().chain(gb.iter_mut()).for_each(|g| *g *= inv);
    Ok((loss, vec![gw, gb]))
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Trains the linear classifier on descriptors pooled with a frozen
/// codebook (or a baseline pooling). Micro-batch gradients are averaged
/// over `accumulation_steps`, then clipped, then applied with Adam.
pub fn train_stage1(
    train: &[Sample],
    val: &[Sample],
    cb: Option<&Codebook>,
    cfg: &TrainConfig,
) -> Result<Stage1Outcome> {
    cfg.validate()?;
    let classes = class_count(train, val)?;
    let descriptors = pool_all(train, cfg.pooling, cb)?;
    let val_descriptors = pool_all(val, cfg.pooling, cb)?;
    let input_dim = descriptors[0].len();

    let mut model = ClassifierModel::zeros(classes, input_dim, cfg.dropout)?;
    let mut adam = AdamState::new(&[classes * input_dim, classes]);
    let adam_cfg = cfg.adam(cfg.stage1_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut curve = Vec::with_capacity(cfg.stage1_epochs);
    let step_size = cfg.batch_size * cfg.accumulation_steps;

    for epoch in 1..=cfg.stage1_epochs {
        let order = shuffled(train.len(), &mut rng);
        let mut epoch_loss = 0.0;
        for group in order.chunks(step_size) {
            let mut micro = Vec::with_capacity(cfg.accumulation_steps);
            for mb in group.chunks(cfg.batch_size) {
                let mut batch = Vec::with_capacity(mb.len());
                for &i in mb {
                    let mask = dropout_mask(input_dim, cfg.dropout, &mut rng)?;
                    let v: Vec<f64> = descriptors[i].iter().zip(&mask).map(|(x, m)| x * m).collect();
                    batch.push((v, train[i].label));
                }
                let (loss, grads) = descriptor_batch_grads(&model, &batch)?;
                epoch_loss += loss;
                micro.push(grads);
            }
            let mut grads = accumulate_gradients(&micro)?;
            clip_gradients(&mut grads, cfg.clip_norm)?;
            let (w, b) = model.params_mut();
            adam_step(&mut [w, b], &grads, &mut adam, &adam_cfg)?;
        }
        let val_acc = if val.is_empty() {
            None
        } else {
            let logits: Result<Vec<_>> = val_descriptors.iter().map(|v| model.forward(v)).collect();
            Some(accuracy(&logits?, val.iter().map(|s| s.label)))
        };
        curve.push(EpochMetrics {
            epoch,
            stage: 1,
            train_loss: epoch_loss / train.len() as f64,
            val_acc,
        });
    }
    Ok(Stage1Outcome { model, curve })
}

/// Loss and gradients `[dW, db, d residual anchors, d assign anchors]` for
/// a single video through the full pipeline. `mask` holds inverted-dropout
/// multipliers applied to the descriptor (`None` for no dropout).
pub fn sample_gradients(
    f: &FeatureMap,
    label: usize,
    cb: &Codebook,
    model: &ClassifierModel,
    mask: Option<&[f64]>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let pass = VladPass::run(f, cb)?;
    let v = pass.descriptor().values();
    let dropped: Vec<f64> = match mask {
        Some(m) => v.iter().zip(m).map(|(x, m)| x * m).collect(),
        None => v.to_vec(),
    };
    let (loss, gl) = softmax_cross_entropy(&model.forward(&dropped)?, label)?;
    let mut gw = vec![0.0; model.weights().len()];
    let mut gb = vec![0.0; model.classes()];
    let mut gv = model.backward_into(&dropped, &gl, &mut gw, &mut gb);
    if let Some(m) = mask {
        gv.iter_mut().zip(m).for_each(|(g, m)| *g *= m);
    }
    let vg = pass.backward(f, cb, &gv)?;
    Ok((loss, vec![gw, gb, vg.residual_anchors, vg.assign_anchors]))
}

/// Jointly finetunes the classifier and both anchor sets, starting from a
/// stage-1 model. Returns the updated codebook and classifier.
pub fn train_stage2(
    train: &[Sample],
    val: &[Sample],
    cb: &Codebook,
    model: &ClassifierModel,
    cfg: &TrainConfig,
) -> Result<Stage2Outcome> {
    cfg.validate()?;
    let classes = class_count(train, val)?;
    if model.classes() != classes {
        return Err(Error::mismatch("stage-2 class count", model.classes(), classes));
    }
    if model.input_dim() != cb.k() * cb.dim() {
        return Err(Error::mismatch("classifier input vs codebook", cb.k() * cb.dim(), model.input_dim()));
    }
    let mut cb = cb.clone();
    let mut model = model.clone();
    let input_dim = model.input_dim();
    let anchor_len = cb.k() * cb.dim();
    let shapes: Vec<usize> = if cfg.tie_anchors {
        vec![model.weights().len(), classes, anchor_len]
    } else {
        vec![model.weights().len(), classes, anchor_len, anchor_len]
    };
    let mut adam = AdamState::new(&shapes);
    let adam_cfg = cfg.adam(cfg.stage2_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5741_4745_0002);
    let mut curve = Vec::with_capacity(cfg.stage2_epochs);
    let step_size = cfg.batch_size * cfg.accumulation_steps;

    for epoch in 1..=cfg.stage2_epochs {
        let order = shuffled(train.len(), &mut rng);
        let mut epoch_loss = 0.0;
        for group in order.chunks(step_size) {
            let mut micro = Vec::with_capacity(cfg.accumulation_steps);
            for mb in group.chunks(cfg.batch_size) {
                // Masks are drawn sequentially so parallel evaluation stays deterministic.
                let jobs: Vec<(usize, Vec<f64>)> = mb
                    .iter()
                    .map(|&i| Ok((i, dropout_mask(input_dim, cfg.dropout, &mut rng)?)))
                    .collect::<Result<_>>()?;
                let results = par_map(&jobs, |(i, mask)| {
                    sample_gradients(&train[*i].features, train[*i].label, &cb, &model, Some(mask))
                });
                let mut sum: Option<Vec<Vec<f64>>> = None;
                for r in results {
                    let (loss, grads) = r?;
                    epoch_loss += loss;
                    match sum.as_mut() {
                        None => sum = Some(grads),
                        Some(acc) => {
                            for (a, g) in acc.iter_mut().zip(&grads) {
                                a.iter_mut().zip(g).for_each(|(x, y)| *x += y);
                            }
                        }
                    }
                }
                let mut grads = sum.expect("micro-batch is nonempty");
                let inv = 1.0 / mb.len() as f64;
                grads.iter_mut().for_each(|g| g.iter_mut().for_each(|x| *x *= inv));
                if cfg.tie_anchors {
                    let ga = grads.pop().expect("assign gradient");
                    grads[2].iter_mut().zip(&ga).for_each(|(c, a)| *c += a);
                }
                micro.push(grads);
            }
            let mut grads = accumulate_gradients(&micro)?;
            clip_gradients(&mut grads, cfg.clip_norm)?;
            let (w, b) = model.params_mut();
            let (residual, assign) = cb.anchors_mut();
            if cfg.tie_anchors {
                adam_step(&mut [w, b, &mut *residual], &grads, &mut adam, &adam_cfg)?;
                assign.copy_from_slice(residual);
            } else {
                adam_step(&mut [w, b, residual, assign], &grads, &mut adam, &adam_cfg)?;
            }
        }
        let val_acc = if val.is_empty() {
            None
        } else {
            Some(accuracy(
                &predict(val, Pooling::Vlad, Some(&cb), &model)?,
                val.iter().map(|s| s.label),
            ))
        };
        curve.push(EpochMetrics {
            epoch,
            stage: 2,
            train_loss: epoch_loss / train.len() as f64,
            val_acc,
        });
    }
    Ok(Stage2Outcome {
        codebook: cb,
        model,
        curve,
    })
}
