//! Combining two feature streams, multiple crops, or per-class score vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureMap;

/// How per-class scores should be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// Softmax output: entries in `[0, 1]` summing to one.
    Probability,
    /// Logits, SVM margins or any other unnormalized scores.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    kind: ScoreKind,
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(kind: ScoreKind, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("score vector"));
        }
        if kind == ScoreKind::Probability {
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidArgument(
                    "probability scores must lie in [0, 1]".into(),
                ));
            }
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "probability scores must sum to 1, got {sum}"
                )));
            }
        }
        Ok(Self { kind, values })
    }

    pub fn raw(values: Vec<f64>) -> Result<Self> {
        Self::new(ScoreKind::Raw, values)
    }

    pub fn probabilities(values: Vec<f64>) -> Result<Self> {
        Self::new(ScoreKind::Probability, values)
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Highest-scoring class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        crate::aggregation::argmax(&self.values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Channel-wise concatenation of spatially corresponding descriptors.
pub fn concat_fuse(a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    if b.dim() == 0 && b.is_empty() {
        return Ok(a.clone());
    }
    if a.frames() != b.frames() {
        return Err(Error::mismatch("concat fusion frame count", a.frames(), b.frames()));
    }
    if a.locations() != b.locations() {
        return Err(Error::mismatch(
            "concat fusion location count",
            a.locations(),
            b.locations(),
        ));
    }
    let dim = a.dim() + b.dim();
    let mut data = Vec::with_capacity(a.len() * dim);
    for (xa, xb) in a.descriptors().zip(b.descriptors()) {
        data.extend_from_slice(xa);
        data.extend_from_slice(xb);
    }
    FeatureMap::new(a.frames(), a.locations(), dim, data)
}

/// Union of two descriptor sets sharing a descriptor dimensionality.
pub fn early_fuse(a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    multicrop_pool(&[a.clone(), b.clone()])
}

/// Union of the descriptor sets of several crops. Crops with equal location
/// counts are stacked along the frame axis; otherwise every descriptor goes
/// into a single pseudo-frame.
pub fn multicrop_pool(crops: &[FeatureMap]) -> Result<FeatureMap> {
    let first = crops.first().ok_or(Error::Empty("crop list"))?;
    let dim = first.dim();
    for c in crops {
        if c.dim() != dim {
            return Err(Error::mismatch("fused descriptor dim", dim, c.dim()));
        }
    }
    let parts: Vec<&FeatureMap> = crops.iter().filter(|c| !c.is_empty()).collect();
    let Some(lead) = parts.first() else {
        return Ok(first.clone());
    };
    if parts.len() == 1 {
        return Ok((*lead).clone());
    }
    let total: usize = parts.iter().map(|c| c.len()).sum();
    let mut data = Vec::with_capacity(total * dim);
    for c in &parts {
        data.extend_from_slice(c.data());
    }
    let n = lead.locations();
    if parts.iter().all(|c| c.locations() == n) {
        let frames = parts.iter().map(|c| c.frames()).sum();
        FeatureMap::new(frames, n, dim, data)
    } else {
        FeatureMap::new(1, total, dim, data)
    }
}

fn check_weight(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidArgument(format!(
            "fusion weight must lie in [0, 1], got {w}"
        )));
    }
    Ok(())
}

/// `w · a + (1 − w) · b`.
pub fn late_fuse(a: &ScoreVector, b: &ScoreVector, w: f64) -> Result<ScoreVector> {
    check_weight(w)?;
    if a.len() != b.len() {
        return Err(Error::mismatch("late fusion class count", a.len(), b.len()));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| w * x + (1.0 - w) * y)
        .collect();
    let kind = if a.kind == ScoreKind::Probability && b.kind == ScoreKind::Probability {
        ScoreKind::Probability
    } else {
        ScoreKind::Raw
    };
    // Convex combinations of distributions stay distributions up to rounding.
    Ok(ScoreVector { kind, values })
}

/// Rescales scores to `[0, 1]`; constant vectors map to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / range).collect()
}

/// Fuses model scores with externally computed scores (e.g. SVM margins
/// from a hand-crafted pipeline). Both are min-max normalized per video
/// before the weighted average `w · model + (1 − w) · external`.
pub fn score_fuse_external(model: &ScoreVector, external: &ScoreVector, w: f64) -> Result<ScoreVector> {
    check_weight(w)?;
    if model.len() != external.len() {
        return Err(Error::mismatch("external score class count", model.len(), external.len()));
    }
    let a = min_max_normalize(&model.values);
    let b = min_max_normalize(&external.values);
    let values = a.iter().zip(&b).map(|(x, y)| w * x + (1.0 - w) * y).collect();
    Ok(ScoreVector {
        kind: ScoreKind::Raw,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(t: usize, n: usize, d: usize, seed: f64) -> FeatureMap {
        let data = (0..t * n * d).map(|i| ((i as f64 + seed) * 0.731).sin()).collect();
        FeatureMap::new(t, n, d, data).unwrap()
    }

    #[test]
    fn concat_interleaves_per_location() {
        let a = FeatureMap::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = FeatureMap::new(1, 2, 3, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0]).unwrap();
        let c = concat_fuse(&a, &b).unwrap();
        assert_eq!(c.dim(), 5);
        assert_eq!(c.data(), &[1.0, 2.0, 5.0, 6.0, 7.0, 3.0, 4.0, 8.0, 9.0, 10.0]);
    }

    #[test]
    fn concat_with_zero_dim_is_identity() {
        let a = fm(2, 3, 4, 0.0);
        let b = FeatureMap::new(2, 3, 0, vec![]).unwrap();
        assert_eq!(concat_fuse(&a, &b).unwrap(), a);
        assert_eq!(concat_fuse(&a, &FeatureMap::empty(0)).unwrap(), a);
    }

    #[test]
    fn concat_rejects_mismatched_layout() {
        assert!(concat_fuse(&fm(2, 3, 2, 0.0), &fm(3, 3, 2, 0.0)).is_err());
        assert!(concat_fuse(&fm(2, 3, 2, 0.0), &fm(2, 4, 2, 0.0)).is_err());
    }

    #[test]
    fn early_fusion_union() {
        let a = fm(2, 3, 4, 0.0);
        let b = fm(2, 3, 4, 1.0);
        let u = early_fuse(&a, &b).unwrap();
        assert_eq!(u.len(), 12);
        assert_eq!((u.frames(), u.locations()), (4, 3));
        assert_eq!(early_fuse(&a, &FeatureMap::empty(4)).unwrap(), a);
        assert!(early_fuse(&a, &fm(1, 1, 3, 0.0)).is_err());
    }

    #[test]
    fn early_fusion_mismatched_locations_flattens() {
        let a = fm(2, 3, 4, 0.0);
        let b = fm(1, 5, 4, 1.0);
        let u = early_fuse(&a, &b).unwrap();
        assert_eq!((u.frames(), u.locations()), (1, 11));
    }

    #[test]
    fn multicrop_counts() {
        let crops: Vec<FeatureMap> = (0..5).map(|i| fm(25, 4, 2, i as f64)).collect();
        let pooled = multicrop_pool(&crops).unwrap();
        assert_eq!(pooled.frames(), 125);
        assert_eq!(pooled.len(), 125 * 4);
        assert_eq!(multicrop_pool(&crops[..1]).unwrap(), crops[0]);
        assert!(multicrop_pool(&[]).is_err());
    }

    #[test]
    fn late_fuse_examples() {
        let a = ScoreVector::probabilities(vec![1.0, 0.0]).unwrap();
        let b = ScoreVector::probabilities(vec![0.0, 1.0]).unwrap();
        assert_eq!(late_fuse(&a, &b, 1.0).unwrap(), a);
        assert_eq!(late_fuse(&a, &b, 0.5).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(late_fuse(&a, &b, 0.5).unwrap(), late_fuse(&b, &a, 0.5).unwrap());
        assert!(late_fuse(&a, &b, 1.5).is_err());
        assert!(late_fuse(&a, &b, -0.1).is_err());
        let c = ScoreVector::raw(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(late_fuse(&a, &c, 0.5).is_err());
    }

    #[test]
    fn score_vector_validation() {
        assert!(ScoreVector::probabilities(vec![0.5, 0.6]).is_err());
        assert!(ScoreVector::probabilities(vec![-0.5, 1.5]).is_err());
        assert!(ScoreVector::raw(vec![f64::NAN]).is_err());
    }

    #[test]
    fn external_fusion_examples() {
        let model = ScoreVector::raw(vec![0.1, 2.0, -1.0]).unwrap();
        let flat = ScoreVector::raw(vec![3.0, 3.0, 3.0]).unwrap();
        let fused = score_fuse_external(&model, &flat, 0.3).unwrap();
        assert_eq!(fused.argmax(), model.argmax());
        let ext = ScoreVector::raw(vec![5.0, -5.0, 0.0]).unwrap();
        assert_eq!(score_fuse_external(&model, &ext, 0.0).unwrap().values(), &[1.0, 0.0, 0.5]);
    }
}
