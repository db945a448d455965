//! Evaluation reports and model analysis: confusion matrices, average
//! precision, per-word logit contributions and assignment-map export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aggregation::argmax;
use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub split: String,
    pub num_classes: usize,
    pub total: usize,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub mean_ap: f64,
    pub weighted_ap: f64,
    pub timings: Vec<(String, f64)>,
}

impl ExperimentReport {
    /// Builds a report from per-video class scores (higher is better).
    pub fn from_scores(split: &str, scores: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::mismatch("score rows vs labels", labels.len(), scores.len()));
        }
        let mut confusion = vec![vec![0u64; num_classes]; num_classes];
        for (s, &y) in scores.iter().zip(labels) {
            if s.len() != num_classes {
                return Err(Error::mismatch("scores per video", num_classes, s.len()));
            }
            if y >= num_classes {
                return Err(Error::InvalidArgument(format!("label {y} out of range")));
            }
            confusion[y][argmax(s)] += 1;
        }
        let total = labels.len();
        let correct: u64 = (0..num_classes).map(|c| confusion[c][c]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: u64 = row.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    row[c] as f64 / n as f64
                }
            })
            .collect();

        let mut ap_sum = 0.0;
        let mut ap_classes = 0usize;
        let mut weighted = 0.0;
        for c in 0..num_classes {
            let relevant: Vec<bool> = labels.iter().map(|&y| y == c).collect();
            let column: Vec<f64> = scores.iter().map(|s| s[c]).collect();
            if let Some(ap) = average_precision(&column, &relevant) {
                let positives = relevant.iter().filter(|&&r| r).count();
                ap_sum += ap;
                ap_classes += 1;
                weighted += ap * positives as f64;
            }
        }
        Ok(Self {
            split: split.to_string(),
            num_classes,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            per_class_accuracy,
            confusion,
            mean_ap: if ap_classes == 0 { 0.0 } else { ap_sum / ap_classes as f64 },
            weighted_ap: if total == 0 { 0.0 } else { weighted / total as f64 },
            timings: Vec::new(),
        })
    }

    /// Line-oriented text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "split\t{}", self.split);
        let _ = writeln!(out, "videos\t{}", self.total);
        let _ = writeln!(out, "accuracy\t{:.6}", self.accuracy);
        let _ = writeln!(out, "mAP\t{:.6}", self.mean_ap);
        let _ = writeln!(out, "wAP\t{:.6}", self.weighted_ap);
        for (c, acc) in self.per_class_accuracy.iter().enumerate() {
            let _ = writeln!(out, "class_accuracy\t{c}\t{acc:.6}");
        }
        for (c, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "confusion\t{c}\t{}", cells.join(","));
        }
        for (name, secs) in &self.timings {
            let _ = writeln!(out, "time\t{name}\t{secs:.3}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Corrupt(format!("report: {e}")))
    }
}

/// Non-interpolated average precision: the mean of precision@k over the
/// ranks `k` of relevant items when sorted by descending score (ties keep
/// input order). `None` when there are no relevant items.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let positives = relevant.iter().filter(|&&r| r).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / positives as f64)
}

fn row_normalize(m: &[Vec<u64>]) -> Vec<Vec<f64>> {
    m.iter()
        .map(|row| {
            let n: u64 = row.iter().sum();
            row.iter()
                .map(|&v| if n == 0 { 0.0 } else { v as f64 / n as f64 })
                .collect()
        })
        .collect()
}

/// Row-normalized `a − b`. Rows present in both matrices sum to zero.
pub fn confusion_diff(a: &[Vec<u64>], b: &[Vec<u64>]) -> Result<Vec<Vec<f64>>> {
    if a.len() != b.len() {
        return Err(Error::mismatch("confusion matrix rows", a.len(), b.len()));
    }
    for (ra, rb) in a.iter().zip(b) {
        if ra.len() != a.len() || rb.len() != a.len() {
            return Err(Error::mismatch("confusion matrix columns", a.len(), ra.len().max(rb.len())));
        }
    }
    let (na, nb) = (row_normalize(a), row_normalize(b));
    Ok(na
        .iter()
        .zip(&nb)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect())
}

pub fn format_matrix(m: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordContribution {
    pub word: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordContributions {
    pub class: usize,
    pub logit: f64,
    pub bias: f64,
    /// Sorted by descending score, lowest word index first on ties.
    pub ranked: Vec<WordContribution>,
}

/// Splits a class logit into per-cell terms `⟨W_class[block k], v[block k]⟩`.
/// The terms plus the class bias reproduce the logit.
pub fn word_contributions(
    descriptor: &[f64],
    k: usize,
    model: &ClassifierModel,
    class: usize,
) -> Result<WordContributions> {
    if class >= model.classes() {
        return Err(Error::InvalidArgument(format!(
            "class {class} out of range for {} classes",
            model.classes()
        )));
    }
    if descriptor.len() != model.input_dim() {
        return Err(Error::mismatch("descriptor vs classifier", model.input_dim(), descriptor.len()));
    }
    if k == 0 || !descriptor.len().is_multiple_of(k) {
        return Err(Error::InvalidArgument(format!(
            "descriptor length {} is not a multiple of k={k}",
            descriptor.len()
        )));
    }
    let dim = descriptor.len() / k;
    let row = model.weight_row(class);
    let mut ranked: Vec<WordContribution> = (0..k)
        .map(|word| {
            let range = word * dim..(word + 1) * dim;
            let score = row[range.clone()]
                .iter()
                .zip(&descriptor[range])
                .map(|(w, v)| w * v)
                .sum();
            WordContribution { word, score }
        })
        .collect();
    let logit = model.forward(descriptor)?[class];
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.word.cmp(&b.word)));
    Ok(WordContributions {
        class,
        logit,
        bias: model.bias()[class],
        ranked,
    })
}

pub const ASSIGNMENT_MAGIC: [u8; 4] = *b"AVA1";

/// Text rendering of a `frames × locations` assignment map: one header line
/// `# <id> <T> <N>` then one line of space-separated cell indices per frame.
pub fn format_assignment_map(id: &str, frames: usize, locations: usize, map: &[usize]) -> String {
    let mut out = format!("# {id} {frames} {locations}\n");
    for row in map.chunks(locations.max(1)).take(frames) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Binary rendering: magic `AVA1`, `T` and `N` as `u32`, then `T·N` `u32`
/// cell indices, all little-endian.
pub fn encode_assignment_map(frames: usize, locations: usize, map: &[usize]) -> Result<Vec<u8>> {
    if map.len() != frames * locations {
        return Err(Error::mismatch("assignment map length", frames * locations, map.len()));
    }
    let mut out = ASSIGNMENT_MAGIC.to_vec();
    for v in [frames, locations].into_iter().chain(map.iter().copied()) {
        let v = u32::try_from(v).map_err(|_| Error::DimensionOverflow(format!("{v}")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_and_accuracy() {
        let scores = vec![
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            vec![0.6, 0.4],
            vec![0.3, 0.7],
        ];
        let labels = [0, 1, 1, 1];
        let r = ExperimentReport::from_scores("val", &scores, &labels, 2).unwrap();
        assert_eq!(r.confusion, vec![vec![1, 0], vec![1, 2]]);
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.per_class_accuracy, vec![1.0, 2.0 / 3.0]);
        let back = ExperimentReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().contains("accuracy\t0.750000"));
    }

    #[test]
    fn average_precision_by_hand() {
        // Ranking: a(rel) b(no) c(rel): AP = (1/1 + 2/3) / 2.
        let ap = average_precision(&[0.9, 0.5, 0.4], &[true, false, true]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&[0.1], &[false]), None);
        assert_eq!(average_precision(&[0.3, 0.2], &[true, true]), Some(1.0));
    }

    #[test]
    fn confusion_diff_identities() {
        let a = vec![vec![3, 1], vec![0, 4]];
        let b = vec![vec![2, 2], vec![1, 3]];
        let same = confusion_diff(&a, &a).unwrap();
        assert!(same.iter().flatten().all(|&v| v == 0.0));
        let d = confusion_diff(&a, &b).unwrap();
        for row in &d {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
        assert_eq!(d[0], vec![0.25, -0.25]);
        assert!(confusion_diff(&a, &[vec![1]]).is_err());
    }

    #[test]
    fn word_contribution_examples() {
        let zero = ClassifierModel::zeros(2, 6, 0.0).unwrap();
        let v = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let wc = word_contributions(&v, 3, &zero, 1).unwrap();
        assert!(wc.ranked.iter().all(|w| w.score == 0.0));
        assert_eq!(wc.ranked.iter().map(|w| w.word).collect::<Vec<_>>(), vec![0, 1, 2]);

        let mut w = vec![0.0; 12];
        w[6 + 4] = 1.0;
        w[6 + 5] = 1.0;
        let m = ClassifierModel::from_parts(2, 6, w, vec![0.0, 0.25], 0.0).unwrap();
        let wc = word_contributions(&v, 3, &m, 1).unwrap();
        assert_eq!(wc.ranked[0].word, 2);
        let total: f64 = wc.ranked.iter().map(|w| w.score).sum::<f64>() + wc.bias;
        assert!((total - wc.logit).abs() < 1e-12);
        assert!(word_contributions(&v, 3, &m, 2).is_err());
        assert!(word_contributions(&v, 4, &m, 0).is_err());
    }

    #[test]
    fn assignment_map_formats() {
        let text = format_assignment_map("v", 2, 3, &[0, 1, 2, 2, 1, 0]);
        assert_eq!(text, "# v 2 3\n0 1 2\n2 1 0\n");
        let bin = encode_assignment_map(1, 2, &[3, 4]).unwrap();
        assert_eq!(&bin[..4], b"AVA1");
        assert_eq!(bin.len(), 4 + 4 * 4);
        assert!(encode_assignment_map(1, 2, &[3]).is_err());
    }
}
