//! Synthetic videos composed of shared sub-actions.
//!
//! Every class is a multiset of sub-action prototypes drawn from one shared
//! vocabulary. Each frame of a video shows one sub-action of its class
//! (chosen uniformly from the multiset) and every location in that frame is
//! the prototype plus isotropic Gaussian noise.
//!
//! The default [`Composition::Confounded`] vocabulary is built so that
//! global pooling cannot tell classes apart. Prototypes are
//! `offset + s ⊙ magnitude` for sign patterns `s` that are constant over
//! blocks of dimensions. A class picks sign patterns whose negative blocks
//! partition the block set, so each dimension is negative in exactly one of
//! the class's sub-actions. All classes then share the same expected mean
//! and the same elementwise maximum, while their sub-action sets differ.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::io::{write_feature_file, write_manifest, Split};
use crate::training::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Composition {
    /// Block sign patterns with matched class means and maxima.
    Confounded { blocks: usize },
    /// Gaussian prototypes, random class multisets.
    Random,
    /// Class `c` uses only sub-action `c`.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub num_subactions: usize,
    pub subactions_per_class: usize,
    pub frames: usize,
    pub locations: usize,
    pub dim: usize,
    pub noise: f64,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    /// Number of paired feature streams (1 or 2).
    pub streams: usize,
    pub composition: Composition,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            num_subactions: 12,
            subactions_per_class: 3,
            frames: 25,
            locations: 9,
            dim: 32,
            noise: 0.3,
            train_per_class: 40,
            val_per_class: 10,
            test_per_class: 0,
            streams: 1,
            composition: Composition::Confounded { blocks: 4 },
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument("need at least 2 classes".into()));
        }
        if self.num_subactions < 2 {
            return Err(Error::InvalidArgument("need at least 2 sub-actions".into()));
        }
        if self.subactions_per_class == 0 || self.frames == 0 || self.locations == 0 || self.dim == 0 {
            return Err(Error::InvalidArgument(
                "sub-actions per class, frames, locations and dim must be positive".into(),
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise must be >= 0, got {}", self.noise)));
        }
        if !(1..=2).contains(&self.streams) {
            return Err(Error::InvalidArgument("streams must be 1 or 2".into()));
        }
        if self.train_per_class == 0 {
            return Err(Error::InvalidArgument("train_per_class must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub id: String,
    pub label: usize,
    pub split: Split,
    /// Sub-action (vocabulary index) shown in each frame.
    pub frame_subactions: Vec<usize>,
    /// One feature map per stream.
    pub streams: Vec<FeatureMap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub config: SynthConfig,
    /// Per stream, `S` prototypes of length `dim`.
    pub vocabulary: Vec<Vec<Vec<f64>>>,
    /// Per class, the multiset of sub-action indices (sorted).
    pub class_subactions: Vec<Vec<usize>>,
    pub videos: Vec<SynthVideo>,
}

impl SynthDataset {
    pub fn videos(&self, split: Split) -> impl Iterator<Item = &SynthVideo> + '_ {
        self.videos.iter().filter(move |v| v.split == split)
    }

    pub fn samples(&self, split: Split, stream: usize) -> Vec<Sample> {
        self.videos(split)
            .map(|v| Sample {
                features: v.streams[stream].clone(),
                label: v.label,
            })
            .collect()
    }
}

/// All multisets of `parts` block subsets (bitmasks) that partition `blocks`.
fn partition_multisets(blocks: usize, parts: usize) -> Vec<Vec<u32>> {
    let mut found = BTreeSet::new();
    let total = parts.pow(blocks as u32);
    for code in 0..total {
        let mut masks = vec![0u32; parts];
        let mut c = code;
        for b in 0..blocks {
            masks[c % parts] |= 1 << b;
            c /= parts;
        }
        masks.sort_unstable();
        found.insert(masks);
    }
    found.into_iter().collect()
}

/// Depth-first search for `want` candidates whose combined vocabulary has
/// at most `limit` distinct masks.
fn pick_classes(candidates: &[Vec<u32>], want: usize, limit: usize) -> Option<Vec<usize>> {
    fn go(
        candidates: &[Vec<u32>],
        start: usize,
        want: usize,
        limit: usize,
        chosen: &mut Vec<usize>,
        vocab: &mut Vec<u32>,
        budget: &mut usize,
    ) -> bool {
        if chosen.len() == want {
            return true;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        for i in start..candidates.len() {
            if candidates.len() - i < want - chosen.len() {
                break;
            }
            let before = vocab.len();
            for &m in &candidates[i] {
                if !vocab.contains(&m) {
                    vocab.push(m);
                }
            }
            if vocab.len() <= limit {
                chosen.push(i);
                if go(candidates, i + 1, want, limit, chosen, vocab, budget) {
                    return true;
                }
                chosen.pop();
            }
            vocab.truncate(before);
        }
        false
    }
    let mut chosen = Vec::new();
    let mut vocab = Vec::new();
    let mut budget = 1_000_000;
    go(candidates, 0, want, limit, &mut chosen, &mut vocab, &mut budget).then_some(chosen)
}

struct Structure {
    class_subactions: Vec<Vec<usize>>,
    /// Confounded mode: sign masks for each vocabulary entry.
    masks: Option<Vec<u32>>,
    vocab_size: usize,
}

fn build_structure(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Structure> {
    let c = cfg.num_classes;
    let m = cfg.subactions_per_class;
    match cfg.composition {
        Composition::Confounded { blocks } => {
            if blocks < 2 || blocks > cfg.dim || blocks > 8 {
                return Err(Error::InvalidArgument(format!(
                    "confounded composition needs 2 <= blocks <= min(dim, 8), got {blocks}"
                )));
            }
            if m < 2 {
                return Err(Error::InvalidArgument(
                    "confounded composition needs at least 2 sub-actions per class".into(),
                ));
            }
            let mut candidates = partition_multisets(blocks, m);
            candidates.shuffle(rng);
            let picked = pick_classes(&candidates, c, cfg.num_subactions).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "cannot form {c} confounded classes from at most {} sub-actions \
                     with {blocks} blocks and {m} sub-actions per class",
                    cfg.num_subactions
                ))
            })?;
            let vocab: BTreeSet<u32> = picked
                .iter()
                .flat_map(|&i| candidates[i].iter().copied())
                .collect();
            let vocab: Vec<u32> = vocab.into_iter().collect();
            let class_subactions = picked
                .iter()
                .map(|&i| {
                    let mut idx: Vec<usize> = candidates[i]
                        .iter()
                        .map(|mask| vocab.binary_search(mask).expect("mask in vocabulary"))
                        .collect();
                    idx.sort_unstable();
                    idx
                })
                .collect();
            Ok(Structure {
                class_subactions,
                vocab_size: vocab.len(),
                masks: Some(vocab),
            })
        }
        Composition::Random => {
            let s = cfg.num_subactions;
            let mut seen = BTreeSet::new();
            let mut class_subactions = Vec::with_capacity(c);
            let mut attempts = 0;
            while class_subactions.len() < c {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::InvalidArgument(
                        "cannot draw distinct class multisets; increase sub-actions".into(),
                    ));
                }
                let mut ms: Vec<usize> = (0..m).map(|_| rng.random_range(0..s)).collect();
                ms.sort_unstable();
                if seen.insert(ms.clone()) {
                    class_subactions.push(ms);
                }
            }
            Ok(Structure {
                class_subactions,
                masks: None,
                vocab_size: s,
            })
        }
        Composition::Disjoint => {
            if cfg.num_subactions < c {
                return Err(Error::InvalidArgument(
                    "disjoint composition needs at least one sub-action per class".into(),
                ));
            }
            Ok(Structure {
                class_subactions: (0..c).map(|k| vec![k]).collect(),
                masks: None,
                vocab_size: cfg.num_subactions,
            })
        }
    }
}

fn shares_subaction(classes: &[Vec<usize>]) -> bool {
    classes.iter().enumerate().any(|(i, a)| {
        classes[i + 1..]
            .iter()
            .any(|b| a.iter().any(|x| b.contains(x)))
    })
}

fn build_vocabulary(cfg: &SynthConfig, st: &Structure, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = cfg.dim;
    match (&st.masks, cfg.composition) {
        (Some(masks), Composition::Confounded { blocks }) => {
            let offset: Vec<f64> = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    0.5 * z
                })
                .collect();
            let magnitude: Vec<f64> = (0..d).map(|_| rng.random_range(0.75..1.25)).collect();
            masks
                .iter()
                .map(|&mask| {
                    (0..d)
                        .map(|j| {
                            let block = j * blocks / d;
                            let sign = if mask & (1 << block) != 0 { -1.0 } else { 1.0 };
                            offset[j] + sign * magnitude[j]
                        })
                        .collect()
                })
                .collect()
        }
        _ => (0..st.vocab_size)
            .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
            .collect(),
    }
}

/// Generates the dataset. Deterministic for a fixed config (including seed).
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let mut structure_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let st = build_structure(cfg, &mut structure_rng)?;
    if cfg.composition != Composition::Disjoint && !shares_subaction(&st.class_subactions) {
        return Err(Error::InvalidArgument(
            "generated classes share no sub-action; increase classes or sub-actions per class".into(),
        ));
    }
    let vocabulary: Vec<Vec<Vec<f64>>> = (0..cfg.streams)
        .map(|_| build_vocabulary(cfg, &st, &mut structure_rng))
        .collect();
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let mut videos = Vec::new();
    let splits = [
        (Split::Train, cfg.train_per_class),
        (Split::Val, cfg.val_per_class),
        (Split::Test, cfg.test_per_class),
    ];
    for (split, per_class) in splits {
        for label in 0..cfg.num_classes {
            let multiset = &st.class_subactions[label];
            for idx in 0..per_class {
                let frame_subactions: Vec<usize> = (0..cfg.frames)
                    .map(|_| multiset[rng.random_range(0..multiset.len())])
                    .collect();
                let streams = vocabulary
                    .iter()
                    .map(|vocab| {
                        let mut data = Vec::with_capacity(cfg.frames * cfg.locations * cfg.dim);
                        for &s in &frame_subactions {
                            for _ in 0..cfg.locations {
                                for &p in &vocab[s] {
                                    data.push(p + noise.sample(&mut rng));
                                }
                            }
                        }
                        FeatureMap::new(cfg.frames, cfg.locations, cfg.dim, data)
                    })
                    .collect::<Result<Vec<_>>>()?;
                videos.push(SynthVideo {
                    id: format!("c{label:02}_{split}_{idx:03}"),
                    label,
                    split,
                    frame_subactions,
                    streams,
                });
            }
        }
    }
    Ok(SynthDataset {
        config: cfg.clone(),
        vocabulary,
        class_subactions: st.class_subactions,
        videos,
    })
}

/// Writes every video as `AVF1` files under `dir/features/` plus a manifest
/// at `dir/manifest.tsv`; returns the manifest path. A second stream, when
/// present, goes to `<id>.s1.avf` and the manifest's fourth column.
pub fn write_synth_dataset(ds: &SynthDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let feat_dir = dir.join("features");
    std::fs::create_dir_all(&feat_dir).map_err(|e| Error::io(&feat_dir, e))?;
    let mut rows = Vec::with_capacity(ds.videos.len());
    for v in &ds.videos {
        let first = format!("features/{}.avf", v.id);
        write_feature_file(&v.streams[0], dir.join(&first))?;
        let second = match v.streams.get(1) {
            Some(s) => {
                let p = format!("features/{}.s1.avf", v.id);
                write_feature_file(s, dir.join(&p))?;
                Some(p)
            }
            None => None,
        };
        rows.push((first, v.label, v.split, second));
    }
    let manifest = dir.join("manifest.tsv");
    write_manifest(
        &manifest,
        rows.iter()
            .map(|(a, l, s, b)| (a.as_str(), *l, *s, b.as_deref())),
    )?;
    Ok(manifest)
}
