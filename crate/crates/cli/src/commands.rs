use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use actionvlad::classifier::softmax;
use actionvlad::codebook::{kmeans, subsample_rows};
use actionvlad::fusion::{late_fuse, score_fuse_external};
use actionvlad::io::{
    load_checkpoint, load_manifest, read_feature_file, read_scores, save_checkpoint, write_scores,
    Checkpoint, Manifest, ScoreRecord, Split,
};
use actionvlad::report::{
    confusion_diff as diff_matrices, encode_assignment_map, format_assignment_map, format_matrix,
    word_contributions as contributions, ExperimentReport,
};
use actionvlad::synth::{synth_generate, write_synth_dataset, Composition, SynthConfig};
use actionvlad::training::{pool_features, train_stage1, train_stage2, EpochMetrics};
use actionvlad::{
    actionvlad_descriptor, assignment_map, ClassifierModel, Codebook, Error, FeatureMap,
    KMeansOptions, Pooling, Result, ScoreVector, StreamFusion, TrainConfig,
};
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use crate::data::{load_split, samples, LoadedVideo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolingArg {
    Vlad,
    Avg,
    Max,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::Vlad => Pooling::Vlad,
            PoolingArg::Avg => Pooling::Avg,
            PoolingArg::Max => Pooling::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    None,
    Concat,
    Early,
    Late,
}

impl FusionArg {
    /// Descriptor-level fusion mode; `None` for late fusion.
    fn stream_fusion(self) -> Option<StreamFusion> {
        match self {
            FusionArg::None => Some(StreamFusion::None),
            FusionArg::Concat => Some(StreamFusion::Concat),
            FusionArg::Early => Some(StreamFusion::Early),
            FusionArg::Late => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompositionArg {
    Confounded,
    Random,
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapFormat {
    Text,
    Binary,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 12)]
    pub subactions: usize,
    #[arg(long, default_value_t = 3)]
    pub subactions_per_class: usize,
    #[arg(long, default_value_t = 25)]
    pub frames: usize,
    #[arg(long, default_value_t = 9)]
    pub locations: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Per-coordinate Gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = 40)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 10)]
    pub val_per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub test_per_class: usize,
    /// 2 writes a paired second stream for every video.
    #[arg(long, default_value_t = 1)]
    pub streams: usize,
    #[arg(long, value_enum, default_value_t = CompositionArg::Confounded)]
    pub composition: CompositionArg,
    /// Sign-pattern blocks for the confounded composition.
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InitCodebookArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = actionvlad::codebook::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = actionvlad::codebook::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Descriptors are uniformly subsampled to at most this many rows.
    #[arg(long, default_value_t = 100_000)]
    pub max_samples: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Descriptor-level stream fusion the codebook will be used with.
    #[arg(long, value_enum, default_value_t = FusionArg::None)]
    pub fusion: FusionArg,
    /// Stream to cluster when not fusing.
    #[arg(long, default_value_t = 1)]
    pub stream: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Input checkpoint: a codebook for stage 1, a stage-1 model for stage 2.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub stage: u8,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the input checkpoint's pooling, else vlad.
    #[arg(long, value_enum)]
    pub pooling: Option<PoolingArg>,
    /// Defaults to the input checkpoint's fusion, else none.
    #[arg(long, value_enum)]
    pub fusion: Option<FusionArg>,
    #[arg(long, default_value_t = 1)]
    pub stream: usize,
    /// Overrides the codebook's soft-assignment sharpness.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub accumulation_steps: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Use one anchor set for both residuals and assignments.
    #[arg(long)]
    pub tie_anchors: bool,
    /// Also append the per-epoch metric lines to this file.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Val)]
    pub split: SplitArg,
    /// Defaults to the checkpoint's pooling.
    #[arg(long, value_enum)]
    pub pooling: Option<PoolingArg>,
    /// Defaults to the checkpoint's fusion. `late` averages the class
    /// probabilities of this checkpoint on stream 1 and `--checkpoint-b`
    /// on stream 2.
    #[arg(long, value_enum)]
    pub fusion: Option<FusionArg>,
    #[arg(long)]
    pub checkpoint_b: Option<PathBuf>,
    /// Weight of this model in late or external-score fusion.
    #[arg(long, default_value_t = 0.5)]
    pub fusion_weight: f64,
    /// Number of crops per video: `P`, `P.crop1`, ..., pooled together.
    #[arg(long, default_value_t = 1)]
    pub multicrop: usize,
    /// Score file (`id<TAB>s1,s2,...`) fused after min-max normalization.
    #[arg(long)]
    pub external_scores: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub stream: usize,
    /// Write the report as JSON.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Write per-video class scores.
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportAssignmentsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Restrict to one split; all videos by default.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long, default_value_t = 1)]
    pub stream: usize,
    #[arg(long, value_enum, default_value_t = MapFormat::Text)]
    pub format: MapFormat,
    /// A file for text output, a directory of `<id>.ava` files for binary.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WordContributionsArgs {
    /// Feature file of the video.
    #[arg(long)]
    pub video: PathBuf,
    /// Second-stream feature file, for checkpoints trained with fusion.
    #[arg(long)]
    pub video_b: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub class: usize,
    /// Print only the highest-scoring words.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConfusionDiffArgs {
    /// JSON report written by `eval --report-out`.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Write the difference matrix here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseScoresArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Weight of `a`.
    #[arg(long, default_value_t = 0.5)]
    pub fusion_weight: f64,
    /// Min-max normalize both score vectors per video before fusing.
    #[arg(long)]
    pub min_max: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn gen_synth(a: GenSynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        num_classes: a.classes,
        num_subactions: a.subactions,
        subactions_per_class: a.subactions_per_class,
        frames: a.frames,
        locations: a.locations,
        dim: a.dim,
        noise: a.noise,
        train_per_class: a.train_per_class,
        val_per_class: a.val_per_class,
        test_per_class: a.test_per_class,
        streams: a.streams,
        composition: match a.composition {
            CompositionArg::Confounded => Composition::Confounded { blocks: a.blocks },
            CompositionArg::Random => Composition::Random,
            CompositionArg::Disjoint => Composition::Disjoint,
        },
        seed: a.seed,
    };
    let ds = synth_generate(&cfg)?;
    let manifest = write_synth_dataset(&ds, &a.out)?;
    println!("{} videos, manifest {}", ds.videos.len(), manifest.display());
    Ok(())
}

pub fn init_codebook(a: InitCodebookArgs) -> Result<()> {
    let fusion = a
        .fusion
        .stream_fusion()
        .ok_or_else(|| invalid("late fusion uses one codebook per stream; run init-codebook per --stream"))?;
    let manifest = load_manifest(&a.manifest)?;
    let videos = load_split(&manifest, Some(Split::Train), 1)?;
    if videos.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let mut rows = Vec::new();
    let mut dim = None;
    for v in &videos {
        let f = v.input(fusion, a.stream)?;
        match dim {
            None => dim = Some(f.dim()),
            Some(d) if d != f.dim() => {
                return Err(Error::DimensionMismatch {
                    context: "descriptor dim across videos",
                    expected: d,
                    actual: f.dim(),
                })
            }
            _ => {}
        }
        rows.extend_from_slice(f.data());
    }
    let dim = dim.expect("non-empty split");
    let sample = subsample_rows(&rows, dim, a.max_samples, a.seed);
    let opts = KMeansOptions {
        max_iters: a.max_iters,
        seed: a.seed,
    };
    let km = kmeans(&sample, dim, a.k, opts)?;
    println!(
        "kmeans\tk={}\tdim={dim}\tsamples={}\titerations={}\tconverged={}\tcost={:.6}",
        a.k,
        sample.len() / dim.max(1),
        km.iterations,
        km.converged,
        km.cost()
    );
    let codebook = km.into_codebook(a.alpha)?;
    let config = TrainConfig {
        alpha: a.alpha,
        k: a.k,
        seed: a.seed,
        fusion,
        ..TrainConfig::default()
    };
    config.validate()?;
    save_checkpoint(
        &a.out,
        &Checkpoint {
            config,
            trained_stage: 0,
            codebook: Some(codebook),
            classifier: None,
            adam: None,
        },
    )
}

fn apply_overrides(cfg: &mut TrainConfig, a: &TrainArgs) -> Result<()> {
    if let Some(p) = a.pooling {
        cfg.pooling = p.into();
    }
    if let Some(f) = a.fusion {
        cfg.fusion = f
            .stream_fusion()
            .ok_or_else(|| invalid("late fusion combines separately trained models; train each stream with --stream"))?;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let stage2 = a.stage == 2;
    if let Some(e) = a.epochs {
        *(if stage2 { &mut cfg.stage2_epochs } else { &mut cfg.stage1_epochs }) = e;
    }
    if let Some(lr) = a.lr {
        *(if stage2 { &mut cfg.stage2_lr } else { &mut cfg.stage1_lr }) = lr;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let Some(s) = a.accumulation_steps {
        cfg.accumulation_steps = s;
    }
    if let Some(d) = a.dropout {
        cfg.dropout = d;
    }
    if let Some(c) = a.clip_norm {
        cfg.clip_norm = c;
    }
    if a.tie_anchors {
        cfg.tie_anchors = true;
    }
    cfg.validate()
}

pub fn train(a: TrainArgs) -> Result<()> {
    let input = a.checkpoint.as_ref().map(load_checkpoint).transpose()?;
    let has_stage1 = input
        .as_ref()
        .is_some_and(|c| c.trained_stage >= 1 && c.classifier.is_some());
    if a.stage == 2 && !has_stage1 {
        return Err(invalid("stage 2 needs a stage-1 checkpoint (--checkpoint)"));
    }
    let mut cfg = input.as_ref().map(|c| c.config.clone()).unwrap_or_default();
    if let Some(cb) = input.as_ref().and_then(|c| c.codebook.as_ref()) {
        cfg.alpha = cb.alpha();
        cfg.k = cb.k();
    }
    apply_overrides(&mut cfg, &a)?;

    let mut codebook = input.as_ref().and_then(|c| c.codebook.clone());
    if let Some(cb) = codebook.as_mut() {
        cb.set_alpha(cfg.alpha)?;
    }
    if cfg.pooling == Pooling::Vlad && codebook.is_none() {
        return Err(invalid(
            "vlad pooling needs a codebook; pass --checkpoint from init-codebook",
        ));
    }

    let manifest = load_manifest(&a.manifest)?;
    let train_set = samples(&load_split(&manifest, Some(Split::Train), 1)?, cfg.fusion, a.stream)?;
    let val_set = samples(&load_split(&manifest, Some(Split::Val), 1)?, cfg.fusion, a.stream)?;

    let started = Instant::now();
    let (out, curve) = if a.stage == 1 {
        let cb = if cfg.pooling == Pooling::Vlad { codebook.as_ref() } else { None };
        let outcome = train_stage1(&train_set, &val_set, cb, &cfg)?;
        let ckpt = Checkpoint {
            config: cfg,
            trained_stage: 1,
            codebook: cb.cloned(),
            classifier: Some(outcome.model),
            adam: None,
        };
        (ckpt, outcome.curve)
    } else {
        let prior = input
            .as_ref()
            .and_then(|c| c.classifier.as_ref())
            .expect("checked above");
        if cfg.pooling != Pooling::Vlad {
            return Err(invalid("stage 2 finetunes the codebook and needs vlad pooling"));
        }
        let cb = codebook.as_ref().expect("checked above");
        let outcome = train_stage2(&train_set, &val_set, cb, prior, &cfg)?;
        let ckpt = Checkpoint {
            config: cfg,
            trained_stage: 2,
            codebook: Some(outcome.codebook),
            classifier: Some(outcome.model),
            adam: None,
        };
        (ckpt, outcome.curve)
    };
    let log = metrics_log(&curve);
    print!("{log}");
    println!("# seconds\t{:.3}", started.elapsed().as_secs_f64());
    if let Some(path) = &a.metrics_out {
        write_text(path, &log)?;
    }
    save_checkpoint(&a.out, &out)
}

fn metrics_log(curve: &[EpochMetrics]) -> String {
    let mut log = String::from("# epoch\tstage\ttrain_loss\tval_acc\n");
    for m in curve {
        log.push_str(&m.to_log_line());
        log.push('\n');
    }
    log
}

/// A trained model plus what it needs to turn features into class scores.
struct Scorer {
    model: ClassifierModel,
    codebook: Option<Codebook>,
    pooling: Pooling,
}

impl Scorer {
    fn from_checkpoint(ckpt: Checkpoint, pooling: Option<Pooling>) -> Result<Self> {
        let model = ckpt
            .classifier
            .ok_or_else(|| invalid("checkpoint has no trained classifier; run train first"))?;
        let pooling = pooling.unwrap_or(ckpt.config.pooling);
        let codebook = match pooling {
            Pooling::Vlad => Some(
                ckpt.codebook
                    .ok_or_else(|| invalid("checkpoint has no codebook for vlad pooling"))?,
            ),
            _ => None,
        };
        Ok(Self {
            model,
            codebook,
            pooling,
        })
    }

    fn probabilities(&self, f: &FeatureMap) -> Result<Vec<f64>> {
        let v = pool_features(f, self.pooling, self.codebook.as_ref())?;
        Ok(softmax(&self.model.forward(&v)?))
    }
}

fn external_map(path: &Path) -> Result<HashMap<String, Vec<f64>>> {
    Ok(read_scores(path)?
        .into_iter()
        .map(|r| (r.video_id, r.scores))
        .collect())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    if a.multicrop == 0 {
        return Err(invalid("--multicrop must be at least 1"));
    }
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let fusion = a.fusion.unwrap_or(match ckpt.config.fusion {
        StreamFusion::None => FusionArg::None,
        StreamFusion::Concat => FusionArg::Concat,
        StreamFusion::Early => FusionArg::Early,
    });
    let scorer = Scorer::from_checkpoint(ckpt, a.pooling.map(Into::into))?;
    let scorer_b = match (fusion, &a.checkpoint_b) {
        (FusionArg::Late, Some(p)) => Some(Scorer::from_checkpoint(load_checkpoint(p)?, None)?),
        (FusionArg::Late, None) => return Err(invalid("late fusion needs --checkpoint-b")),
        (_, Some(_)) => return Err(invalid("--checkpoint-b is only used with --fusion late")),
        _ => None,
    };
    let external = a.external_scores.as_deref().map(external_map).transpose()?;

    let manifest: Manifest = load_manifest(&a.manifest)?;
    let split: Split = a.split.into();
    let started = Instant::now();
    let videos = load_split(&manifest, Some(split), a.multicrop)?;
    let load_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let scores = videos
        .par_iter()
        .map(|v| -> Result<Vec<f64>> {
            let mut s = match (&scorer_b, fusion.stream_fusion()) {
                (Some(b), _) => {
                    let pa = ScoreVector::probabilities(scorer.probabilities(v.stream(1)?)?)?;
                    let pb = ScoreVector::probabilities(b.probabilities(v.stream(2)?)?)?;
                    late_fuse(&pa, &pb, a.fusion_weight)?
                }
                (None, Some(f)) => {
                    ScoreVector::probabilities(scorer.probabilities(&v.input(f, a.stream)?)?)?
                }
                (None, None) => unreachable!("late fusion always has a second scorer"),
            };
            if let Some(ext) = &external {
                let id = v.entry.video_id();
                let e = ext.get(&id).ok_or_else(|| Error::Malformed {
                    line: v.entry.line,
                    message: format!("no external scores for video {id:?}"),
                })?;
                s = score_fuse_external(&s, &ScoreVector::raw(e.clone())?, a.fusion_weight)?;
            }
            Ok(s.into_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let score_secs = started.elapsed().as_secs_f64();

    let labels: Vec<usize> = videos.iter().map(|v| v.entry.label).collect();
    let mut report =
        ExperimentReport::from_scores(&split.to_string(), &scores, &labels, scorer.model.classes())?;
    report.timings = vec![("load".into(), load_secs), ("score".into(), score_secs)];
    print!("{}", report.to_text());
    if let Some(path) = &a.report_out {
        write_text(path, &report.to_json())?;
    }
    if let Some(path) = &a.scores_out {
        let records: Vec<ScoreRecord> = videos
            .iter()
            .zip(scores)
            .map(|(v, scores)| ScoreRecord {
                video_id: v.entry.video_id(),
                scores,
            })
            .collect();
        write_scores(path, &records)?;
    }
    Ok(())
}

fn codebook_and_fusion(path: &Path) -> Result<(Codebook, StreamFusion)> {
    let ckpt = load_checkpoint(path)?;
    let fusion = ckpt.config.fusion;
    let cb = ckpt
        .codebook
        .ok_or_else(|| invalid("checkpoint has no codebook"))?;
    Ok((cb, fusion))
}

pub fn export_assignments(a: ExportAssignmentsArgs) -> Result<()> {
    let (cb, fusion) = codebook_and_fusion(&a.checkpoint)?;
    let manifest = load_manifest(&a.manifest)?;
    let videos = load_split(&manifest, a.split.map(Into::into), 1)?;
    let maps = videos
        .par_iter()
        .map(|v| -> Result<(String, FeatureMap, Vec<usize>)> {
            let f = v.input(fusion, a.stream)?;
            let map = assignment_map(&f, &cb)?;
            Ok((v.entry.video_id(), f, map))
        })
        .collect::<Result<Vec<_>>>()?;
    match a.format {
        MapFormat::Text => {
            let text: String = maps
                .iter()
                .map(|(id, f, m)| format_assignment_map(id, f.frames(), f.locations(), m))
                .collect();
            write_text(&a.out, &text)?;
        }
        MapFormat::Binary => {
            fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
            for (id, f, m) in &maps {
                let path = a.out.join(format!("{id}.ava"));
                let bytes = encode_assignment_map(f.frames(), f.locations(), m)?;
                fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    println!("{} assignment maps written to {}", maps.len(), a.out.display());
    Ok(())
}

pub fn word_contributions(a: WordContributionsArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    if ckpt.config.pooling != Pooling::Vlad {
        return Err(invalid("word contributions need a vlad-pooled checkpoint"));
    }
    let fusion = ckpt.config.fusion;
    let model = ckpt
        .classifier
        .ok_or_else(|| invalid("checkpoint has no trained classifier"))?;
    let cb = ckpt
        .codebook
        .ok_or_else(|| invalid("checkpoint has no codebook"))?;
    let first = read_feature_file(&a.video)?;
    let f = match fusion {
        StreamFusion::None => first,
        _ => {
            let path = a
                .video_b
                .as_ref()
                .ok_or_else(|| invalid(format!("{fusion}-fused checkpoint needs --video-b")))?;
            let second = read_feature_file(path)?;
            let fused = LoadedVideo {
                entry: actionvlad::io::ManifestEntry {
                    line: 0,
                    path: a.video.clone(),
                    label: 0,
                    split: Split::Test,
                    second: Some(path.clone()),
                },
                first,
                second: Some(second),
            };
            fused.input(fusion, 1)?
        }
    };
    let descriptor = actionvlad_descriptor(&f, &cb)?;
    let wc = contributions(descriptor.values(), cb.k(), &model, a.class)?;
    println!("# class\t{}\tlogit\t{:.9}\tbias\t{:.9}", wc.class, wc.logit, wc.bias);
    println!("# word\tscore");
    let shown = a.top.unwrap_or(wc.ranked.len());
    for w in wc.ranked.iter().take(shown) {
        println!("{}\t{:.9}", w.word, w.score);
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentReport::from_json(&text)
}

pub fn confusion_diff(a: ConfusionDiffArgs) -> Result<()> {
    let ra = read_report(&a.a)?;
    let rb = read_report(&a.b)?;
    let diff = diff_matrices(&ra.confusion, &rb.confusion)?;
    let matrix = format_matrix(&diff);
    match &a.out {
        Some(path) => write_text(path, &matrix)?,
        None => print!("{matrix}"),
    }
    let mut gains: Vec<(usize, f64)> = diff.iter().enumerate().map(|(c, row)| (c, row[c])).collect();
    gains.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    println!("# class\tdiagonal_gain");
    for (c, g) in gains {
        println!("{c}\t{g:.6}");
    }
    Ok(())
}

pub fn fuse_scores(a: FuseScoresArgs) -> Result<()> {
    let sa = read_scores(&a.a)?;
    let sb = external_map(&a.b)?;
    let fused = sa
        .into_iter()
        .map(|r| {
            let other = sb
                .get(&r.video_id)
                .ok_or_else(|| invalid(format!("video {:?} missing from {}", r.video_id, a.b.display())))?;
            let x = ScoreVector::raw(r.scores)?;
            let y = ScoreVector::raw(other.clone())?;
            let s = if a.min_max {
                score_fuse_external(&x, &y, a.fusion_weight)?
            } else {
                late_fuse(&x, &y, a.fusion_weight)?
            };
            Ok(ScoreRecord {
                video_id: r.video_id,
                scores: s.into_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_scores(&a.out, &fused)?;
    println!("{} fused score rows written to {}", fused.len(), a.out.display());
    Ok(())
}
