//! Learnable spatio-temporal VLAD pooling for video action classification.
//!
//! A video is a [`FeatureMap`] of local descriptors over frames and spatial
//! locations. The aggregation layer soft-assigns each descriptor to a
//! [`Codebook`] of anchors, sums residuals per anchor over the whole video
//! and normalizes the result into a single fixed-length descriptor. The
//! layer is differentiable, so the codebook can be finetuned together with a
//! linear softmax classifier.

pub mod aggregation;
pub mod classifier;
pub mod codebook;
mod error;
pub mod feature;
pub mod fusion;
pub mod io;
pub mod report;
pub mod synth;
pub mod training;

pub use aggregation::{
    actionvlad_backward, actionvlad_descriptor, actionvlad_forward, assignment_map, average_pool,
    flatten_l2_normalize, hard_vlad_forward, intra_normalize, max_pool, soft_assign, RawVlad,
    VladDescriptor, VladGradients, VladPass, NORM_EPS,
};
pub use classifier::{AdamConfig, AdamState, ClassifierModel};
pub use codebook::{build_codebook, kmeans, kmeans_init, Codebook, KMeansOptions};
pub use error::{Error, Result};
pub use feature::FeatureMap;
pub use fusion::{ScoreKind, ScoreVector};
pub use training::{Pooling, Sample, StreamFusion, TrainConfig};
