//! Loading manifest entries into model inputs.

use std::path::{Path, PathBuf};

use actionvlad::fusion::{concat_fuse, early_fuse, multicrop_pool};
use actionvlad::io::{read_feature_file, Manifest, ManifestEntry, Split};
use actionvlad::{Error, FeatureMap, Result, Sample, StreamFusion};

/// Crop `c > 0` of `P` lives at `P.crop<c>`.
fn crop_path(path: &Path, crop: usize) -> PathBuf {
    if crop == 0 {
        return path.to_path_buf();
    }
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".crop{crop}"));
    PathBuf::from(s)
}

fn load_stream(path: &Path, crops: usize) -> Result<FeatureMap> {
    if crops <= 1 {
        return read_feature_file(path);
    }
    let maps = (0..crops)
        .map(|c| read_feature_file(crop_path(path, c)))
        .collect::<Result<Vec<_>>>()?;
    multicrop_pool(&maps)
}

#[derive(Debug, Clone)]
pub struct LoadedVideo {
    pub entry: ManifestEntry,
    pub first: FeatureMap,
    pub second: Option<FeatureMap>,
}

impl LoadedVideo {
    pub fn load(entry: &ManifestEntry, crops: usize) -> Result<Self> {
        let first = load_stream(&entry.path, crops)?;
        let second = match &entry.second {
            Some(p) => {
                let b = load_stream(p, crops)?;
                if crops <= 1 && b.frames() != first.frames() {
                    return Err(Error::Malformed {
                        line: entry.line,
                        message: format!(
                            "paired streams differ in frame count ({} vs {})",
                            first.frames(),
                            b.frames()
                        ),
                    });
                }
                Some(b)
            }
            None => None,
        };
        Ok(Self {
            entry: entry.clone(),
            first,
            second,
        })
    }

    pub fn stream(&self, stream: usize) -> Result<&FeatureMap> {
        match stream {
            1 => Ok(&self.first),
            2 => self.second.as_ref().ok_or_else(|| self.unpaired("stream 2")),
            other => Err(Error::InvalidArgument(format!("stream must be 1 or 2, got {other}"))),
        }
    }

    /// Model input: one stream, or both fused at the descriptor level.
    pub fn input(&self, fusion: StreamFusion, stream: usize) -> Result<FeatureMap> {
        match fusion {
            StreamFusion::None => self.stream(stream).cloned(),
            StreamFusion::Concat | StreamFusion::Early => {
                let b = self
                    .second
                    .as_ref()
                    .ok_or_else(|| self.unpaired(&format!("{fusion} fusion")))?;
                if fusion == StreamFusion::Concat {
                    concat_fuse(&self.first, b)
                } else {
                    early_fuse(&self.first, b)
                }
            }
        }
    }

    fn unpaired(&self, what: &str) -> Error {
        Error::Malformed {
            line: self.entry.line,
            message: format!("{what} needs a second-stream path"),
        }
    }
}

pub fn load_split(manifest: &Manifest, split: Option<Split>, crops: usize) -> Result<Vec<LoadedVideo>> {
    manifest
        .entries
        .iter()
        .filter(|e| split.is_none_or(|s| e.split == s))
        .map(|e| LoadedVideo::load(e, crops))
        .collect()
}

pub fn samples(videos: &[LoadedVideo], fusion: StreamFusion, stream: usize) -> Result<Vec<Sample>> {
    videos
        .iter()
        .map(|v| {
            Ok(Sample {
                features: v.input(fusion, stream)?,
                label: v.entry.label,
            })
        })
        .collect()
}
