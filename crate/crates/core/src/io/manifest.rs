//! Dataset manifests: one video per line,
//! `path<TAB>label<TAB>split[<TAB>second_stream_path]`.
//!
//! Relative paths are resolved against the manifest's directory. Blank lines
//! and lines starting with `#` are ignored.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::read_feature_file;
use crate::error::{Error, Result};
use crate::feature::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// 1-based source line.
    pub line: usize,
    pub path: PathBuf,
    pub label: usize,
    pub split: Split,
    pub second: Option<PathBuf>,
}

impl ManifestEntry {
    /// Identifier used to match external score records: the file stem of
    /// the first-stream path.
    pub fn video_id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.to_string_lossy().into_owned())
    }

    /// Loads the first stream and, when present, the paired second stream.
    /// Paired streams must agree on frame count.
    pub fn load(&self) -> Result<(FeatureMap, Option<FeatureMap>)> {
        let a = read_feature_file(&self.path)?;
        let b = match &self.second {
            Some(p) => {
                let b = read_feature_file(p)?;
                if b.frames() != a.frames() {
                    return Err(Error::mismatch("paired stream frame count", a.frames(), b.frames()));
                }
                Some(b)
            }
            None => None,
        };
        Ok((a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub num_classes: usize,
}

impl Manifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> + '_ {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn is_paired(&self) -> bool {
        self.entries.iter().all(|e| e.second.is_some())
    }
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Manifest> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::Malformed {
                line,
                message: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() {
            return Err(Error::Malformed {
                line,
                message: "empty path".into(),
            });
        }
        let label = fields[1].trim().parse::<usize>().map_err(|_| Error::Malformed {
            line,
            message: format!("invalid label {:?}", fields[1]),
        })?;
        let split = fields[2].trim().parse::<Split>().map_err(|_| Error::Malformed {
            line,
            message: format!("invalid split {:?}", fields[2]),
        })?;
        let second = match fields.get(3) {
            Some(p) if !p.is_empty() => Some(resolve(base_dir, p)),
            Some(_) => {
                return Err(Error::Malformed {
                    line,
                    message: "empty second-stream path".into(),
                })
            }
            None => None,
        };
        entries.push(ManifestEntry {
            line,
            path: resolve(base_dir, fields[0]),
            label,
            split,
            second,
        });
    }
    if entries.is_empty() {
        return Err(Error::Empty("manifest"));
    }
    let labels: BTreeSet<usize> = entries.iter().map(|e| e.label).collect();
    let num_classes = labels.len();
    if let Some(missing) = (0..num_classes).find(|l| !labels.contains(l)) {
        return Err(Error::LabelContiguity(format!(
            "labels {labels:?} skip {missing}; expected 0..{num_classes}"
        )));
    }
    Ok(Manifest {
        entries,
        num_classes,
    })
}

/// Reads and parses a manifest, checking that every referenced file exists.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let manifest = parse_manifest(&text, base)?;
    for e in &manifest.entries {
        for p in std::iter::once(&e.path).chain(e.second.as_ref()) {
            if !p.is_file() {
                return Err(Error::MissingFile {
                    line: e.line,
                    path: p.clone(),
                });
            }
        }
    }
    Ok(manifest)
}

/// One line per entry; paths are written as given.
pub fn format_manifest<'a>(
    rows: impl IntoIterator<Item = (&'a str, usize, Split, Option<&'a str>)>,
) -> String {
    let mut out = String::new();
    for (path, label, split, second) in rows {
        out.push_str(&format!("{path}\t{label}\t{split}"));
        if let Some(s) = second {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
    }
    out
}

pub fn write_manifest<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a str, usize, Split, Option<&'a str>)>,
) -> Result<()> {
    super::write_bytes(path.as_ref(), format_manifest(rows).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_entries() {
        let text = "a.avf\t0\ttrain\nb.avf\t1\tval\n\n# comment\nc.avf\t2\ttest\n";
        let m = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.num_classes, 3);
        assert_eq!(m.entries[1].path, Path::new("/data/b.avf"));
        assert_eq!(m.entries[2].line, 5);
        assert_eq!(m.split(Split::Train).count(), 1);
        assert!(!m.is_paired());
    }

    #[test]
    fn non_contiguous_labels() {
        let text = "a\t0\ttrain\nb\t2\ttrain\n";
        assert!(matches!(
            parse_manifest(text, Path::new(".")),
            Err(Error::LabelContiguity(_))
        ));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("a\t0\n", 1),
            ("a\t0\ttrain\nb\tx\ttrain\n", 2),
            ("a\t0\ttrain\nb\t1\tholdout\n", 2),
            ("a\t0\ttrain\t\n", 1),
            ("a\t0\ttrain\tb\tc\n", 1),
        ];
        for (text, want) in cases {
            match parse_manifest(text, Path::new(".")) {
                Err(Error::Malformed { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn paired_streams_and_ids() {
        let text = "rgb/v1.avf\t0\ttrain\tflow/v1.avf\n";
        let m = parse_manifest(text, Path::new("/d")).unwrap();
        assert!(m.is_paired());
        assert_eq!(m.entries[0].second.as_deref(), Some(Path::new("/d/flow/v1.avf")));
        assert_eq!(m.entries[0].video_id(), "v1");
    }

    #[test]
    fn format_round_trips() {
        let text = format_manifest([("a.avf", 0, Split::Train, None), ("b.avf", 1, Split::Val, Some("b2.avf"))]);
        assert_eq!(text, "a.avf\t0\ttrain\nb.avf\t1\tval\tb2.avf\n");
        assert_eq!(parse_manifest(&text, Path::new("")).unwrap().entries.len(), 2);
    }
}
