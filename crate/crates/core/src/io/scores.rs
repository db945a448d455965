//! Per-video score files: `video_id<TAB>s_1,...,s_C`, one video per line.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub video_id: String,
    pub scores: Vec<f64>,
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreRecord>> {
    let mut out = Vec::new();
    let mut classes = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (id, rest) = raw.split_once('\t').ok_or_else(|| Error::Malformed {
            line,
            message: "expected video_id<TAB>scores".into(),
        })?;
        if id.is_empty() {
            return Err(Error::Malformed {
                line,
                message: "empty video id".into(),
            });
        }
        let scores = rest
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Malformed {
                        line,
                        message: format!("invalid score {s:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        match classes {
            None => classes = Some(scores.len()),
            Some(c) if c != scores.len() => {
                return Err(Error::Malformed {
                    line,
                    message: format!("expected {c} scores, found {}", scores.len()),
                })
            }
            Some(_) => {}
        }
        out.push(ScoreRecord {
            video_id: id.to_string(),
            scores,
        });
    }
    Ok(out)
}

pub fn format_scores(records: &[ScoreRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.video_id);
        out.push('\t');
        let joined: Vec<String> = r.scores.iter().map(|s| s.to_string()).collect();
        out.push_str(&joined.join(","));
        out.push('\n');
    }
    out
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores(&text)
}

pub fn write_scores(path: impl AsRef<Path>, records: &[ScoreRecord]) -> Result<()> {
    super::write_bytes(path.as_ref(), format_scores(records).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats() {
        let text = "v1\t0.5,1,-2\nv2\t3,0.25,1e-3\n";
        let recs = parse_scores(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].scores, vec![3.0, 0.25, 0.001]);
        assert_eq!(parse_scores(&format_scores(&recs)).unwrap(), recs);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_scores("v1 0.5,1\n").is_err());
        assert!(parse_scores("v1\t0.5,x\n").is_err());
        assert!(parse_scores("v1\t0.5,1\nv2\t1\n").is_err());
        assert!(parse_scores("v1\tNaN\n").is_err());
    }
}
