//! `AVF1` feature tensors.
//!
//! Layout (little-endian, no padding):
//!
//! | offset | size        | field                          |
//! |--------|-------------|--------------------------------|
//! | 0      | 4           | magic `AVF1`                   |
//! | 4      | 4           | version (`u32`, currently 1)   |
//! | 8      | 4           | frames `T` (`u32`)             |
//! | 12     | 4           | locations `N` (`u32`)          |
//! | 16     | 4           | dim `D` (`u32`)                |
//! | 20     | `4·T·N·D`   | `f32` payload, `(t, i, j)` order |

use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::feature::FeatureMap;

pub const FEATURE_MAGIC: [u8; 4] = *b"AVF1";
pub const FEATURE_VERSION: u32 = 1;
pub const FEATURE_HEADER_LEN: usize = 20;

/// Number of payload floats implied by a header, if it fits in `u64`.
pub fn expected_payload_floats(frames: u32, locations: u32, dim: u32) -> Option<u64> {
    (frames as u64)
        .checked_mul(locations as u64)?
        .checked_mul(dim as u64)
}

pub fn encode_feature_map(f: &FeatureMap) -> Result<Vec<u8>> {
    let dims = [f.frames(), f.locations(), f.dim()];
    let mut out = Vec::with_capacity(FEATURE_HEADER_LEN + 4 * f.data().len());
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    for d in dims {
        let d = u32::try_from(d)
            .map_err(|_| Error::DimensionOverflow(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &v in f.data() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::NonFinite("feature value outside f32 range"));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_feature_map(bytes: &[u8]) -> Result<FeatureMap> {
    if bytes.len() < 4 {
        return Err(Error::SizeMismatch {
            expected: FEATURE_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != FEATURE_MAGIC {
        return Err(Error::BadMagic {
            expected: FEATURE_MAGIC,
            found: magic,
        });
    }
    if bytes.len() < FEATURE_HEADER_LEN {
        return Err(Error::SizeMismatch {
            expected: FEATURE_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FEATURE_VERSION,
        });
    }
    let (t, n, d) = (word(8), word(12), word(16));
    let overflow = || Error::DimensionOverflow(format!("{t}x{n}x{d}"));
    let floats = expected_payload_floats(t, n, d).ok_or_else(overflow)?;
    let payload = floats.checked_mul(4).ok_or_else(overflow)?;
    let expected = payload
        .checked_add(FEATURE_HEADER_LEN as u64)
        .ok_or_else(overflow)?;
    if expected != bytes.len() as u64 {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data = bytes[FEATURE_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    FeatureMap::new(t as usize, n as usize, d as usize, data)
}

/// Writes `f` as single-precision `AVF1`. Values are narrowed to `f32`.
pub fn write_feature_file(f: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_feature_map(f)?)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureMap> {
    decode_feature_map(&read_bytes(path.as_ref())?)
}
