//! Binary checkpoint container.
//!
//! ```text
//! magic "AVCK" | version u32 | config_len u32 | config (JSON) | trained_stage u8
//! | has_codebook u8 [k u32 | dim u32 | alpha f64 | residual f64*k*dim | assign f64*k*dim]
//! | has_classifier u8 [classes u32 | input u32 | dropout f64 | W f64*classes*input | b f64*classes]
//! | has_adam u8 [tensors u32 | step u64 | per tensor: len u64 | first f64*len | second f64*len]
//! | crc32 u32 over every preceding byte
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use super::{read_bytes, write_bytes, Cursor};
use crate::classifier::{AdamState, ClassifierModel};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::training::TrainConfig;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"AVCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    /// 0 after codebook initialization, then the last completed training stage.
    pub trained_stage: u8,
    pub codebook: Option<Codebook>,
    pub classifier: Option<ClassifierModel>,
    pub adam: Option<AdamState>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::DimensionOverflow(format!("{v} exceeds u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config = serde_json::to_vec(&ckpt.config)
        .map_err(|e| Error::Corrupt(format!("config serialization: {e}")))?;
    put_u32(&mut out, config.len())?;
    out.extend_from_slice(&config);
    out.push(ckpt.trained_stage);

    match &ckpt.codebook {
        Some(cb) => {
            out.push(1);
            put_u32(&mut out, cb.k())?;
            put_u32(&mut out, cb.dim())?;
            out.extend_from_slice(&cb.alpha().to_le_bytes());
            put_f64s(&mut out, cb.residual_anchors());
            put_f64s(&mut out, cb.assign_anchors());
        }
        None => out.push(0),
    }
    match &ckpt.classifier {
        Some(m) => {
            out.push(1);
            put_u32(&mut out, m.classes())?;
            put_u32(&mut out, m.input_dim())?;
            out.extend_from_slice(&m.dropout().to_le_bytes());
            put_f64s(&mut out, m.weights());
            put_f64s(&mut out, m.bias());
        }
        None => out.push(0),
    }
    match &ckpt.adam {
        Some(a) => {
            out.push(1);
            put_u32(&mut out, a.first.len())?;
            out.extend_from_slice(&a.step.to_le_bytes());
            for (m, v) in a.first.iter().zip(&a.second) {
                if m.len() != v.len() {
                    return Err(Error::mismatch("adam moment lengths", m.len(), v.len()));
                }
                out.extend_from_slice(&(m.len() as u64).to_le_bytes());
                put_f64s(&mut out, m);
                put_f64s(&mut out, v);
            }
        }
        None => out.push(0),
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn flag(cur: &mut Cursor<'_>, what: &str) -> Result<bool> {
    match cur.u8()? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Corrupt(format!("invalid {what} flag {other}"))),
    }
}

fn product(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b)
        .ok_or_else(|| Error::DimensionOverflow(format!("{a}x{b}")))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 {
        return Err(Error::SizeMismatch {
            expected: 12,
            actual: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found: magic,
        });
    }
    if bytes.len() < 12 {
        return Err(Error::SizeMismatch {
            expected: 12,
            actual: bytes.len() as u64,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut cur = Cursor::new(body);
    cur.take(4)?;
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let config_len = cur.u32()? as usize;
    let config: TrainConfig = serde_json::from_slice(cur.take(config_len)?)
        .map_err(|e| Error::Corrupt(format!("config: {e}")))?;
    let trained_stage = cur.u8()?;

    let codebook = if flag(&mut cur, "codebook")? {
        let k = cur.u32()? as usize;
        let dim = cur.u32()? as usize;
        let alpha = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        let n = product(k, dim)?;
        let residual = cur.f64s(n)?;
        let assign = cur.f64s(n)?;
        Some(Codebook::from_parts(k, dim, alpha, residual, assign)?)
    } else {
        None
    };
    let classifier = if flag(&mut cur, "classifier")? {
        let classes = cur.u32()? as usize;
        let input = cur.u32()? as usize;
        let dropout = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        let weights = cur.f64s(product(classes, input)?)?;
        let bias = cur.f64s(classes)?;
        Some(ClassifierModel::from_parts(classes, input, weights, bias, dropout)?)
    } else {
        None
    };
    let adam = if flag(&mut cur, "adam")? {
        let tensors = cur.u32()? as usize;
        let step = cur.u64()?;
        let mut first = Vec::new();
        let mut second = Vec::new();
        for _ in 0..tensors {
            let len = usize::try_from(cur.u64()?)
                .map_err(|_| Error::DimensionOverflow("adam tensor length".into()))?;
            first.push(cur.f64s(len)?);
            second.push(cur.f64s(len)?);
        }
        Some(AdamState {
            first,
            second,
            step,
        })
    } else {
        None
    };
    if cur.remaining() != 0 {
        return Err(Error::Corrupt(format!("{} trailing bytes", cur.remaining())));
    }
    Ok(Checkpoint {
        config,
        trained_stage,
        codebook,
        classifier,
        adam,
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    write_bytes(path.as_ref(), &encode_checkpoint(ckpt)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&read_bytes(path.as_ref())?)
}
