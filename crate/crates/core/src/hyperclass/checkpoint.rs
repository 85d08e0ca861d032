//! Checkpoint files: an 8-byte magic, a little-endian `u64` header length,
//! a UTF-8 JSON header, then `v`, `P` (row-major) and `b` as `f32le`.
//!
//! Parameters are held in `f64` but stored as `f32`; a checkpoint whose
//! parameters are already `f32`-representable (see
//! [`HyperClassParams::round_to_f32`]) round-trips bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HyperClassParams;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HCLSCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub dim: usize,
    pub dtype: String,
    /// Which blocks were meta-trained: `none`, `v`, `p` or `both`.
    pub ablation: String,
    /// Echo of the training configuration that produced the parameters.
    pub config: serde_json::Value,
    pub best_validation_score: Option<f64>,
    pub meta_batch_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: HyperClassParams,
    pub ablation: String,
    pub config: serde_json::Value,
    pub best_validation_score: Option<f64>,
    pub meta_batch_index: usize,
}

impl Checkpoint {
    /// Wrap bare parameters (e.g. a random initialization).
    pub fn from_params(params: HyperClassParams) -> Self {
        Self {
            params,
            ablation: "none".into(),
            config: serde_json::Value::Null,
            best_validation_score: None,
            meta_batch_index: 0,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.params.validate()?;
        let d = self.params.dim;
        let header = CheckpointHeader {
            format_version: FORMAT_VERSION,
            dim: d,
            dtype: "f32le".into(),
            ablation: self.ablation.clone(),
            config: self.config.clone(),
            best_validation_score: self.best_validation_score,
            meta_batch_index: self.meta_batch_index,
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + 4 * (d * d + 2 * d));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for x in self.params.v.iter().chain(&self.params.p).chain(&self.params.b) {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing checkpoint magic".into()));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes
            .get(16..)
            .filter(|b| b.len() >= hlen)
            .ok_or_else(|| bad("truncated header".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(&body[..hlen])?;
        if header.format_version != FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        let d = header.dim;
        let blob = &body[hlen..];
        let expected = 4 * (d * d + 2 * d);
        if blob.len() != expected {
            return Err(bad(format!(
                "parameter blob is {} bytes, expected {expected}",
                blob.len()
            )));
        }
        let vals: Vec<f64> = blob
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect();
        let params = HyperClassParams {
            dim: d,
            v: vals[..d].to_vec(),
            p: vals[d..d + d * d].to_vec(),
            b: vals[d + d * d..].to_vec(),
        };
        params.validate()?;
        Ok(Self {
            params,
            ablation: header.ablation,
            config: header.config,
            best_validation_score: header.best_validation_score,
            meta_batch_index: header.meta_batch_index,
        })
    }

    /// Atomic write: temp file in the target directory, then rename.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
            f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
