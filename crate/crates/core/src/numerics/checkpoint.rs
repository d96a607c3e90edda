//! Parameter checkpoints: a JSON manifest of named tensors.
//!
//! ```json
//! { "format": "cogat-ckpt-v1",
//!   "meta": { ... },
//!   "params": [ { "name": "label.weight", "shape": [3, 64], "data": "<base64>" } ] }
//! ```
//!
//! `data` is the base64 encoding of the row-major values as little-endian
//! IEEE-754 doubles, so a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "cogat-ckpt-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub meta: serde_json::Value,
    pub params: Vec<ParamEntry>,
}

pub fn encode_f64_le(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_f64_le(text: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::Incompatible(format!("bad parameter payload: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Incompatible(format!(
            "parameter payload of {} bytes is not a whole number of doubles",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

impl Checkpoint {
    pub fn new<'t>(meta: serde_json::Value, params: impl IntoIterator<Item = (String, &'t Tensor)>) -> Self {
        let params = params
            .into_iter()
            .map(|(name, t)| ParamEntry {
                name,
                shape: t.shape().to_vec(),
                data: encode_f64_le(t.data()),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            meta,
            params,
        }
    }

    /// Decoded tensors in manifest order.
    pub fn tensors(&self) -> Result<Vec<(String, Tensor)>> {
        self.params
            .iter()
            .map(|p| {
                let data = decode_f64_le(&p.data)?;
                let t = Tensor::new(p.shape.clone(), data).map_err(|e| {
                    Error::Incompatible(format!("parameter {}: {e}", p.name))
                })?;
                if !t.is_finite() {
                    return Err(Error::Numeric(format!("parameter {} holds non-finite values", p.name)));
                }
                Ok((p.name.clone(), t))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::Incompatible(format!("not a checkpoint manifest: {e}")))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Incompatible(format!(
                "unsupported checkpoint format {:?}, expected {CHECKPOINT_FORMAT:?}",
                ckpt.format
            )));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
