//! Checkpoint files.
//!
//! Byte layout:
//!
//! ```text
//! stfgacn-checkpoint v1\n
//! header-bytes: <n>\n
//! <n bytes of UTF-8 TOML: CheckpointHeader>
//! <param_count little-endian IEEE-754 f64 values>
//! ```
//!
//! Nothing follows the parameters. The header records the model spec, the
//! parameter layout, training hyperparameters, the seed and the epoch.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Model, ModelParams, ModelSpec, ParamBlock};
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_MAGIC: &str = "stfgacn-checkpoint v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub seed: u64,
    pub epoch: usize,
    pub param_count: usize,
    pub spec: ModelSpec,
    pub hyperparameters: BTreeMap<String, toml::Value>,
    pub blocks: Vec<ParamBlock>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ModelParams<f64>,
}

impl Checkpoint {
    pub fn new<T: Scalar>(
        params: &ModelParams<T>,
        seed: u64,
        epoch: usize,
        hyperparameters: BTreeMap<String, toml::Value>,
    ) -> Self {
        let params = params.cast::<f64>();
        let model = params.model();
        Self {
            header: CheckpointHeader {
                seed,
                epoch,
                param_count: params.values.len(),
                spec: params.spec.clone(),
                hyperparameters,
                blocks: model.blocks().to_vec(),
            },
            params,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = toml::to_string(&self.header)
            .map_err(|e| Error::InvalidConfig(format!("checkpoint header: {e}")))?;
        let mut out = format!("{CHECKPOINT_MAGIC}\nheader-bytes: {}\n", header.len()).into_bytes();
        out.extend_from_slice(header.as_bytes());
        out.reserve(self.params.values.len() * 8);
        for v in &self.params.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(path, msg);
        let (magic, rest) = split_line(bytes).ok_or_else(|| bad("missing magic line".into()))?;
        if magic != CHECKPOINT_MAGIC.as_bytes() {
            return Err(bad(format!("unexpected magic {:?}", String::from_utf8_lossy(magic))));
        }
        let (len_line, rest) = split_line(rest).ok_or_else(|| bad("missing header length".into()))?;
        let n: usize = std::str::from_utf8(len_line)
            .ok()
            .and_then(|l| l.strip_prefix("header-bytes: "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("malformed header length line".into()))?;
        if rest.len() < n {
            return Err(bad("truncated header".into()));
        }
        let text = std::str::from_utf8(&rest[..n]).map_err(|e| bad(format!("header not UTF-8: {e}")))?;
        let header: CheckpointHeader = toml::from_str(text).map_err(|e| bad(format!("header: {e}")))?;
        let body = &rest[n..];
        if body.len() != header.param_count * 8 {
            return Err(bad(format!(
                "expected {} parameter bytes, found {}",
                header.param_count * 8,
                body.len()
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let model = Model::new(&header.spec)?;
        if model.blocks() != header.blocks.as_slice() {
            return Err(bad("parameter layout does not match the model spec".into()));
        }
        let params = ModelParams::from_values(&header.spec, values)?;
        Ok(Self { header, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

fn split_line(b: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = b.iter().position(|&c| c == b'\n')?;
    Some((&b[..i], &b[i + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::TemporalKind;

    #[test]
    fn round_trip_is_exact() {
        let spec = ModelSpec {
            temporal: TemporalKind::AttGru,
            graph: true,
            subnet_of: vec![0, 0, 1],
            hidden: 3,
            decoder_channels: 2,
        };
        let params = ModelParams::<f64>::init(&spec, 11).unwrap();
        let mut hyper = BTreeMap::new();
        hyper.insert("lr".to_string(), toml::Value::Float(0.001));
        let ck = Checkpoint::new(&params, 11, 4, hyper);
        let bytes = ck.to_bytes().unwrap();
        assert!(bytes.starts_with(b"stfgacn-checkpoint v1\nheader-bytes: "));
        let back = Checkpoint::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1], Path::new("mem")).is_err());
    }
}
