//! Model checkpoints.
//!
//! Layout (little-endian): `b"GZCK"`, `u32` format version, `u32` header
//! length, a JSON header with the model config, optional training config and
//! step count, `u32` block count, then per block: `u32` name length, name
//! bytes, `u32` rank, `rank × u32` dims, and the `f32` values row-major.
//! Optimizer moments, when present, are stored as `optim.m.<name>` and
//! `optim.v.<name>` blocks after the parameters.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::data::binio::{read_f32s, read_string, write_f32s, write_string};
use crate::error::{Error, Result};
use crate::model::{Gazeformer, ModelConfig, ModelWeights};
use crate::tensor::Tensor;
use crate::train::{AdamState, TrainConfig, Trainer};

const MAGIC: &[u8; 4] = b"GZCK";
pub const FORMAT_VERSION: u32 = 1;
const MAX_RANK: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub step: u64,
    /// Adam update counter, present when optimizer moments are stored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_updates: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub weights: ModelWeights,
    pub optimizer: Option<AdamState>,
}

impl Checkpoint {
    pub fn from_model(model: &Gazeformer) -> Self {
        Self {
            header: CheckpointHeader {
                format_version: FORMAT_VERSION,
                model: model.config().clone(),
                train: None,
                step: 0,
                optimizer_updates: None,
            },
            weights: model.weights().clone(),
            optimizer: None,
        }
    }

    pub fn from_trainer(t: &Trainer) -> Self {
        Self {
            header: CheckpointHeader {
                format_version: FORMAT_VERSION,
                model: t.model_config.clone(),
                train: Some(t.train_config.clone()),
                step: t.step,
                optimizer_updates: Some(t.optimizer.t),
            },
            weights: t.weights.clone(),
            optimizer: Some(t.optimizer.clone()),
        }
    }

    pub fn into_model(self) -> Result<Gazeformer> {
        Gazeformer::new(self.header.model, self.weights)
    }

    /// Restores a trainer. `train` overrides the stored training config
    /// (e.g. to extend `steps`); the optimizer state must be present.
    pub fn into_trainer(self, train: Option<TrainConfig>) -> Result<Trainer> {
        let train_config = train
            .or(self.header.train)
            .ok_or_else(|| Error::Config("checkpoint carries no training config".into()))?;
        train_config.validate()?;
        let optimizer = self
            .optimizer
            .ok_or_else(|| Error::format("checkpoint", "no optimizer state; cannot resume"))?;
        self.weights.check_layout(&self.header.model)?;
        Ok(Trainer {
            model_config: self.header.model,
            train_config,
            weights: self.weights,
            optimizer,
            step: self.header.step,
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::format("checkpoint", e.to_string());
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(MAGIC).map_err(io)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION).map_err(io)?;
        w.write_u32::<LittleEndian>(header.len() as u32).map_err(io)?;
        w.write_all(&header).map_err(io)?;

        let mut blocks: Vec<(String, &Tensor)> = self.weights.iter().map(|(n, t)| (n.to_string(), t)).collect();
        if let Some(opt) = &self.optimizer {
            for (name, t) in self.weights.names().iter().zip(&opt.m) {
                blocks.push((format!("optim.m.{name}"), t));
            }
            for (name, t) in self.weights.names().iter().zip(&opt.v) {
                blocks.push((format!("optim.v.{name}"), t));
            }
        }
        w.write_u32::<LittleEndian>(blocks.len() as u32).map_err(io)?;
        for (name, t) in &blocks {
            write_string(&mut w, name).map_err(io)?;
            w.write_u32::<LittleEndian>(t.rank() as u32).map_err(io)?;
            for &d in t.shape() {
                w.write_u32::<LittleEndian>(d as u32).map_err(io)?;
            }
            write_f32s(&mut w, t.data()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::format("checkpoint", e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io)?;
        if version != FORMAT_VERSION {
            return Err(Error::format("checkpoint", format!("unsupported version {version}")));
        }
        let n = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut header_bytes = vec![0u8; n];
        r.read_exact(&mut header_bytes).map_err(io)?;
        let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::format("checkpoint", format!("header: {e}")))?;
        header.model.validate()?;

        let count = r.read_u32::<LittleEndian>().map_err(io)?;
        let mut params = Vec::new();
        let mut m = Vec::new();
        let mut v = Vec::new();
        for _ in 0..count {
            let name = read_string(&mut r).map_err(io)?;
            let rank = r.read_u32::<LittleEndian>().map_err(io)?;
            if rank > MAX_RANK {
                return Err(Error::format("checkpoint", format!("block {name:?} has rank {rank}")));
            }
            let dims = (0..rank)
                .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
                .collect::<std::io::Result<Vec<_>>>()
                .map_err(io)?;
            let data = read_f32s(&mut r, dims.iter().product()).map_err(io)?;
            let t = Tensor::new(dims, data)?;
            if let Some(rest) = name.strip_prefix("optim.m.") {
                m.push((rest.to_string(), t));
            } else if let Some(rest) = name.strip_prefix("optim.v.") {
                v.push((rest.to_string(), t));
            } else {
                params.push((name, t));
            }
        }
        let weights = ModelWeights::from_named(params)?;
        weights.check_layout(&header.model)?;

        let optimizer = match header.optimizer_updates {
            None => None,
            Some(t) => {
                let order = |blocks: Vec<(String, Tensor)>| -> Result<Vec<Tensor>> {
                    if blocks.len() != weights.len()
                        || blocks.iter().zip(weights.names()).any(|((a, _), b)| a != b)
                    {
                        return Err(Error::format("checkpoint", "optimizer blocks do not match parameters"));
                    }
                    Ok(blocks.into_iter().map(|(_, t)| t).collect())
                };
                Some(AdamState { t, m: order(m)?, v: order(v)? })
            }
        };
        Ok(Self {
            header,
            weights,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthetic_dataset, SyntheticProvider};
    use crate::model::Variant;
    use crate::train::TrainData;

    #[test]
    fn model_round_trip_is_bit_exact() {
        let model = Gazeformer::init(ModelConfig::tiny().with_variant(Variant::NoReg), 4).unwrap();
        let ck = Checkpoint::from_model(&model);
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.header.model.variant, Variant::NoReg);
        assert_eq!(back.into_model().unwrap(), model);
    }

    #[test]
    fn resumed_training_matches_uninterrupted() {
        let cfg = ModelConfig::tiny();
        let ds = synthetic_dataset(4, &["a", "b"], &cfg, (100.0, 100.0), 1);
        let data = TrainData::build(&ds, &SyntheticProvider { config: cfg.clone(), seed: 1 }, &cfg).unwrap();
        let tc = TrainConfig {
            batch_size: 2,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let mut a = Trainer::new(cfg, tc).unwrap();
        for _ in 0..3 {
            a.step(&data).unwrap();
        }
        let mut buf = Vec::new();
        Checkpoint::from_trainer(&a).write_to(&mut buf).unwrap();
        let mut b = Checkpoint::read_from(buf.as_slice()).unwrap().into_trainer(None).unwrap();
        let la = a.step(&data).unwrap();
        let lb = b.step(&data).unwrap();
        assert_eq!(la.total.to_bits(), lb.total.to_bits());
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let ck = Checkpoint::from_model(&Gazeformer::init(ModelConfig::tiny(), 0).unwrap());
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        assert!(Checkpoint::read_from(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'Q';
        assert!(matches!(Checkpoint::read_from(bad.as_slice()), Err(Error::Format { .. })));
    }
}
