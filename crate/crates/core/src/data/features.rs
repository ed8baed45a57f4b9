//! Image-feature files and feature providers.
//!
//! Feature file layout (little-endian): `b"GZFT"`, `u32` version, `u32` id
//! length, id bytes, `u32` C, `u32` h, `u32` w, then `C·h·w` `f32` values
//! row-major (channel-major).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::binio::{read_f32s, read_string, write_f32s, write_string};
use super::synthetic::synthetic_features;
use crate::error::{Error, Result};
use crate::model::layers::embed_target;
use crate::model::{FeatureBundle, ModelConfig, TargetEmbedder};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"GZFT";
const VERSION: u32 = 1;

pub fn write_feature_file<W: Write>(mut w: W, image_id: &str, features: &Tensor) -> Result<()> {
    let io = |e| Error::format("feature file", format!("{e}"));
    let [c, h, wd] = features.shape() else {
        return Err(Error::Dimension(format!("features must be C×h×w, got {:?}", features.shape())));
    };
    w.write_all(MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(VERSION).map_err(io)?;
    write_string(&mut w, image_id).map_err(io)?;
    for d in [c, h, wd] {
        w.write_u32::<LittleEndian>(*d as u32).map_err(io)?;
    }
    write_f32s(&mut w, features.data()).map_err(io)
}

pub fn read_feature_file<R: Read>(mut r: R) -> Result<(String, Tensor)> {
    let io = |e| Error::format("feature file", format!("{e}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::format("feature file", "bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(io)?;
    if version != VERSION {
        return Err(Error::format("feature file", format!("unsupported version {version}")));
    }
    let id = read_string(&mut r).map_err(io)?;
    let c = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let h = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let w = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let data = read_f32s(&mut r, c * h * w).map_err(io)?;
    Ok((id, Tensor::new(vec![c, h, w], data)?))
}

pub fn load_feature_file(path: &Path) -> Result<(String, Tensor)> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_feature_file(std::io::BufReader::new(f))
}

pub fn save_feature_file(path: &Path, image_id: &str, features: &Tensor) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_feature_file(std::io::BufWriter::new(f), image_id, features)
}

/// Supplies frozen model inputs for an image–target pair.
pub trait FeatureProvider: Send + Sync {
    fn bundle(&self, image_id: &str, target: &str) -> Result<FeatureBundle>;
}

/// Deterministic planted-blob features.
#[derive(Clone, Debug)]
pub struct SyntheticProvider {
    pub config: ModelConfig,
    pub seed: u64,
}

impl FeatureProvider for SyntheticProvider {
    fn bundle(&self, image_id: &str, target: &str) -> Result<FeatureBundle> {
        if target.trim().is_empty() {
            return Err(Error::Contract("target name must be non-empty".into()));
        }
        Ok(synthetic_features(image_id, target, &self.config, self.seed).bundle)
    }
}

/// Features from `<dir>/<image_id>.gzft`, target vectors from an embedder.
#[derive(Clone, Debug)]
pub struct FileProvider {
    pub dir: PathBuf,
    pub embedder: TargetEmbedder,
    pub config: ModelConfig,
}

impl FileProvider {
    pub fn path_for(&self, image_id: &str) -> PathBuf {
        self.dir.join(format!("{image_id}.gzft"))
    }
}

impl FeatureProvider for FileProvider {
    fn bundle(&self, image_id: &str, target: &str) -> Result<FeatureBundle> {
        let (stored_id, image_features) = load_feature_file(&self.path_for(image_id))?;
        if stored_id != image_id {
            return Err(Error::format(
                "feature file",
                format!("{} holds features for {stored_id:?}", self.path_for(image_id).display()),
            ));
        }
        let target_embedding = embed_target(target, &self.embedder, &self.config)?;
        Ok(FeatureBundle {
            image_features,
            target_embedding,
            image_id: image_id.to_string(),
            target_name: target.to_string(),
        })
    }
}

/// Image features from a single explicit tensor.
pub fn bundle_from_features(
    image_id: &str,
    image_features: Tensor,
    target: &str,
    embedder: &TargetEmbedder,
    cfg: &ModelConfig,
) -> Result<FeatureBundle> {
    Ok(FeatureBundle {
        image_features,
        target_embedding: embed_target(target, embedder, cfg)?,
        image_id: image_id.to_string(),
        target_name: target.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_file_round_trip_is_bit_exact() {
        let t = Tensor::new(vec![2, 2, 3], (0..12).map(|i| (i as f32 * 0.37 - 1.0) as f64).collect()).unwrap();
        let mut buf = Vec::new();
        write_feature_file(&mut buf, "img 1", &t).unwrap();
        let (id, back) = read_feature_file(buf.as_slice()).unwrap();
        assert_eq!(id, "img 1");
        assert_eq!(back, t);
        assert!(read_feature_file(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn file_provider_reads_directory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::tiny();
        let t = Tensor::zeros(&[cfg.channels, cfg.grid_h, cfg.grid_w]);
        save_feature_file(&dir.path().join("a.jpg.gzft"), "a.jpg", &t).unwrap();
        let p = FileProvider {
            dir: dir.path().to_path_buf(),
            embedder: TargetEmbedder::hash(cfg.d_text, 0),
            config: cfg,
        };
        let b = p.bundle("a.jpg", "cup").unwrap();
        assert_eq!(b.image_features, t);
        assert!(matches!(p.bundle("missing", "cup"), Err(Error::Io { .. })));
    }
}
