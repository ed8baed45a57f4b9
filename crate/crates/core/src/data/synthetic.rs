//! Deterministic stand-in features with a learnable signal.
//!
//! The image grid is hash-keyed noise. A "blob" whose channel pattern is a
//! copy of the target embedding is planted at a hash-chosen patch, so a
//! model that matches target semantics against image features can find it.
//! Synthetic scanpaths start at the image center and jump to the blob.

use super::dataset::Dataset;
use crate::hashing::{hash_parts, SplitMix};
use crate::model::target::hash_embedding;
use crate::model::{FeatureBundle, Fixation, ModelConfig, Scanpath};
use crate::tensor::Tensor;

const NOISE_AMPLITUDE: f64 = 0.5;
const BLOB_AMPLITUDE: f64 = 1.5;

/// Grid cell holding the planted blob.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlobLocation {
    pub row: usize,
    pub col: usize,
}

impl BlobLocation {
    /// Patch center in normalized image coordinates.
    pub fn normalized_center(&self, cfg: &ModelConfig) -> (f64, f64) {
        (
            (self.col as f64 + 0.5) / cfg.grid_w as f64,
            (self.row as f64 + 0.5) / cfg.grid_h as f64,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticBundle {
    pub bundle: FeatureBundle,
    pub blob: BlobLocation,
}

pub fn blob_location(image_id: &str, target: &str, cfg: &ModelConfig, seed: u64) -> BlobLocation {
    let mut s = SplitMix::new(hash_parts(&["blob", image_id, target], seed));
    BlobLocation {
        row: s.below(cfg.grid_h as u64) as usize,
        col: s.below(cfg.grid_w as u64) as usize,
    }
}

fn to_f32(v: f64) -> f64 {
    v as f32 as f64
}

pub fn synthetic_features(image_id: &str, target: &str, cfg: &ModelConfig, seed: u64) -> SyntheticBundle {
    let (c, h, w) = (cfg.channels, cfg.grid_h, cfg.grid_w);
    let mut noise = SplitMix::new(hash_parts(&["image", image_id], seed));
    let mut data: Vec<f64> = (0..c * h * w).map(|_| NOISE_AMPLITUDE * noise.next_signed()).collect();

    let embedding = hash_embedding(target, cfg.d_text, seed);
    let blob = blob_location(image_id, target, cfg, seed);
    let neighbors = [(0i64, 0i64, 1.0), (-1, 0, 0.5), (1, 0, 0.5), (0, -1, 0.5), (0, 1, 0.5)];
    for (dr, dc, weight) in neighbors {
        let (r, col) = (blob.row as i64 + dr, blob.col as i64 + dc);
        if r < 0 || col < 0 || r >= h as i64 || col >= w as i64 {
            continue;
        }
        let patch = r as usize * w + col as usize;
        for ch in 0..c {
            data[ch * h * w + patch] += weight * BLOB_AMPLITUDE * embedding[ch % cfg.d_text];
        }
    }

    let bundle = FeatureBundle {
        image_features: Tensor::from_parts(vec![c, h, w], data.into_iter().map(to_f32).collect()),
        target_embedding: Tensor::vector(embedding.into_iter().map(to_f32).collect()),
        image_id: image_id.to_string(),
        target_name: target.to_string(),
    };
    SyntheticBundle { bundle, blob }
}

/// One scanpath per image over `n` images, cycling through `targets`.
///
/// Fixation 0 is the image center, fixation 1 lands on the blob center and
/// any further fixations are small refixations around it. Lengths fall in
/// `2..=max_len`.
pub fn synthetic_dataset(
    n: usize,
    targets: &[&str],
    cfg: &ModelConfig,
    (width, height): (f64, f64),
    seed: u64,
) -> Dataset {
    assert!(!targets.is_empty(), "at least one target required");
    let samples = (0..n)
        .map(|i| {
            let image_id = format!("synth_{i:04}");
            let target = targets[i % targets.len()];
            let blob = blob_location(&image_id, target, cfg, seed);
            let (bx, by) = blob.normalized_center(cfg);
            let mut s = SplitMix::new(hash_parts(&["path", &image_id, target], seed));
            let len = if cfg.max_len < 2 {
                1
            } else {
                2 + s.below(cfg.max_len as u64 - 1) as usize
            };
            let mut duration = || 150.0 + (s.below(250) as f64);
            let mut fixations = vec![Fixation {
                x: 0.5 * width,
                y: 0.5 * height,
                t: duration(),
            }];
            let jitter_x = 0.2 * width / cfg.grid_w as f64;
            let jitter_y = 0.2 * height / cfg.grid_h as f64;
            for k in 1..len {
                let (dx, dy) = match k {
                    1 => (0.0, 0.0),
                    k if k % 2 == 0 => (jitter_x, -jitter_y),
                    _ => (-jitter_x, jitter_y),
                };
                fixations.push(Fixation {
                    x: (bx * width + dx).clamp(0.0, width),
                    y: (by * height + dy).clamp(0.0, height),
                    t: duration(),
                });
            }
            Scanpath {
                image_id,
                task: target.to_string(),
                subject: "synthetic".into(),
                width,
                height,
                fixations,
            }
        })
        .collect();
    Dataset::from_scanpaths(samples).expect("synthetic scanpaths are valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            channels: 32,
            grid_h: 4,
            grid_w: 8,
            d_text: 16,
            ..ModelConfig::tiny()
        }
    }

    #[test]
    fn same_inputs_same_bundle() {
        let a = synthetic_features("img1", "cup", &cfg(), 5);
        let b = synthetic_features("img1", "cup", &cfg(), 5);
        assert_eq!(a, b);
    }

    #[test]
    fn different_images_differ_almost_everywhere() {
        let a = synthetic_features("img1", "cup", &cfg(), 5).bundle.image_features;
        let b = synthetic_features("img2", "cup", &cfg(), 5).bundle.image_features;
        let differing = a.data().iter().zip(b.data()).filter(|(x, y)| x != y).count();
        assert!(differing as f64 > 0.99 * a.numel() as f64);
    }

    #[test]
    fn blob_is_recoverable_from_features() {
        let cfg = cfg();
        for i in 0..20 {
            let id = format!("im{i}");
            let sb = synthetic_features(&id, "fork", &cfg, 1);
            let emb = sb.bundle.target_embedding.data();
            let hw = cfg.patches();
            // The patch whose channel vector best matches the embedding is the blob.
            let best = (0..hw)
                .max_by(|&p, &q| {
                    let score = |patch: usize| -> f64 {
                        (0..cfg.channels)
                            .map(|ch| sb.bundle.image_features.data()[ch * hw + patch] * emb[ch % cfg.d_text])
                            .sum()
                    };
                    score(p).total_cmp(&score(q))
                })
                .unwrap();
            assert_eq!(best, sb.blob.row * cfg.grid_w + sb.blob.col);
            assert_eq!(sb.blob, blob_location(&id, "fork", &cfg, 1));
        }
    }

    #[test]
    fn synthetic_dataset_shape() {
        let cfg = ModelConfig { max_len: 7, ..cfg() };
        let ds = synthetic_dataset(12, &["cup", "fork", "knife"], &cfg, (1680.0, 1050.0), 0);
        assert_eq!(ds.len(), 12);
        assert_eq!(ds.categories.len(), 3);
        for s in &ds.samples {
            assert!((2..=7).contains(&s.len()));
            assert_eq!((s.fixations[0].x, s.fixations[0].y), (840.0, 525.0));
            let blob = blob_location(&s.image_id, &s.task, &cfg, 0);
            let (bx, by) = blob.normalized_center(&cfg);
            assert_eq!((s.fixations[1].x, s.fixations[1].y), (bx * 1680.0, by * 1050.0));
        }
    }
}
