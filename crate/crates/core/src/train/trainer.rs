//! Minibatch training loop.
//!
//! Batch composition and noise depend only on `(seed, step)`: epoch `e`
//! visits the samples in a permutation seeded by `(seed, e)` and the noise
//! for step `s` is drawn from a stream seeded by `(seed, s)`. A run resumed
//! from a checkpoint therefore continues exactly as if never interrupted.
//! Per-sample graphs may run on several threads; their gradients are summed
//! in batch order, so results do not depend on the thread count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::{optimizer_step, AdamState};
use super::config::TrainConfig;
use super::loss::{sample_loss, EpsBlock};
use crate::data::{pad_scanpath, Dataset, FeatureProvider, PaddedSample};
use crate::error::{Error, Result};
use crate::hashing::{hash_parts, mix};
use crate::model::{FeatureBundle, ModelConfig, ModelWeights};
use crate::tensor::{Graph, Tensor};

/// Padded targets plus an index into the shared bundle table.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub bundle: usize,
    pub gt: PaddedSample,
}

/// Everything the loop needs, with features loaded once per image–target pair.
#[derive(Clone, Debug)]
pub struct TrainData {
    pub bundles: Vec<FeatureBundle>,
    pub samples: Vec<TrainSample>,
}

impl TrainData {
    pub fn build(ds: &Dataset, provider: &dyn FeatureProvider, cfg: &ModelConfig) -> Result<Self> {
        let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut bundles = Vec::new();
        let mut samples = Vec::with_capacity(ds.len());
        for s in &ds.samples {
            let key = (s.image_id.clone(), s.task.clone());
            let bundle = match index.get(&key) {
                Some(&i) => i,
                None => {
                    bundles.push(provider.bundle(&s.image_id, &s.task)?);
                    index.insert(key, bundles.len() - 1);
                    bundles.len() - 1
                }
            };
            samples.push(TrainSample {
                bundle,
                gt: pad_scanpath(s, cfg.max_len),
            });
        }
        Ok(Self { bundles, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Batch-mean losses for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLoss {
    pub step: u64,
    pub loss_xyt: f64,
    pub loss_val: f64,
    pub total: f64,
}

pub struct Trainer {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub weights: ModelWeights,
    pub optimizer: AdamState,
    /// Completed updates.
    pub step: u64,
}

fn stream_seed(seed: u64, kind: &str, index: u64) -> u64 {
    mix(hash_parts(&[kind], seed) ^ mix(index))
}

impl Trainer {
    /// Fresh weights initialized from the training seed.
    pub fn new(model_config: ModelConfig, train_config: TrainConfig) -> Result<Self> {
        train_config.validate()?;
        let weights = ModelWeights::init(&model_config, train_config.seed)?;
        let optimizer = AdamState::new(&weights);
        Ok(Self {
            model_config,
            train_config,
            weights,
            optimizer,
            step: 0,
        })
    }

    /// Sample indices for update number `step` (0-based).
    pub fn batch_indices(&self, n: usize, step: u64) -> Vec<usize> {
        let m = self.train_config.batch_size as u64;
        let n64 = n as u64;
        let mut out = Vec::with_capacity(m as usize);
        let mut cached: Option<(u64, Vec<usize>)> = None;
        for pos in step * m..(step + 1) * m {
            let (epoch, offset) = (pos / n64, (pos % n64) as usize);
            if cached.as_ref().is_none_or(|(e, _)| *e != epoch) {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut ChaCha8Rng::seed_from_u64(stream_seed(self.train_config.seed, "epoch", epoch)));
                cached = Some((epoch, perm));
            }
            out.push(cached.as_ref().expect("permutation cached above").1[offset]);
        }
        out
    }

    /// Noise blocks for the `batch_len` samples of update `step`.
    pub fn step_noise(&self, batch_len: usize, step: u64) -> Vec<EpsBlock> {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(self.train_config.seed, "noise", step));
        (0..batch_len)
            .map(|_| EpsBlock::sample(self.model_config.max_len, &mut rng))
            .collect()
    }

    /// Batch loss and parameter gradients without updating anything.
    pub fn loss_and_gradients(
        &self,
        data: &TrainData,
        indices: &[usize],
        noise: &[EpsBlock],
    ) -> Result<(StepLoss, Vec<Tensor>)> {
        if indices.is_empty() || indices.len() != noise.len() {
            return Err(Error::Contract("batch needs one noise block per sample".into()));
        }
        let per_sample: Vec<Result<(f64, f64, f64, Vec<Tensor>)>> = indices
            .par_iter()
            .zip(noise.par_iter())
            .map(|(&i, eps)| {
                let sample = &data.samples[i];
                let mut g = Graph::new();
                let p = self.weights.bind(&mut g, true);
                let l = sample_loss(&mut g, &p, &self.model_config, &data.bundles[sample.bundle], &sample.gt, eps)?;
                let grads = g.backward(l.total)?;
                let per_param = p
                    .ids()
                    .iter()
                    .zip(self.weights.tensors())
                    .map(|(&id, w)| grads.get(id).unwrap_or_else(|| Tensor::zeros(w.shape())))
                    .collect();
                Ok((
                    g.value(l.xyt).item()?,
                    g.value(l.val).item()?,
                    g.value(l.total).item()?,
                    per_param,
                ))
            })
            .collect();

        let m = indices.len() as f64;
        let mut sums = (0.0, 0.0, 0.0);
        let mut acc: Vec<Vec<f64>> = self.weights.tensors().iter().map(|t| vec![0.0; t.numel()]).collect();
        for r in per_sample {
            let (xyt, val, total, grads) = r?;
            sums.0 += xyt;
            sums.1 += val;
            sums.2 += total;
            for (a, g) in acc.iter_mut().zip(&grads) {
                for (x, y) in a.iter_mut().zip(g.data()) {
                    *x += y;
                }
            }
        }
        let grads = acc
            .into_iter()
            .zip(self.weights.tensors())
            .map(|(a, w)| Tensor::from_parts(w.shape().to_vec(), a.into_iter().map(|v| v / m).collect()))
            .collect();
        let loss = StepLoss {
            step: self.step,
            loss_xyt: sums.0 / m,
            loss_val: sums.1 / m,
            total: sums.2 / m,
        };
        if !loss.total.is_finite() {
            return Err(Error::NonFinite { index: self.step as usize });
        }
        Ok((loss, grads))
    }

    /// One optimizer update. Returns the loss measured before the update.
    pub fn step(&mut self, data: &TrainData) -> Result<StepLoss> {
        if data.is_empty() {
            return Err(Error::Contract("training set is empty".into()));
        }
        let indices = self.batch_indices(data.len(), self.step);
        let noise = self.step_noise(indices.len(), self.step);
        let (loss, grads) = self.loss_and_gradients(data, &indices, &noise)?;
        optimizer_step(&mut self.weights, &grads, &mut self.optimizer, &self.train_config)?;
        self.step += 1;
        Ok(loss)
    }
}

/// Runs until `train_config.steps` updates have been applied in total,
/// calling `observer` after each one.
pub fn train<F>(trainer: &mut Trainer, data: &TrainData, mut observer: F) -> Result<Vec<StepLoss>>
where
    F: FnMut(&StepLoss, &Trainer) -> Result<()>,
{
    let mut curve = Vec::new();
    while trainer.step < trainer.train_config.steps {
        let loss = trainer.step(data)?;
        let every = trainer.train_config.log_every;
        if every > 0 && (loss.step % every == 0 || trainer.step == trainer.train_config.steps) {
            log::info!(
                "step {:>6}  xyt {:.5}  val {:.5}  total {:.5}",
                loss.step,
                loss.loss_xyt,
                loss.loss_val,
                loss.total
            );
        }
        observer(&loss, trainer)?;
        curve.push(loss);
    }
    Ok(curve)
}

/// Writes the loss curve as `step,loss_xyt,loss_val,total`.
pub fn write_loss_csv<W: Write>(w: W, curve: &[StepLoss]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "loss_xyt", "loss_val", "total"])?;
    for l in curve {
        out.write_record([
            l.step.to_string(),
            l.loss_xyt.to_string(),
            l.loss_val.to_string(),
            l.total.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::format("loss csv", e.to_string()))?;
    Ok(())
}
