//! The scanpath model: image encoder, target joint embedding, parallel
//! fixation-query decoder and per-step prediction heads.

pub mod config;
pub mod layers;
pub mod posenc;
pub mod sampling;
pub mod target;
pub mod types;
pub mod weights;

pub use config::{ModelConfig, Variant, T_MAX_MS};
pub use sampling::{SampleFrame, SampleStatus};
pub use target::TargetEmbedder;
pub use types::{FeatureBundle, Fixation, FixationOutput, InitialFixation, Scanpath};
pub use weights::ModelWeights;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor};
use layers::{decode_with_offsets, encode_image, joint_embed, predict_heads};
use posenc::encode_normalized;
use sampling::{denormalize, sample_scanpath, sample_step};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Use ε = 0 (means) instead of sampling.
    pub deterministic: bool,
    pub init: InitialFixation,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            n_samples: 10,
            seed: 0,
            deterministic: false,
            init: InitialFixation::default(),
        }
    }
}

/// A configured model with fixed weights. Immutable during inference, so
/// `&Gazeformer` can be shared across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Gazeformer {
    config: ModelConfig,
    weights: ModelWeights,
}

impl Gazeformer {
    pub fn new(config: ModelConfig, weights: ModelWeights) -> Result<Self> {
        config.validate()?;
        weights.check_layout(&config)?;
        Ok(Self { config, weights })
    }

    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let weights = ModelWeights::init(&config, seed)?;
        Self::new(config, weights)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn into_parts(self) -> (ModelConfig, ModelWeights) {
        (self.config, self.weights)
    }

    /// One forward pass producing head outputs for all `L` steps.
    pub fn forward(&self, bundle: &FeatureBundle, init: InitialFixation) -> Result<FixationOutput> {
        let mut g = Graph::new();
        let p = self.weights.bind(&mut g, false);
        let nodes = layers::forward(&mut g, &p, &self.config, bundle, init)?;
        Ok(nodes.heads.read(&g, &self.config))
    }

    /// Samples `n_samples` scanpaths from a single forward pass.
    pub fn predict_with_status(
        &self,
        bundle: &FeatureBundle,
        frame: &SampleFrame,
        opts: &PredictOptions,
    ) -> Result<Vec<(Scanpath, SampleStatus)>> {
        if opts.n_samples == 0 {
            return Err(Error::Contract("n_samples must be at least 1".into()));
        }
        let out = self.forward(bundle, opts.init)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        Ok((0..opts.n_samples)
            .map(|_| sample_scanpath(&out, &mut rng, frame, opts.deterministic, opts.init))
            .collect())
    }

    pub fn predict(&self, bundle: &FeatureBundle, frame: &SampleFrame, opts: &PredictOptions) -> Result<Vec<Scanpath>> {
        let samples = self.predict_with_status(bundle, frame, opts)?;
        let empty = samples.iter().filter(|(_, s)| *s == SampleStatus::EmptyPrediction).count();
        if empty > 0 {
            log::warn!(
                "{empty} of {} samples for {}/{} terminated at step 0; emitted the initial fixation",
                samples.len(),
                bundle.image_id,
                bundle.target_name
            );
        }
        Ok(samples.into_iter().map(|(s, _)| s).collect())
    }

    /// Parallel decoding with the termination rule replaced by a fixed
    /// length. Used to time one-pass decoding at every scanpath length.
    pub fn predict_forced_length(
        &self,
        bundle: &FeatureBundle,
        frame: &SampleFrame,
        length: usize,
        opts: &PredictOptions,
    ) -> Result<Scanpath> {
        self.check_forced(length)?;
        let out = self.forward(bundle, opts.init)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let fixations = (0..length)
            .map(|i| {
                let (x, y, t) = sample_step(&out, i, &mut rng, opts.deterministic);
                denormalize(x, y, t, frame)
            })
            .collect();
        Ok(model_scanpath(frame, fixations))
    }

    fn check_forced(&self, length: usize) -> Result<()> {
        if length == 0 || length > self.config.max_len {
            return Err(Error::Contract(format!(
                "forced length {length} outside 1..={}",
                self.config.max_len
            )));
        }
        Ok(())
    }

    /// Sequential reference decoder for latency comparisons.
    ///
    /// Step `k` re-runs the whole network on the image–target pair with the
    /// first `k + 1` queries, where query `j ≥ 1` carries the location code
    /// of the fixation emitted at step `j - 1`, and emits fixation `k` from
    /// the last row. Nothing is cached between steps. Stops at the first
    /// padding step, or after exactly `forced_length` fixations when given.
    pub fn predict_autoregressive(
        &self,
        bundle: &FeatureBundle,
        frame: &SampleFrame,
        opts: &PredictOptions,
        forced_length: Option<usize>,
    ) -> Result<Scanpath> {
        if let Some(k) = forced_length {
            self.check_forced(k)?;
        }
        layers::check_bundle(bundle, &self.config)?;
        let cfg = &self.config;
        let limit = forced_length.unwrap_or(cfg.max_len);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut codes = vec![encode_normalized(opts.init.x, opts.init.y, cfg.grid_h, cfg.grid_w, cfg.d)?];
        let mut fixations = Vec::new();

        for step in 0..limit {
            let offsets = Tensor::matrix(step + 1, cfg.d, codes.concat())?;
            let mut g = Graph::new();
            let p = self.weights.bind(&mut g, false);
            let f_image = encode_image(&mut g, &p, cfg, &bundle.image_features)?;
            let f_joint = joint_embed(&mut g, &p, cfg, f_image, &bundle.target_embedding)?;
            let f_dec = decode_with_offsets(&mut g, &p, cfg, f_joint, &offsets)?;
            let out = predict_heads(&mut g, &p, cfg, f_dec)?.read(&g, cfg);

            if forced_length.is_none() && out.valid_prob[step] < 0.5 {
                break;
            }
            let (x, y, t) = sample_step(&out, step, &mut rng, opts.deterministic);
            let fixation = denormalize(x, y, t, frame);
            codes.push(encode_normalized(
                fixation.x / frame.width,
                fixation.y / frame.height,
                cfg.grid_h,
                cfg.grid_w,
                cfg.d,
            )?);
            fixations.push(fixation);
        }
        if fixations.is_empty() {
            fixations.push(denormalize(opts.init.x, opts.init.y, 0.0, frame));
        }
        Ok(model_scanpath(frame, fixations))
    }
}

fn model_scanpath(frame: &SampleFrame, fixations: Vec<Fixation>) -> Scanpath {
    Scanpath {
        image_id: frame.image_id.clone(),
        task: frame.task.clone(),
        subject: "model".into(),
        width: frame.width,
        height: frame.height,
        fixations,
    }
}
