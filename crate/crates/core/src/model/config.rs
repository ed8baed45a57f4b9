use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Duration normalizer: regressed durations are `t / T_MAX_MS`.
pub const T_MAX_MS: f64 = 5000.0;

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Variant {
    /// Gaussian regression of location and duration.
    #[serde(rename = "full")]
    #[value(name = "full")]
    Full,
    /// No duration heads; durations are reported as 0.
    #[serde(rename = "noDur")]
    #[value(name = "noDur")]
    NoDur,
    /// Location predicted as a distribution over grid patches.
    #[serde(rename = "noReg")]
    #[value(name = "noReg")]
    NoReg,
    /// Target embeddings come from the seeded hash provider.
    #[serde(rename = "randEmbed", alias = "randomTargetEmbed")]
    #[value(name = "randEmbed")]
    RandomTargetEmbed,
}

impl Variant {
    pub fn predicts_duration(self) -> bool {
        !matches!(self, Variant::NoDur)
    }

    pub fn regresses_location(self) -> bool {
        !matches!(self, Variant::NoReg)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoDur => "noDur",
            Variant::NoReg => "noReg",
            Variant::RandomTargetEmbed => "randEmbed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Hidden width.
    pub d: usize,
    pub n_enc: usize,
    pub n_dec: usize,
    pub heads: usize,
    /// Maximum scanpath length, initial fixation included.
    pub max_len: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    /// Raw image-feature channels.
    pub channels: usize,
    pub d_text: usize,
    /// Feed-forward hidden width.
    pub ffn: usize,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 512,
            n_enc: 6,
            n_dec: 6,
            heads: 8,
            max_len: 7,
            grid_h: 20,
            grid_w: 32,
            channels: 2048,
            d_text: 768,
            ffn: 512,
            variant: Variant::Full,
        }
    }
}

impl ModelConfig {
    /// Small configuration used for gradient checks and toy training.
    pub fn tiny() -> Self {
        Self {
            d: 16,
            n_enc: 1,
            n_dec: 1,
            heads: 2,
            max_len: 3,
            grid_h: 2,
            grid_w: 3,
            channels: 8,
            d_text: 8,
            ffn: 16,
            variant: Variant::Full,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn patches(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.heads == 0 || !self.d.is_multiple_of(self.heads) {
            return fail(format!("d={} must be divisible by heads={}", self.d, self.heads));
        }
        if !self.d.is_multiple_of(4) {
            return fail(format!("d={} must be divisible by 4 for the 2D positional encoding", self.d));
        }
        if self.max_len == 0 {
            return fail("max_len must be at least 1".into());
        }
        if self.grid_h == 0 || self.grid_w == 0 || self.channels == 0 || self.d_text == 0 || self.ffn == 0 {
            return fail("grid, channel, text and feed-forward sizes must be positive".into());
        }
        Ok(())
    }
}
