use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One fixation in pixel/millisecond units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
    /// Duration in milliseconds.
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scanpath {
    pub image_id: String,
    /// Target category searched for.
    pub task: String,
    /// Subject identifier, or `"model"` for predictions.
    pub subject: String,
    pub width: f64,
    pub height: f64,
    pub fixations: Vec<Fixation>,
}

impl Scanpath {
    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.fixations.iter().map(|f| (f.x, f.y)).collect()
    }
}

/// Frozen inputs for one image–target pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBundle {
    /// `C×h×w`.
    pub image_features: Tensor,
    /// `d_text`.
    pub target_embedding: Tensor,
    pub image_id: String,
    pub target_name: String,
}

/// Where the scanpath starts, in normalized `[0, 1]` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialFixation {
    pub x: f64,
    pub y: f64,
}

impl Default for InitialFixation {
    fn default() -> Self {
        Self { x: 0.5, y: 0.5 }
    }
}

impl InitialFixation {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Contract(format!("initial fixation ({x}, {y}) outside [0,1]²")));
        }
        Ok(Self { x, y })
    }
}

/// Per-step head outputs for one image–target pair. Location and duration
/// are in normalized units; `lambda_*` are log-variances.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FixationOutput {
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub mu_t: Vec<f64>,
    pub lambda_x: Vec<f64>,
    pub lambda_y: Vec<f64>,
    pub lambda_t: Vec<f64>,
    pub valid_prob: Vec<f64>,
    /// Patch distributions (`steps × h·w`) for the classification variant.
    pub patch_probs: Option<Vec<Vec<f64>>>,
    /// Grid shape `(h, w)` the patch distributions refer to.
    pub grid: (usize, usize),
}

impl FixationOutput {
    pub fn steps(&self) -> usize {
        self.valid_prob.len()
    }
}
