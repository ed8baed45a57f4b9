//! Goal-directed scanpath prediction with a transformer encoder and a
//! parallel fixation-query decoder, together with the usual scanpath
//! similarity metrics and a leave-one-category-out evaluation protocol.
//!
//! Image and target features come from a [`data::FeatureProvider`]: either
//! precomputed feature files or deterministic synthetic features.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod hashing;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use model::{Gazeformer, ModelConfig, Scanpath, Variant};
