//! Multitask loss, optimizer and training loop.

pub mod adam;
pub mod config;
pub mod loss;
pub mod trainer;

pub use adam::{optimizer_step, AdamState};
pub use config::{RunConfig, TrainConfig};
pub use loss::{loss_val, loss_xyt, sample_loss, total_loss, BatchItem, EpsBlock, SampledNodes};
pub use trainer::{train, write_loss_csv, StepLoss, TrainData, TrainSample, Trainer};
