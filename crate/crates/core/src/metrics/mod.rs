//! Scanpath similarity and saliency metrics.

pub mod alignment;
pub mod cluster;
pub mod evaluate;
pub mod multimatch;
pub mod report;
pub mod saliency;
pub mod strings;

pub use alignment::{edit_distance, needleman_wunsch, sequence_score};
pub use cluster::{cluster_strings, mean_shift, Clustering};
pub use evaluate::{evaluate, pairwise_sum, weighted_mean, EvalConfig, MetricReport};
pub use multimatch::{multimatch, MultiMatch};
pub use saliency::{cc, fixation_map, nss, points_map, FixationMap};
pub use strings::{expand_duration, FixationString, StringSource};
