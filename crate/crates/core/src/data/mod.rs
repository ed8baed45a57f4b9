//! Dataset ingestion, feature provision, padding and ZeroGaze splits.

pub(crate) mod binio;
pub mod dataset;
pub mod features;
pub mod labels;
pub mod padding;
pub mod split;
pub mod synthetic;

pub use dataset::{load_dataset, save_dataset, Dataset, ImageInfo, Record};
pub use features::{FeatureProvider, FileProvider, SyntheticProvider};
pub use labels::{fixations_to_labels, load_label_dir, LabelGrid};
pub use padding::{pad_scanpath, unpad, PaddedSample};
pub use split::make_zerogaze_split;
pub use synthetic::{synthetic_dataset, synthetic_features, BlobLocation, SyntheticBundle};
