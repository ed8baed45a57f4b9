//! The `gazeformer` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 bad input data,
//! 4 failure inside the numerical pipeline.

mod commands;
pub mod manifest;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::DecodeMode;
use crate::model::Variant;

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gazeformer", version, about = "Goal-directed scanpath prediction and evaluation")]
pub struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a checkpoint, loss curve and manifest.
    Train(TrainArgs),
    /// Write leave-one-category-out train/test datasets.
    Split(SplitArgs),
    /// Predict scanpaths for a dataset and score them against its humans.
    Eval(EvalArgs),
    /// Predict scanpaths for one image–target pair.
    Predict(PredictArgs),
    /// Time parallel and sequential decoding on one image–target pair.
    Bench(BenchArgs),
    /// Generate a synthetic planted-blob dataset.
    Synth(SynthArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FeatureSource {
    /// Precomputed `<image_id>.gzft` files.
    Files,
    /// Deterministic planted-blob features.
    Synthetic,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    pub features: FeatureSource,
    /// Directory of feature files (with `--features files`).
    #[arg(long)]
    pub feature_dir: Option<PathBuf>,
    /// JSON table of target embeddings (`{"name": [..], ..}`).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Hash-embed names missing from the embedding table instead of failing.
    #[arg(long)]
    pub hash_fallback: bool,
    /// Seed for synthetic features and hash embeddings.
    #[arg(long, default_value_t = 0)]
    pub feature_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset JSON.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// TOML with `[model]` and `[train]` tables.
    #[arg(long, env = "GAZEFORMER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Text file listing the image ids to train on, one per line.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Continue from a checkpoint that carries optimizer state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Category to hold out.
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub leave_out: Option<String>,
    /// Write one split per category into `<out-dir>/<category>/`.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset JSON with the human scanpaths.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Directory of `.gzlb` label grids for the semantic metrics.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path; the CSV goes next to it unless `--csv` is given.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write the predicted scanpaths here.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Worker threads for scoring.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Decode with ε = 0.
    #[arg(long)]
    pub deterministic: bool,
    /// Score deterministic predictions against themselves.
    #[arg(long)]
    pub self_test: bool,
    /// Text file listing the image ids to evaluate, one per line.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long, default_value_t = crate::metrics::cluster::DEFAULT_BANDWIDTH)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = crate::metrics::saliency::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = crate::metrics::strings::DEFAULT_BIN_MS)]
    pub bin_ms: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["image_features", "synthetic"]))]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Feature file for the image.
    #[arg(long)]
    pub image_features: Option<PathBuf>,
    /// Image id for synthetic features.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, default_value_t = 1680.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1050.0)]
    pub height: f64,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub hash_fallback: bool,
    #[arg(long, default_value_t = 0)]
    pub feature_seed: u64,
    /// Scanpath JSON output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchModeArg {
    Parallel,
    Autoregressive,
    Both,
}

impl BenchModeArg {
    pub fn modes(self) -> Vec<DecodeMode> {
        match self {
            BenchModeArg::Parallel => vec![DecodeMode::Parallel],
            BenchModeArg::Autoregressive => vec![DecodeMode::Autoregressive],
            BenchModeArg::Both => vec![DecodeMode::Parallel, DecodeMode::Autoregressive],
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("model").required(true).args(["checkpoint", "config"]))]
pub struct BenchArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Benchmark freshly initialized weights for this config instead.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: BenchModeArg,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    /// Forced scanpath lengths (default: 1 through the model maximum).
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<usize>,
    #[arg(long, default_value = "bench_0000")]
    pub synthetic: String,
    #[arg(long, default_value = "cup")]
    pub target: String,
    #[arg(long, default_value_t = 0)]
    pub feature_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub count: usize,
    #[arg(long, value_delimiter = ',', default_value = "cup,fork,knife,bowl")]
    pub targets: Vec<String>,
    #[arg(long, env = "GAZEFORMER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Must match `--feature-seed` of later commands.
    #[arg(long, default_value_t = 0)]
    pub feature_seed: u64,
    #[arg(long, default_value_t = 1680.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1050.0)]
    pub height: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fail unless the rerun reproduces every recorded output byte for byte.
    #[arg(long)]
    pub check: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_target(false)
        .try_init();
    if let Some(n) = cli.threads {
        // Fails harmlessly if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let recorded: Vec<String> = raw.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    match commands::dispatch(&cli, &recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
