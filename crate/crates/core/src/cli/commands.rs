use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::manifest::{beside, RunManifest};
use super::{BenchArgs, Cli, Command, EvalArgs, FeatureArgs, FeatureSource, PredictArgs, ReplayArgs, SplitArgs, SynthArgs, TrainArgs};
use crate::bench::{bench_grid, coefficient_of_variation, summarize, write_bench_csv, DecodeMode};
use crate::checkpoint::Checkpoint;
use crate::data::features::{bundle_from_features, load_feature_file};
use crate::data::{
    load_dataset, load_label_dir, make_zerogaze_split, save_dataset, synthetic_dataset, synthetic_features, Dataset,
    FeatureProvider, FileProvider, SyntheticProvider,
};
use crate::error::{Error, Result};
use crate::hashing::hash_parts;
use crate::metrics::{evaluate, EvalConfig};
use crate::model::{Gazeformer, ModelConfig, PredictOptions, SampleFrame, SampleStatus, Scanpath, TargetEmbedder, Variant};
use crate::train::{train, write_loss_csv, RunConfig, TrainData, Trainer};

pub(super) fn dispatch(cli: &Cli, args: &[String]) -> Result<()> {
    let start = Instant::now();
    let (mut manifest, manifest_path) = match &cli.command {
        Command::Train(a) => cmd_train(a, args)?,
        Command::Split(a) => cmd_split(a, args)?,
        Command::Eval(a) => cmd_eval(a, args)?,
        Command::Predict(a) => cmd_predict(a, args)?,
        Command::Bench(a) => cmd_bench(a, args)?,
        Command::Synth(a) => cmd_synth(a, args)?,
        Command::Replay(a) => return cmd_replay(a),
    };
    manifest.wall_clock_secs = start.elapsed().as_secs_f64();
    manifest.save(&manifest_path)?;
    log::info!("wrote {}", manifest_path.display());
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// Image ids from a text file, one per line; blank lines and `#` comments
/// are ignored.
fn read_image_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ids: BTreeSet<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    if ids.is_empty() {
        return Err(Error::format("image list", format!("{} lists no images", path.display())));
    }
    Ok(ids)
}

fn restrict(ds: Dataset, images: Option<&PathBuf>) -> Result<Dataset> {
    match images {
        Some(p) => {
            let ids = read_image_list(p)?;
            let out = ds.restrict_to_images(&ids)?;
            log::info!("restricted to {} of {} images", ids.len(), ds.image_index.len());
            Ok(out)
        }
        None => Ok(ds),
    }
}

/// Target embedder for file-backed or explicit features. The random-embedding
/// variant always uses hashed vectors.
fn embedder(embeddings: Option<&PathBuf>, hash_fallback: bool, seed: u64, cfg: &ModelConfig) -> Result<TargetEmbedder> {
    match (cfg.variant, embeddings) {
        (Variant::RandomTargetEmbed, Some(_)) => Err(Error::Config(
            "--embeddings cannot be combined with the randEmbed variant".into(),
        )),
        (_, Some(path)) => TargetEmbedder::load_table(path, hash_fallback.then_some(seed)),
        (_, None) => Ok(TargetEmbedder::hash(cfg.d_text, seed)),
    }
}

fn provider(args: &FeatureArgs, cfg: &ModelConfig) -> Result<Box<dyn FeatureProvider>> {
    match args.features {
        FeatureSource::Synthetic => {
            if args.feature_dir.is_some() || args.embeddings.is_some() {
                return Err(Error::Config(
                    "--feature-dir and --embeddings require --features files".into(),
                ));
            }
            Ok(Box::new(SyntheticProvider {
                config: cfg.clone(),
                seed: args.feature_seed,
            }))
        }
        FeatureSource::Files => {
            let dir = args
                .feature_dir
                .clone()
                .ok_or_else(|| Error::Config("--features files requires --feature-dir".into()))?;
            Ok(Box::new(FileProvider {
                dir,
                embedder: embedder(args.embeddings.as_ref(), args.hash_fallback, args.feature_seed, cfg)?,
                config: cfg.clone(),
            }))
        }
    }
}

fn feature_inputs(args: &FeatureArgs) -> Vec<PathBuf> {
    args.feature_dir.iter().chain(args.embeddings.iter()).cloned().collect()
}

fn cmd_train(a: &TrainArgs, args: &[String]) -> Result<(RunManifest, PathBuf)> {
    let mut run = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let resumed = match &a.resume {
        Some(p) => Some(Checkpoint::load(p)?),
        None => None,
    };
    if let Some(ck) = &resumed {
        if a.config.is_some() && ck.header.model != run.model {
            return Err(Error::Config("--config model table differs from the --resume checkpoint".into()));
        }
        if a.variant.is_some_and(|v| v != ck.header.model.variant) {
            return Err(Error::Config("--variant conflicts with the --resume checkpoint".into()));
        }
        if ck.optimizer.is_none() {
            return Err(Error::Config("--resume checkpoint carries no optimizer state".into()));
        }
        run.model = ck.header.model.clone();
        if a.config.is_none() {
            if let Some(t) = &ck.header.train {
                run.train = t.clone();
            }
        }
    }
    if let Some(v) = a.variant {
        run.model.variant = v;
    }
    if let Some(s) = a.seed {
        run.train.seed = s;
    }
    if let Some(s) = a.steps {
        run.train.steps = s;
    }
    if let Some(lr) = a.lr {
        run.train.lr = lr;
    }
    if let Some(b) = a.batch_size {
        run.train.batch_size = b;
    }
    run.model.validate()?;
    run.train.validate()?;

    let ds = restrict(load_dataset(&a.data)?, a.images.as_ref())?;
    if ds.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let features = provider(&a.features, &run.model)?;
    let data = TrainData::build(&ds, features.as_ref(), &run.model)?;
    log::info!(
        "training {} on {} samples ({} image–target pairs), variant {}",
        if resumed.is_some() { "resumed" } else { "from scratch" },
        data.len(),
        data.bundles.len(),
        run.model.variant.as_str()
    );

    let mut trainer = match resumed {
        Some(ck) => ck.into_trainer(Some(run.train.clone()))?,
        None => Trainer::new(run.model.clone(), run.train.clone())?,
    };
    create_dir(&a.out)?;
    let mut outputs = Vec::new();
    let every = run.train.checkpoint_every;
    let curve = train(&mut trainer, &data, |_, t| {
        if every > 0 && t.step % every == 0 && t.step < t.train_config.steps {
            let p = a.out.join(format!("checkpoint_step{:06}.gzck", t.step));
            Checkpoint::from_trainer(t).save(&p)?;
            outputs.push(p);
        }
        Ok(())
    })?;

    let ck_path = a.out.join("checkpoint.gzck");
    Checkpoint::from_trainer(&trainer).save(&ck_path)?;
    let loss_path = a.out.join("loss.csv");
    write_loss_csv(create_file(&loss_path)?, &curve)?;
    if let Some(last) = curve.last() {
        log::info!("final loss {:.6} after {} steps", last.total, trainer.step);
    }
    outputs.push(ck_path);
    outputs.push(loss_path);

    let mut m = RunManifest::new("train", args);
    m.config = serde_json::to_value(&run)?;
    m.seed = Some(run.train.seed);
    m.inputs = std::iter::once(a.data.clone())
        .chain(a.config.iter().cloned())
        .chain(a.images.iter().cloned())
        .chain(a.resume.iter().cloned())
        .chain(feature_inputs(&a.features))
        .collect();
    m.outputs = outputs;
    Ok((m, a.out.join("manifest.json")))
}

fn cmd_split(a: &SplitArgs, args: &[String]) -> Result<(RunManifest, PathBuf)> {
    let ds = load_dataset(&a.data)?;
    let held: Vec<(String, PathBuf)> = if a.all {
        ds.categories.iter().map(|c| (c.clone(), a.out_dir.join(c))).collect()
    } else {
        let cat = a.leave_out.clone().expect("clap requires --leave-out without --all");
        vec![(cat, a.out_dir.clone())]
    };
    let mut outputs = Vec::new();
    for (cat, dir) in &held {
        let (train, test) = make_zerogaze_split(&ds, cat)?;
        create_dir(dir)?;
        let (tp, sp) = (dir.join("train.json"), dir.join("test.json"));
        save_dataset(&train, &tp)?;
        save_dataset(&test, &sp)?;
        log::info!("{cat}: {} train / {} test records", train.len(), test.len());
        outputs.extend([tp, sp]);
    }
    create_dir(&a.out_dir)?;
    let mut m = RunManifest::new("split", args);
    m.config = serde_json::json!({
        "held_out": held.iter().map(|(c, _)| c.as_str()).collect::<Vec<_>>(),
    });
    m.inputs = vec![a.data.clone()];
    m.outputs = outputs;
    Ok((m, a.out_dir.join("manifest.json")))
}

/// Seed for one image–target case, independent of evaluation order.
pub fn case_seed(image_id: &str, task: &str, seed: u64) -> u64 {
    hash_parts(&[image_id, task], seed)
}

fn cmd_eval(a: &EvalArgs, args: &[String]) -> Result<(RunManifest, PathBuf)> {
    let model = Checkpoint::load(&a.checkpoint)?.into_model()?;
    let cfg = model.config().clone();
    let human_ds = restrict(load_dataset(&a.data)?, a.images.as_ref())?;
    let features = provider(&a.features, &cfg)?;
    let deterministic = a.deterministic || a.self_test;
    let n_samples = if a.self_test { 1 } else { a.n_samples };
    if n_samples == 0 {
        return Err(Error::Config("--n-samples must be at least 1".into()));
    }

    let cases: BTreeSet<(String, String)> =
        human_ds.samples.iter().map(|s| (s.image_id.clone(), s.task.clone())).collect();
    let cases: Vec<(String, String)> = cases.into_iter().collect();
    log::info!("predicting {n_samples} scanpaths for each of {} cases", cases.len());
    let predicted: Vec<Vec<Scanpath>> = cases
        .par_iter()
        .map(|(image, task)| {
            let bundle = features.bundle(image, task)?;
            let info = human_ds.image_index[image];
            let frame = SampleFrame {
                width: info.width,
                height: info.height,
                image_id: image.clone(),
                task: task.clone(),
            };
            let opts = PredictOptions {
                n_samples,
                seed: case_seed(image, task, a.seed),
                deterministic,
                ..PredictOptions::default()
            };
            model.predict(&bundle, &frame, &opts)
        })
        .collect::<Result<_>>()?;
    let model_paths: Vec<Scanpath> = predicted.into_iter().flatten().collect();
    let human_paths = if a.self_test { model_paths.clone() } else { human_ds.samples.clone() };

    let labels = match &a.labels {
        Some(dir) => Some(load_label_dir(dir)?),
        None => {
            log::warn!("no --labels directory; semantic metrics skipped");
            None
        }
    };
    let eval_cfg = EvalConfig {
        bandwidth: a.bandwidth,
        bin_ms: a.bin_ms,
        sigma: a.sigma,
        durations: cfg.variant.predicts_duration(),
        workers: a.workers,
    };
    let report = evaluate(&model_paths, &human_paths, labels.as_ref(), &eval_cfg)?;
    let csv_path = a.csv.clone().unwrap_or_else(|| a.report.with_extension("csv"));
    if let Some(dir) = a.report.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    report.save(&a.report, &csv_path)?;
    if let Some(Some(ss)) = report.aggregate.get("ss") {
        log::info!("aggregate SS {ss:.4} over {} cases", report.cases.len());
    }
    let mut outputs = vec![a.report.clone(), csv_path];
    if let Some(p) = &a.predictions {
        let ds = Dataset::from_scanpaths(model_paths)?;
        save_dataset(&ds, p)?;
        outputs.push(p.clone());
    }

    let mut m = RunManifest::new("eval", args);
    m.config = serde_json::json!({
        "model": cfg,
        "eval": eval_cfg,
        "n_samples": n_samples,
        "deterministic": deterministic,
        "self_test": a.self_test,
    });
    m.seed = Some(a.seed);
    m.inputs = [a.checkpoint.clone(), a.data.clone()]
        .into_iter()
        .chain(a.labels.iter().cloned())
        .chain(a.images.iter().cloned())
        .chain(feature_inputs(&a.features))
        .collect();
    m.outputs = outputs;
    Ok((m, beside(&a.report)))
}

#[derive(Serialize)]
struct PredictOutput<'a> {
    image_id: &'a str,
    target: &'a str,
    /// Per scanpath: the model terminated before emitting any fixation and
    /// only the initial fixation was written.
    empty_prediction: Vec<bool>,
    scanpaths: Vec<Scanpath>,
}

fn cmd_predict(a: &PredictArgs, args: &[String]) -> Result<(RunManifest, PathBuf)> {
    if a.target.trim().is_empty() {
        return Err(Error::Config("--target must be non-empty".into()));
    }
    if a.n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    let model = Checkpoint::load(&a.checkpoint)?.into_model()?;
    let cfg = model.config();
    let mut inputs = vec![a.checkpoint.clone()];
    let bundle = match (&a.image_features, &a.synthetic) {
        (Some(path), _) => {
            let (id, feats) = load_feature_file(path)?;
            inputs.push(path.clone());
            inputs.extend(a.embeddings.iter().cloned());
            let emb = embedder(a.embeddings.as_ref(), a.hash_fallback, a.feature_seed, cfg)?;
            bundle_from_features(&id, feats, &a.target, &emb, cfg)?
        }
        (None, Some(id)) => {
            if a.embeddings.is_some() {
                return Err(Error::Config("--embeddings requires --image-features".into()));
            }
            synthetic_features(id, &a.target, cfg, a.feature_seed).bundle
        }
        (None, None) => unreachable!("clap requires one feature source"),
    };
    let frame = SampleFrame {
        width: a.width,
        height: a.height,
        image_id: bundle.image_id.clone(),
        task: a.target.clone(),
    };
    let opts = PredictOptions {
        n_samples: a.n,
        seed: a.seed,
        deterministic: a.deterministic,
        ..PredictOptions::default()
    };
    let samples = model.predict_with_status(&bundle, &frame, &opts)?;
    let empty: Vec<bool> = samples.iter().map(|(_, s)| *s == SampleStatus::EmptyPrediction).collect();
    if empty.iter().any(|e| *e) {
        log::warn!("{} of {} samples terminated at step 0", empty.iter().filter(|e| **e).count(), a.n);
    }
    let scanpaths: Vec<Scanpath> = samples.into_iter().map(|(p, _)| p).collect();
    let mut outputs = Vec::new();
    if let Some(svg) = &a.svg {
        write_file(svg, super::svg::render(&scanpaths, a.width, a.height))?;
        outputs.push(svg.clone());
    }
    let out = PredictOutput {
        image_id: &bundle.image_id,
        target: &a.target,
        empty_prediction: empty,
        scanpaths,
    };
    write_file(&a.out, serde_json::to_string_pretty(&out)?)?;
    outputs.insert(0, a.out.clone());

    let mut m = RunManifest::new("predict", args);
    m.config = serde_json::json!({
        "model": cfg,
        "n": a.n,
        "deterministic": a.deterministic,
        "width": a.width,
        "height": a.height,
    });
    m.seed = Some(a.seed);
    m.inputs = inputs;
    m.outputs = outputs;
    Ok((m, beside(&a.out)))
}

fn cmd_bench(a: &BenchArgs, args: &[String]) -> Result<(RunManifest, PathBuf)> {
    if a.repeats < 10 {
        return Err(Error::Config(format!("--repeats must be at least 10, got {}", a.repeats)));
    }
    let (model, input) = match (&a.checkpoint, &a.config) {
        (Some(p), _) => (Checkpoint::load(p)?.into_model()?, p.clone()),
        (None, Some(p)) => (Gazeformer::init(RunConfig::load(p)?.model, a.seed)?, p.clone()),
        (None, None) => unreachable!("clap requires a model source"),
    };
    let cfg = model.config();
    let lengths: Vec<usize> = if a.lengths.is_empty() {
        (1..=cfg.max_len).collect()
    } else {
        a.lengths.clone()
    };
    let bundle = synthetic_features(&a.synthetic, &a.target, cfg, a.feature_seed).bundle;
    let frame = SampleFrame {
        width: 1680.0,
        height: 1050.0,
        image_id: a.synthetic.clone(),
        task: a.target.clone(),
    };
    let modes = a.mode.modes();
    log::info!(
        "timing {} mode(s) × {} lengths, {} repeats after {} warm-up rounds",
        modes.len(),
        lengths.len(),
        a.repeats,
        a.warmup
    );
    let grid = bench_grid(&model, &bundle, &frame, &modes, &lengths, a.repeats, a.warmup)?;
    let rows = summarize(&grid)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_bench_csv(create_file(&a.out)?, &rows)?;

    let longest = lengths.iter().copied().max().unwrap_or(1);
    if let Some(s) = rows.iter().find(|r| r.length == longest).and_then(|r| r.speedup) {
        log::info!("speedup at L={longest}: {s:.2}x");
    }
    let par: Vec<f64> = rows
        .iter()
        .filter(|r| r.mode == DecodeMode::Parallel)
        .map(|r| r.stats.median_ms)
        .collect();
    if par.len() > 1 {
        log::info!("parallel median CoV across lengths: {:.2}%", 100.0 * coefficient_of_variation(&par));
    }

    let mut m = RunManifest::new("bench", args);
    m.config = serde_json::json!({
        "model": cfg,
        "modes": modes,
        "lengths": lengths,
        "repeats": a.repeats,
        "warmup": a.warmup,
    });
    m.seed = Some(a.seed);
    m.inputs = vec![input];
    m.outputs = vec![a.out.clone()];
    Ok((m, beside(&a.out)))
}

fn cmd_synth(a: &SynthArgs, args: &[String]) -> Result<(RunManifest, PathBuf)> {
    if a.count == 0 || a.targets.is_empty() {
        return Err(Error::Config("--count and --targets must be non-empty".into()));
    }
    let cfg = match &a.config {
        Some(p) => RunConfig::load(p)?.model,
        None => ModelConfig::default(),
    };
    let targets: Vec<&str> = a.targets.iter().map(String::as_str).collect();
    let ds = synthetic_dataset(a.count, &targets, &cfg, (a.width, a.height), a.feature_seed);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_dataset(&ds, &a.out)?;
    log::info!("wrote {} synthetic scanpaths to {}", ds.len(), a.out.display());
    let mut m = RunManifest::new("synth", args);
    m.config = serde_json::json!({
        "model": cfg,
        "count": a.count,
        "targets": a.targets,
        "width": a.width,
        "height": a.height,
    });
    m.seed = Some(a.feature_seed);
    m.inputs = a.config.iter().cloned().collect();
    m.outputs = vec![a.out.clone()];
    Ok((m, beside(&a.out)))
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let m = RunManifest::load(&a.manifest)?;
    if m.command == "replay" {
        return Err(Error::Config("cannot replay a replay".into()));
    }
    if m.tool_version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest was written by version {}", m.tool_version);
    }
    let before: BTreeMap<PathBuf, Option<Vec<u8>>> =
        m.outputs.iter().map(|p| (p.clone(), std::fs::read(p).ok())).collect();
    let argv = std::iter::once("gazeformer".to_string()).chain(m.args.iter().cloned());
    let cli = <Cli as clap::Parser>::try_parse_from(argv)
        .map_err(|e| Error::Config(format!("manifest arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Config("cannot replay a replay".into()));
    }
    log::info!("replaying `{}` from {}", m.command, a.manifest.display());
    dispatch(&cli, &m.args)?;
    if !a.check {
        return Ok(());
    }
    let mut mismatched = Vec::new();
    for (path, old) in &before {
        let new = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        match old {
            Some(old) if *old == new => {}
            Some(_) => mismatched.push(path.display().to_string()),
            None => log::warn!("{} did not exist before the replay; nothing to compare", path.display()),
        }
    }
    if mismatched.is_empty() {
        log::info!("all {} outputs reproduced byte for byte", before.len());
        Ok(())
    } else {
        Err(Error::Contract(format!("replay produced different bytes for {}", mismatched.join(", "))))
    }
}
