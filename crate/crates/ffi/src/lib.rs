//! C ABI for gazeformer.
//!
//! Every fallible function returns a [`GfStatus`]; on failure a message is
//! available from [`gf_last_error`] on the same thread until the next call.
//! Objects are opaque handles created by `gf_*_load`/`gf_*_init`/`gf_predict_*`
//! and released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gazeformer::data::features::{bundle_from_features, load_feature_file};
use gazeformer::data::synthetic_features;
use gazeformer::metrics::{edit_distance, multimatch, sequence_score};
use gazeformer::model::{Fixation, PredictOptions, SampleFrame, SampleStatus, TargetEmbedder};
use gazeformer::train::RunConfig;
use gazeformer::{Checkpoint, Error, Gazeformer, ModelConfig, Scanpath};

/// Result codes. `GF_STATUS_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GfStatus {
    Ok = 0,
    /// A null pointer, invalid UTF-8 or out-of-range argument.
    InvalidArgument = 1,
    /// A file could not be read or written.
    Io = 2,
    /// Malformed input data: checkpoint, feature file, dataset, embeddings.
    Format = 3,
    /// Invalid model configuration.
    Config = 4,
    /// Failure in the numerical pipeline: shapes, non-finite values.
    Compute = 5,
    /// The metric is undefined for the given inputs.
    UndefinedMetric = 6,
    /// The target name is not in the embedding table.
    UnknownTarget = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

impl From<&Error> for GfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => GfStatus::Io,
            Error::Format { .. } | Error::Record { .. } | Error::Json(_) | Error::Csv(_) => GfStatus::Format,
            Error::Config(_) => GfStatus::Config,
            Error::UndefinedMetric(_) => GfStatus::UndefinedMetric,
            Error::UnknownTarget { .. } | Error::UnknownCategory(_) => GfStatus::UnknownTarget,
            Error::Contract(_) => GfStatus::InvalidArgument,
            _ => GfStatus::Compute,
        }
    }
}

/// One fixation: pixel coordinates and duration in milliseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GfFixation {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// MultiMatch similarities in `[0, 1]`. Components undefined for the inputs
/// (single-fixation scanpaths have no saccades) are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GfMultiMatch {
    pub shape: f64,
    pub direction: f64,
    pub length: f64,
    pub position: f64,
}

/// A loaded model. Immutable; may be shared between threads for prediction.
pub struct GfModel {
    inner: Gazeformer,
}

/// Scanpaths produced by one prediction call.
pub struct GfScanpathSet {
    paths: Vec<Vec<GfFixation>>,
    empty: Vec<bool>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(GfStatus::from(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GfStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GfStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GfStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null (only when `len == 0`) or point to `len` readable values.
unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| invalid(format!("{name} is null")))
}

fn model_ref<'a>(m: *const GfModel) -> Result<&'a Gazeformer, Failure> {
    // SAFETY: non-null handles come from gf_model_load/gf_model_init.
    unsafe { m.as_ref() }
        .map(|m| &m.inner)
        .ok_or_else(|| invalid("model is null"))
}

fn to_scanpath(fix: &[GfFixation], width: f64, height: f64) -> Scanpath {
    Scanpath {
        image_id: String::new(),
        task: String::new(),
        subject: String::new(),
        width,
        height,
        fixations: fix.iter().map(|f| Fixation { x: f.x, y: f.y, t: f.t }).collect(),
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next gazeformer call on the same thread.
#[no_mangle]
pub extern "C" fn gf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model from a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_model_load(path: *const c_char, out: *mut *mut GfModel) -> GfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = Checkpoint::load(Path::new(path))?.into_model()?;
        *out = Box::into_raw(Box::new(GfModel { inner }));
        Ok(())
    })
}

/// Creates a model with freshly initialized weights. `config_path` names a
/// TOML file with a `[model]` table; null selects the tiny configuration.
///
/// # Safety
/// `config_path` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gf_model_init(config_path: *const c_char, seed: u64, out: *mut *mut GfModel) -> GfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = if config_path.is_null() {
            ModelConfig::tiny()
        } else {
            RunConfig::load(Path::new(str_arg(config_path, "config_path")?))?.model
        };
        let inner = Gazeformer::init(cfg, seed)?;
        *out = Box::into_raw(Box::new(GfModel { inner }));
        Ok(())
    })
}

/// Saves the model weights as a checkpoint.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gf_model_save(model: *const GfModel, path: *const c_char) -> GfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = str_arg(path, "path")?;
        Checkpoint::from_model(m).save(Path::new(path))?;
        Ok(())
    })
}

/// Maximum scanpath length `L` of the model.
///
/// # Safety
/// `model` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gf_model_max_len(model: *const GfModel, out: *mut usize) -> GfStatus {
    guard(|| {
        *out_arg(out, "out")? = model_ref(model)?.config().max_len;
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_model_free(model: *mut GfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Options shared by the prediction entry points.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct GfPredictOptions {
    /// Number of scanpaths to sample (at least 1).
    pub n_samples: usize,
    pub seed: u64,
    /// Non-zero emits means instead of samples.
    pub deterministic: u8,
    /// Image frame in pixels.
    pub width: f64,
    pub height: f64,
}

/// Default options: 10 samples, seed 0, stochastic, 1680×1050 frame.
#[no_mangle]
pub extern "C" fn gf_predict_options_default() -> GfPredictOptions {
    GfPredictOptions {
        n_samples: 10,
        seed: 0,
        deterministic: 0,
        width: 1680.0,
        height: 1050.0,
    }
}

fn predict(
    model: &Gazeformer,
    bundle: gazeformer::model::FeatureBundle,
    opts: &GfPredictOptions,
    out: *mut *mut GfScanpathSet,
) -> Result<(), Failure> {
    let out = out_arg(out, "out")?;
    if !(opts.width > 0.0 && opts.height > 0.0) {
        return Err(invalid("width and height must be positive"));
    }
    let frame = SampleFrame {
        width: opts.width,
        height: opts.height,
        image_id: bundle.image_id.clone(),
        task: bundle.target_name.clone(),
    };
    let p = PredictOptions {
        n_samples: opts.n_samples,
        seed: opts.seed,
        deterministic: opts.deterministic != 0,
        ..PredictOptions::default()
    };
    let samples = model.predict_with_status(&bundle, &frame, &p)?;
    let set = GfScanpathSet {
        empty: samples.iter().map(|(_, s)| *s == SampleStatus::EmptyPrediction).collect(),
        paths: samples
            .into_iter()
            .map(|(s, _)| s.fixations.iter().map(|f| GfFixation { x: f.x, y: f.y, t: f.t }).collect())
            .collect(),
    };
    *out = Box::into_raw(Box::new(set));
    Ok(())
}

/// Predicts scanpaths on deterministic synthetic features for `image_id`.
///
/// # Safety
/// Handles must come from this library; strings must be NUL-terminated;
/// `opts` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gf_predict_synthetic(
    model: *const GfModel,
    image_id: *const c_char,
    target: *const c_char,
    feature_seed: u64,
    opts: *const GfPredictOptions,
    out: *mut *mut GfScanpathSet,
) -> GfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let id = str_arg(image_id, "image_id")?;
        let target = str_arg(target, "target")?;
        let opts = opts.as_ref().ok_or_else(|| invalid("opts is null"))?;
        if target.trim().is_empty() {
            return Err(invalid("target is empty"));
        }
        let bundle = synthetic_features(id, target, m.config(), feature_seed).bundle;
        predict(m, bundle, opts, out)
    })
}

/// Predicts scanpaths from a feature file. The target is embedded with the
/// seeded hash embedder, so any non-empty name is accepted.
///
/// # Safety
/// As for [`gf_predict_synthetic`].
#[no_mangle]
pub unsafe extern "C" fn gf_predict_features(
    model: *const GfModel,
    feature_path: *const c_char,
    target: *const c_char,
    embedding_seed: u64,
    opts: *const GfPredictOptions,
    out: *mut *mut GfScanpathSet,
) -> GfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = str_arg(feature_path, "feature_path")?;
        let target = str_arg(target, "target")?;
        let opts = opts.as_ref().ok_or_else(|| invalid("opts is null"))?;
        let (id, feats) = load_feature_file(Path::new(path))?;
        let emb = TargetEmbedder::hash(m.config().d_text, embedding_seed);
        let bundle = bundle_from_features(&id, feats, target, &emb, m.config())?;
        predict(m, bundle, opts, out)
    })
}

/// Number of scanpaths in the set; 0 for null.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gf_scanpath_set_len(set: *const GfScanpathSet) -> usize {
    set.as_ref().map_or(0, |s| s.paths.len())
}

/// Borrows scanpath `index`. The fixation array stays valid until the set is
/// freed. `out_empty` (optional) receives 1 when the model terminated before
/// the first step and only the initial fixation was emitted.
///
/// # Safety
/// `set` must be a live handle; out pointers must be writable (`out_empty`
/// may be null).
#[no_mangle]
pub unsafe extern "C" fn gf_scanpath_set_get(
    set: *const GfScanpathSet,
    index: usize,
    out_fixations: *mut *const GfFixation,
    out_len: *mut usize,
    out_empty: *mut u8,
) -> GfStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(|| invalid("set is null"))?;
        let path = s
            .paths
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range for {} scanpaths", s.paths.len())))?;
        *out_arg(out_fixations, "out_fixations")? = path.as_ptr();
        *out_arg(out_len, "out_len")? = path.len();
        if let Some(e) = out_empty.as_mut() {
            *e = u8::from(s.empty[index]);
        }
        Ok(())
    })
}

/// Releases a scanpath set. Null is ignored.
///
/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_scanpath_set_free(set: *mut GfScanpathSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Sequence score of two symbol strings: Needleman–Wunsch matches over the
/// longer length, in `[0, 1]`. Both strings must be non-empty.
///
/// # Safety
/// `a`/`b` must point to `a_len`/`b_len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gf_sequence_score(
    a: *const u32,
    a_len: usize,
    b: *const u32,
    b_len: usize,
    out: *mut f64,
) -> GfStatus {
    guard(|| {
        let (a, b) = (slice_arg(a, a_len, "a")?, slice_arg(b, b_len, "b")?);
        *out_arg(out, "out")? = sequence_score(a, b)?;
        Ok(())
    })
}

/// Levenshtein distance between two symbol strings.
///
/// # Safety
/// As for [`gf_sequence_score`].
#[no_mangle]
pub unsafe extern "C" fn gf_edit_distance(
    a: *const u32,
    a_len: usize,
    b: *const u32,
    b_len: usize,
    out: *mut usize,
) -> GfStatus {
    guard(|| {
        let (a, b) = (slice_arg(a, a_len, "a")?, slice_arg(b, b_len, "b")?);
        *out_arg(out, "out")? = edit_distance(a, b);
        Ok(())
    })
}

/// MultiMatch similarity of two scanpaths in a `width × height` frame.
///
/// # Safety
/// `a`/`b` must point to `a_len`/`b_len` fixations; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gf_multimatch(
    a: *const GfFixation,
    a_len: usize,
    b: *const GfFixation,
    b_len: usize,
    width: f64,
    height: f64,
    out: *mut GfMultiMatch,
) -> GfStatus {
    guard(|| {
        let (a, b) = (slice_arg(a, a_len, "a")?, slice_arg(b, b_len, "b")?);
        let out = out_arg(out, "out")?;
        let mm = multimatch(&to_scanpath(a, width, height), &to_scanpath(b, width, height), width, height)?;
        *out = GfMultiMatch {
            shape: mm.shape.unwrap_or(f64::NAN),
            direction: mm.direction.unwrap_or(f64::NAN),
            length: mm.length.unwrap_or(f64::NAN),
            position: mm.position,
        };
        Ok(())
    })
}
