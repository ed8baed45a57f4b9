use std::ffi::{CStr, CString};
use std::ptr;

use gazeformer_ffi::*;

fn last_error() -> String {
    let p = gf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tiny_model() -> *mut GfModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gf_model_init(ptr::null(), 7, &mut m) }, GfStatus::Ok);
    assert!(!m.is_null());
    m
}

fn predict(m: *const GfModel, opts: &GfPredictOptions) -> Vec<Vec<GfFixation>> {
    let id = CString::new("synth_0001").unwrap();
    let target = CString::new("pizza cutter").unwrap();
    let mut set = ptr::null_mut();
    let st = unsafe { gf_predict_synthetic(m, id.as_ptr(), target.as_ptr(), 0, opts, &mut set) };
    assert_eq!(st, GfStatus::Ok);
    let n = unsafe { gf_scanpath_set_len(set) };
    let out = (0..n)
        .map(|i| {
            let (mut fx, mut len, mut empty) = (ptr::null(), 0usize, 9u8);
            assert_eq!(unsafe { gf_scanpath_set_get(set, i, &mut fx, &mut len, &mut empty) }, GfStatus::Ok);
            assert!(empty <= 1 && len >= 1);
            unsafe { std::slice::from_raw_parts(fx, len) }.to_vec()
        })
        .collect();
    unsafe { gf_scanpath_set_free(set) };
    out
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(gf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn predict_returns_requested_count_and_is_seeded() {
    let m = tiny_model();
    let mut opts = gf_predict_options_default();
    opts.n_samples = 3;
    opts.seed = 11;
    let a = predict(m, &opts);
    let b = predict(m, &opts);
    assert_eq!(a.len(), 3);
    assert_eq!(a, b);
    let mut max_len = 0;
    assert_eq!(unsafe { gf_model_max_len(m, &mut max_len) }, GfStatus::Ok);
    for p in &a {
        assert!(p.len() <= max_len);
        assert!(p.iter().all(|f| (0.0..=1680.0).contains(&f.x) && (0.0..=1050.0).contains(&f.y) && f.t >= 0.0));
    }
    unsafe { gf_model_free(m) };
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.gzck").to_str().unwrap()).unwrap();
    let m = tiny_model();
    assert_eq!(unsafe { gf_model_save(m, path.as_ptr()) }, GfStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { gf_model_load(path.as_ptr(), &mut loaded) }, GfStatus::Ok);
    let mut opts = gf_predict_options_default();
    opts.deterministic = 1;
    assert_eq!(predict(m, &opts), predict(loaded, &opts));
    unsafe {
        gf_model_free(m);
        gf_model_free(loaded);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    let missing = CString::new("/nonexistent/model.gzck").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gf_model_load(missing.as_ptr(), &mut m) }, GfStatus::Io);
    assert!(last_error().contains("nonexistent"));
    assert!(m.is_null());

    assert_eq!(unsafe { gf_model_load(ptr::null(), &mut m) }, GfStatus::InvalidArgument);
    assert!(last_error().contains("path"));

    let model = tiny_model();
    let mut opts = gf_predict_options_default();
    opts.n_samples = 0;
    let id = CString::new("x").unwrap();
    let target = CString::new("cup").unwrap();
    let mut set = ptr::null_mut();
    let st = unsafe { gf_predict_synthetic(model, id.as_ptr(), target.as_ptr(), 0, &opts, &mut set) };
    assert_eq!(st, GfStatus::InvalidArgument);
    assert!(set.is_null());
    unsafe { gf_model_free(model) };

    // Success clears the previous message.
    let mut v = 0.0;
    let a = [1u32];
    assert_eq!(unsafe { gf_sequence_score(a.as_ptr(), 1, a.as_ptr(), 1, &mut v) }, GfStatus::Ok);
    assert!(gf_last_error().is_null());
}

#[test]
fn string_metrics() {
    let a = [0u32, 1, 2, 3];
    let b = [0u32, 2, 3];
    let mut ss = 0.0;
    assert_eq!(unsafe { gf_sequence_score(a.as_ptr(), 4, b.as_ptr(), 3, &mut ss) }, GfStatus::Ok);
    assert_eq!(ss, 0.75);
    let mut d = 0usize;
    assert_eq!(unsafe { gf_edit_distance(a.as_ptr(), 4, b.as_ptr(), 3, &mut d) }, GfStatus::Ok);
    assert_eq!(d, 1);
    assert_eq!(unsafe { gf_edit_distance(ptr::null(), 0, b.as_ptr(), 3, &mut d) }, GfStatus::Ok);
    assert_eq!(d, 3);
    assert_eq!(
        unsafe { gf_sequence_score(ptr::null(), 0, b.as_ptr(), 3, &mut ss) },
        GfStatus::InvalidArgument
    );
}

#[test]
fn multimatch_identity_and_undefined_components() {
    let p = [
        GfFixation { x: 10.0, y: 10.0, t: 200.0 },
        GfFixation { x: 300.0, y: 80.0, t: 250.0 },
        GfFixation { x: 500.0, y: 400.0, t: 180.0 },
    ];
    let mut mm = GfMultiMatch::default();
    assert_eq!(unsafe { gf_multimatch(p.as_ptr(), 3, p.as_ptr(), 3, 1680.0, 1050.0, &mut mm) }, GfStatus::Ok);
    assert_eq!((mm.shape, mm.direction, mm.length, mm.position), (1.0, 1.0, 1.0, 1.0));
    assert_eq!(unsafe { gf_multimatch(p.as_ptr(), 1, p.as_ptr(), 1, 1680.0, 1050.0, &mut mm) }, GfStatus::Ok);
    assert!(mm.shape.is_nan() && mm.direction.is_nan());
    assert_eq!(mm.position, 1.0);
}

#[test]
fn header_is_generated_and_compiles() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gazeformer.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for sym in ["gf_model_load", "gf_predict_synthetic", "gf_scanpath_set_free", "GF_STATUS_PANIC", "GfFixation"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"gazeformer.h\"\nint main(void) { GfPredictOptions o = gf_predict_options_default(); \
         GfModel *m = 0; return gf_model_init(0, 1, &m) == GF_STATUS_OK && o.n_samples == 10 ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success(), "C compiler rejected the generated header");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
