//! Turning head outputs into scanpaths.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use super::config::T_MAX_MS;
use super::types::{Fixation, FixationOutput, InitialFixation, Scanpath};

/// `mu + eps * exp(0.5 * log_var)`.
pub fn reparameterize(mu: f64, log_var: f64, eps: f64) -> f64 {
    mu + eps * (0.5 * log_var).exp()
}

/// Number of steps kept when walking `valid_prob` from step 0 and stopping
/// at the first value below 0.5. Zero means even step 0 was padding.
pub fn emitted_length(valid_prob: &[f64]) -> usize {
    valid_prob.iter().position(|&v| v < 0.5).unwrap_or(valid_prob.len())
}

/// Draws step `i` in normalized units, ignoring validity.
pub fn sample_step<R: Rng + ?Sized>(out: &FixationOutput, i: usize, rng: &mut R, deterministic: bool) -> (f64, f64, f64) {
    let noise = if deterministic {
        StepNoise::default()
    } else {
        StepNoise {
            x: StandardNormal.sample(rng),
            y: StandardNormal.sample(rng),
            t: StandardNormal.sample(rng),
        }
    };
    let (nx, ny) = match &out.patch_probs {
        Some(probs) => patch_center(&probs[i], out.grid, rng, deterministic),
        None => (
            reparameterize(out.mu_x[i], out.lambda_x[i], noise.x),
            reparameterize(out.mu_y[i], out.lambda_y[i], noise.y),
        ),
    };
    let nt = if out.mu_t.is_empty() {
        0.0
    } else {
        reparameterize(out.mu_t[i], out.lambda_t[i], noise.t)
    };
    (nx, ny, nt)
}

/// Pixel frame and identity stamped onto sampled scanpaths.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleFrame {
    pub width: f64,
    pub height: f64,
    pub image_id: String,
    pub task: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleStatus {
    Ok,
    /// Step 0 was classified as padding; the scanpath holds only the
    /// initial fixation.
    EmptyPrediction,
}

/// Noise for one step. All zero in deterministic mode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepNoise {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// Samples one scanpath, truncated at the first padding step. ε is standard
/// normal from `rng`, or zero when `deterministic`; for the patch-classification
/// variant the patch is drawn from the step's distribution (arg-max when
/// deterministic) and its center emitted.
pub fn sample_scanpath<R: Rng + ?Sized>(
    out: &FixationOutput,
    rng: &mut R,
    frame: &SampleFrame,
    deterministic: bool,
    init: InitialFixation,
) -> (Scanpath, SampleStatus) {
    let len = emitted_length(&out.valid_prob);
    let mut fixations: Vec<Fixation> = (0..len)
        .map(|i| {
            let (nx, ny, nt) = sample_step(out, i, rng, deterministic);
            denormalize(nx, ny, nt, frame)
        })
        .collect();

    let status = if fixations.is_empty() {
        fixations.push(denormalize(init.x, init.y, 0.0, frame));
        SampleStatus::EmptyPrediction
    } else {
        SampleStatus::Ok
    };
    let scanpath = Scanpath {
        image_id: frame.image_id.clone(),
        task: frame.task.clone(),
        subject: "model".into(),
        width: frame.width,
        height: frame.height,
        fixations,
    };
    (scanpath, status)
}

/// Normalized `(x, y, t)` → pixels/ms, clamped into the image and to
/// non-negative durations.
pub fn denormalize(x: f64, y: f64, t: f64, frame: &SampleFrame) -> Fixation {
    Fixation {
        x: (x * frame.width).clamp(0.0, frame.width),
        y: (y * frame.height).clamp(0.0, frame.height),
        t: (t * T_MAX_MS).max(0.0),
    }
}

fn patch_center<R: Rng + ?Sized>(
    probs: &[f64],
    (h, w): (usize, usize),
    rng: &mut R,
    deterministic: bool,
) -> (f64, f64) {
    let idx = if deterministic {
        // First maximum wins ties.
        probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    } else {
        WeightedIndex::new(probs).map(|d| d.sample(rng)).unwrap_or(0)
    };
    let (r, c) = (idx / w, idx % w);
    ((c as f64 + 0.5) / w as f64, (r as f64 + 0.5) / h as f64)
}
