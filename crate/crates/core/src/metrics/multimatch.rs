//! Geometric scanpath similarity over saccade vectors and fixation positions.
//!
//! Both sequences are resampled to a common length by linear interpolation
//! over normalized time, then compared element by element. No amplitude or
//! direction simplification is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scanpath;

/// Component scores in `[0, 1]`. Vector components are `None` when either
/// scanpath has a single fixation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiMatch {
    pub shape: Option<f64>,
    pub direction: Option<f64>,
    pub length: Option<f64>,
    pub position: f64,
}

impl MultiMatch {
    /// Mean over the defined components.
    pub fn mean(&self) -> f64 {
        let parts: Vec<f64> = [self.shape, self.direction, self.length, Some(self.position)]
            .into_iter()
            .flatten()
            .collect();
        parts.iter().sum::<f64>() / parts.len() as f64
    }
}

/// Linear resampling of `xs` to `n` points over normalized time.
fn resample(xs: &[(f64, f64)], n: usize) -> Vec<(f64, f64)> {
    let m = xs.len();
    if m == n {
        return xs.to_vec();
    }
    if m == 1 || n == 1 {
        return vec![xs[0]; n];
    }
    (0..n)
        .map(|k| {
            let u = k as f64 * (m - 1) as f64 / (n - 1) as f64;
            let i = (u.floor() as usize).min(m - 2);
            let f = u - i as f64;
            let (a, b) = (xs[i], xs[i + 1]);
            (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1))
        })
        .collect()
}

fn saccades(s: &Scanpath) -> Vec<(f64, f64)> {
    s.fixations.windows(2).map(|w| (w[1].x - w[0].x, w[1].y - w[0].y)).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn score(mean_difference: f64, scale: f64) -> f64 {
    (1.0 - mean_difference / scale).clamp(0.0, 1.0)
}

fn angle_between(a: (f64, f64), b: (f64, f64)) -> f64 {
    let d = (a.1.atan2(a.0) - b.1.atan2(b.0)).abs();
    if d > std::f64::consts::PI {
        2.0 * std::f64::consts::PI - d
    } else {
        d
    }
}

/// Compares two scanpaths drawn in a `width × height` frame.
pub fn multimatch(a: &Scanpath, b: &Scanpath, width: f64, height: f64) -> Result<MultiMatch> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Contract("multimatch needs non-empty scanpaths".into()));
    }
    let diag = width.hypot(height);
    if !(diag > 0.0) {
        return Err(Error::Contract("image frame has zero size".into()));
    }

    let n = a.len().max(b.len());
    let pa = resample(&a.points(), n);
    let pb = resample(&b.points(), n);
    let position = score(mean(pa.iter().zip(&pb).map(|(p, q)| (p.0 - q.0).hypot(p.1 - q.1))), diag);

    if a.len() < 2 || b.len() < 2 {
        return Ok(MultiMatch {
            shape: None,
            direction: None,
            length: None,
            position,
        });
    }
    let k = (a.len() - 1).max(b.len() - 1);
    let va = resample(&saccades(a), k);
    let vb = resample(&saccades(b), k);
    let pairs = || va.iter().zip(&vb);
    let shape = score(mean(pairs().map(|(u, v)| (u.0 - v.0).hypot(u.1 - v.1))), 2.0 * diag);
    let direction = score(mean(pairs().map(|(&u, &v)| angle_between(u, v))), std::f64::consts::PI);
    let length = score(mean(pairs().map(|(u, v)| (u.0.hypot(u.1) - v.0.hypot(v.1)).abs())), diag);
    Ok(MultiMatch {
        shape: Some(shape),
        direction: Some(direction),
        length: Some(length),
        position,
    })
}
