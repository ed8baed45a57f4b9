//! Fixation density maps and the CC / NSS saliency scores.

use crate::error::{Error, Result};
use crate::model::Scanpath;

pub const DEFAULT_SIGMA: f64 = 30.0;
/// Kernel support in standard deviations.
pub const TRUNCATE: f64 = 4.0;

/// Row-major `height × width` density.
#[derive(Clone, Debug, PartialEq)]
pub struct FixationMap {
    pub height: usize,
    pub width: usize,
    pub sigma: f64,
    pub grid: Vec<f64>,
}

impl FixationMap {
    pub fn new(height: usize, width: usize, sigma: f64, grid: Vec<f64>) -> Result<Self> {
        if grid.len() != height * width || height == 0 || width == 0 {
            return Err(Error::Dimension(format!("{height}×{width} map with {} cells", grid.len())));
        }
        Ok(Self {
            height,
            width,
            sigma,
            grid,
        })
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.grid[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.grid.iter().sum()
    }

    /// Zero-mean, unit-variance copy of the grid.
    pub fn z_scored(&self) -> Result<Vec<f64>> {
        let n = self.grid.len() as f64;
        let mean = self.grid.iter().sum::<f64>() / n;
        let var = self.grid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) || std <= 1e-12 * mean.abs().max(1.0) {
            return Err(Error::UndefinedMetric("fixation map has zero variance".into()));
        }
        Ok(self.grid.iter().map(|v| (v - mean) / std).collect())
    }
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`.
fn kernel(sigma: f64) -> (Vec<f64>, isize) {
    let r = (TRUNCATE * sigma).ceil() as isize;
    let taps: Vec<f64> = (-r..=r).map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp()).collect();
    let total: f64 = taps.iter().sum();
    (taps.into_iter().map(|t| t / total).collect(), r)
}

/// Pixel containing a point, clamped into the grid.
pub fn pixel_of(x: f64, y: f64, height: usize, width: usize) -> (usize, usize) {
    let col = (x.floor().max(0.0) as usize).min(width - 1);
    let row = (y.floor().max(0.0) as usize).min(height - 1);
    (row, col)
}

/// A unit impulse per fixation, blurred by an isotropic Gaussian of width
/// `sigma` pixels truncated at four standard deviations. Mass falling off
/// the grid is dropped.
pub fn fixation_map(paths: &[&Scanpath], height: usize, width: usize, sigma: f64) -> Result<FixationMap> {
    points_map(&paths.iter().flat_map(|p| p.points()).collect::<Vec<_>>(), height, width, sigma)
}

pub fn points_map(points: &[(f64, f64)], height: usize, width: usize, sigma: f64) -> Result<FixationMap> {
    if points.is_empty() {
        return Err(Error::Contract("fixation map needs at least one fixation".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    if height == 0 || width == 0 {
        return Err(Error::Dimension("empty map".into()));
    }
    let (taps, r) = kernel(sigma);
    let mut grid = vec![0.0; height * width];
    // Separable kernel splatted at each impulse: equivalent to convolving
    // the impulse image with zero padding.
    for &(x, y) in points {
        let (row, col) = pixel_of(x, y, height, width);
        let (row, col) = (row as isize, col as isize);
        for dy in -r..=r {
            let yy = row + dy;
            if yy < 0 || yy >= height as isize {
                continue;
            }
            let wy = taps[(dy + r) as usize];
            let line = &mut grid[yy as usize * width..(yy as usize + 1) * width];
            let lo = (col - r).max(0);
            let hi = (col + r).min(width as isize - 1);
            for xx in lo..=hi {
                line[xx as usize] += wy * taps[(xx - col + r) as usize];
            }
        }
    }
    FixationMap::new(height, width, sigma, grid)
}

/// Pearson correlation of the two maps.
pub fn cc(pred: &FixationMap, human: &FixationMap) -> Result<f64> {
    if (pred.height, pred.width) != (human.height, human.width) {
        return Err(Error::Dimension(format!(
            "maps {}×{} and {}×{}",
            pred.height, pred.width, human.height, human.width
        )));
    }
    let a = pred.z_scored()?;
    let b = human.z_scored()?;
    let r = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
    Ok(r.clamp(-1.0, 1.0))
}

/// Mean of the z-scored predicted map at the human fixation pixels.
pub fn nss(pred: &FixationMap, fixations: &[(f64, f64)]) -> Result<f64> {
    if fixations.is_empty() {
        return Err(Error::Contract("nss needs at least one fixation".into()));
    }
    let z = pred.z_scored()?;
    let total: f64 = fixations
        .iter()
        .map(|&(x, y)| {
            let (row, col) = pixel_of(x, y, pred.height, pred.width);
            z[row * pred.width + col]
        })
        .sum();
    Ok(total / fixations.len() as f64)
}
