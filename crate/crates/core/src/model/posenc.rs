//! Fixed sinusoidal 2-D positional encodings.
//!
//! The first `d/2` channels encode the row, the last `d/2` the column. Each
//! half interleaves `sin`/`cos` pairs at geometric frequencies
//! `10000^(-4k/d)`, `k = 0..d/4`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check_width(d: usize) -> Result<()> {
    if d == 0 || !d.is_multiple_of(4) {
        return Err(Error::Config(format!("positional encoding width {d} must be a positive multiple of 4")));
    }
    Ok(())
}

/// Encoding of a (possibly fractional) grid position.
pub fn encode_position(row: f64, col: f64, d: usize) -> Result<Vec<f64>> {
    check_width(d)?;
    let quarter = d / 4;
    let mut out = vec![0.0; d];
    for (half, pos) in [row, col].into_iter().enumerate() {
        let base = half * d / 2;
        for k in 0..quarter {
            let freq = 10000f64.powf(-((4 * k) as f64) / d as f64);
            out[base + 2 * k] = (pos * freq).sin();
            out[base + 2 * k + 1] = (pos * freq).cos();
        }
    }
    Ok(out)
}

/// `hw×d` table for every patch of an `h×w` grid, row-major over patches.
pub fn positional_encoding_2d(h: usize, w: usize, d: usize) -> Result<Tensor> {
    check_width(d)?;
    let mut data = Vec::with_capacity(h * w * d);
    for r in 0..h {
        for c in 0..w {
            data.extend(encode_position(r as f64, c as f64, d)?);
        }
    }
    Tensor::new(vec![h * w, d], data)
}

/// Encoding of a normalized image location. Patch centers map onto integer
/// grid positions, so a fixation at the center of patch `(r, c)` gets the
/// same code as that patch.
pub fn encode_normalized(x: f64, y: f64, h: usize, w: usize, d: usize) -> Result<Vec<f64>> {
    encode_position(y * h as f64 - 0.5, x * w as f64 - 0.5, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_sin_zero_cos_one() {
        let e = encode_position(0.0, 0.0, 16).unwrap();
        for pair in e.chunks(2) {
            assert_eq!(pair, &[0.0, 1.0]);
        }
    }

    #[test]
    fn width_must_be_multiple_of_four() {
        assert!(matches!(positional_encoding_2d(2, 2, 6), Err(Error::Config(_))));
    }

    #[test]
    fn patch_center_matches_grid_code() {
        let table = positional_encoding_2d(4, 5, 8).unwrap();
        let e = encode_normalized((2.0 + 0.5) / 5.0, (3.0 + 0.5) / 4.0, 4, 5, 8).unwrap();
        let row = table.row(3 * 5 + 2);
        for (a, b) in e.iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn distinct_positions_have_distinct_codes() {
        // Exhaustive over a 64×64 grid at the smallest width.
        let (h, w, d) = (64, 64, 8);
        let table = positional_encoding_2d(h, w, d).unwrap();
        let mut rows: Vec<Vec<u64>> = (0..h * w)
            .map(|p| table.row(p).iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), h * w);
        // Bit patterns could differ by rounding noise only; require a real gap.
        let mut min_gap = f64::INFINITY;
        for a in 0..h * w {
            for b in (a + 1)..h * w {
                let gap = table
                    .row(a)
                    .iter()
                    .zip(table.row(b))
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                min_gap = min_gap.min(gap);
            }
        }
        assert!(min_gap > 1e-4, "{min_gap}");
    }
}
