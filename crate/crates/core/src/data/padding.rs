use crate::model::{Fixation, Scanpath, T_MAX_MS};

/// A scanpath in normalized units, padded to a fixed number of steps.
/// Slots at or beyond `len` hold zeros and are flagged invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedSample {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub ts: Vec<f64>,
    pub valid: Vec<f64>,
    pub len: usize,
    /// The source had more than `max_len` fixations and was cut.
    pub truncated: bool,
}

impl PaddedSample {
    pub fn max_len(&self) -> usize {
        self.valid.len()
    }
}

/// Normalizes `x/W`, `y/H`, `t/T_MAX_MS` and pads to `max_len`. Longer
/// scanpaths are truncated with a warning.
pub fn pad_scanpath(s: &Scanpath, max_len: usize) -> PaddedSample {
    let truncated = s.len() > max_len;
    if truncated {
        log::warn!(
            "scanpath for {}/{} ({}) has {} fixations; truncated to {max_len}",
            s.image_id,
            s.task,
            s.subject,
            s.len()
        );
    }
    let len = s.len().min(max_len);
    let mut out = PaddedSample {
        xs: vec![0.0; max_len],
        ys: vec![0.0; max_len],
        ts: vec![0.0; max_len],
        valid: vec![0.0; max_len],
        len,
        truncated,
    };
    for (i, f) in s.fixations.iter().take(len).enumerate() {
        out.xs[i] = f.x / s.width;
        out.ys[i] = f.y / s.height;
        out.ts[i] = f.t / T_MAX_MS;
        out.valid[i] = 1.0;
    }
    out
}

/// Inverse of [`pad_scanpath`] for the valid prefix.
pub fn unpad(p: &PaddedSample, width: f64, height: f64) -> Vec<Fixation> {
    (0..p.len)
        .map(|i| Fixation {
            x: p.xs[i] * width,
            y: p.ys[i] * height,
            t: p.ts[i] * T_MAX_MS,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scanpath(n: usize) -> Scanpath {
        Scanpath {
            image_id: "i".into(),
            task: "cup".into(),
            subject: "1".into(),
            width: 1680.0,
            height: 1050.0,
            fixations: (0..n)
                .map(|i| Fixation {
                    x: 100.0 * i as f64,
                    y: 50.0 * i as f64,
                    t: 120.0 + i as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn validity_masks() {
        assert_eq!(pad_scanpath(&scanpath(3), 7).valid, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(pad_scanpath(&scanpath(7), 7).valid, vec![1.0; 7]);
        let long = pad_scanpath(&scanpath(9), 7);
        assert!(long.truncated);
        assert_eq!(long.len, 7);
        assert!(!pad_scanpath(&scanpath(7), 7).truncated);
    }

    proptest! {
        #[test]
        fn padding_is_lossless(
            fixes in prop::collection::vec((0.0f64..1680.0, 0.0f64..1050.0, 0.0f64..3000.0), 1..=7)
        ) {
            let mut s = scanpath(0);
            s.fixations = fixes.iter().map(|&(x, y, t)| Fixation { x, y, t }).collect();
            let p = pad_scanpath(&s, 7);
            let back = unpad(&p, s.width, s.height);
            prop_assert_eq!(back.len(), s.len());
            for (a, b) in back.iter().zip(&s.fixations) {
                prop_assert!((a.x - b.x).abs() < 1e-9);
                prop_assert!((a.y - b.y).abs() < 1e-9);
                prop_assert!((a.t - b.t).abs() < 1e-9);
            }
        }
    }
}
