//! String comparison by global alignment and by edit distance.

use crate::error::{Error, Result};

/// Needleman–Wunsch scoring constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scoring {
    pub matched: f64,
    pub mismatch: f64,
    pub gap: f64,
}

/// Match 1, mismatch 0, gap 0: the optimum counts aligned matches.
pub const SEQUENCE_SCORING: Scoring = Scoring {
    matched: 1.0,
    mismatch: 0.0,
    gap: 0.0,
};

/// Best global alignment score.
pub fn needleman_wunsch<T: PartialEq>(a: &[T], b: &[T], s: Scoring) -> f64 {
    let mut prev: Vec<f64> = (0..=b.len()).map(|j| j as f64 * s.gap).collect();
    let mut cur = vec![0.0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = (i + 1) as f64 * s.gap;
        for (j, y) in b.iter().enumerate() {
            let diag = prev[j] + if x == y { s.matched } else { s.mismatch };
            cur[j + 1] = diag.max(prev[j + 1] + s.gap).max(cur[j] + s.gap);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Aligned matches divided by the longer length, in `[0, 1]`.
pub fn sequence_score<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Contract("sequence score needs two non-empty strings".into()));
    }
    Ok(needleman_wunsch(a, b, SEQUENCE_SCORING) / a.len().max(b.len()) as f64)
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
