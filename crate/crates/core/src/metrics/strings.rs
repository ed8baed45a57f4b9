use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scanpath;

pub const DEFAULT_BIN_MS: f64 = 50.0;
pub const MAX_REPEATS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StringSource {
    Cluster,
    Semantic,
}

/// One symbol per fixation (or several once expanded by duration).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixationString {
    pub symbols: Vec<u32>,
    pub source: StringSource,
    pub duration_expanded: bool,
}

impl FixationString {
    pub fn new(symbols: Vec<u32>, source: StringSource) -> Self {
        Self {
            symbols,
            source,
            duration_expanded: false,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Repeats each symbol `ceil(t / bin_ms)` times, at least once and at most
/// [`MAX_REPEATS`] times.
pub fn expand_duration(s: &Scanpath, string: &FixationString, bin_ms: f64) -> Result<FixationString> {
    if !(bin_ms > 0.0) {
        return Err(Error::Config(format!("duration bin must be positive, got {bin_ms}")));
    }
    if s.len() != string.len() {
        return Err(Error::Contract(format!(
            "{} fixations but {} symbols",
            s.len(),
            string.len()
        )));
    }
    let symbols = s
        .fixations
        .iter()
        .zip(&string.symbols)
        .flat_map(|(f, &sym)| std::iter::repeat_n(sym, repeats(f.t, bin_ms)))
        .collect();
    Ok(FixationString {
        symbols,
        source: string.source,
        duration_expanded: true,
    })
}

pub fn repeats(t_ms: f64, bin_ms: f64) -> usize {
    let n = (t_ms / bin_ms).ceil();
    if n.is_nan() || n < 1.0 {
        1
    } else if n >= MAX_REPEATS as f64 {
        MAX_REPEATS
    } else {
        n as usize
    }
}

/// Maps labels to dense symbol ids in order of first appearance across
/// `strings`, so equal labels share a symbol.
pub fn intern<'a>(strings: &[&'a [String]]) -> Vec<FixationString> {
    let mut table: Vec<&'a str> = Vec::new();
    strings
        .iter()
        .map(|labels| {
            let symbols = labels
                .iter()
                .map(|l| match table.iter().position(|t| *t == l.as_str()) {
                    Some(i) => i as u32,
                    None => {
                        table.push(l.as_str());
                        (table.len() - 1) as u32
                    }
                })
                .collect();
            FixationString::new(symbols, StringSource::Semantic)
        })
        .collect()
}
