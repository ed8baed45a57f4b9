//! Single-case decoding latency, parallel versus sequential.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureBundle, Gazeformer, PredictOptions, SampleFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Parallel,
    Autoregressive,
}

impl DecodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::Parallel => "parallel",
            DecodeMode::Autoregressive => "autoregressive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub repeats: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// Nearest-rank percentile of already sorted values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn timing_stats(samples_ms: &[f64]) -> Result<TimingStats> {
    if samples_ms.is_empty() {
        return Err(Error::Contract("no timing samples".into()));
    }
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(TimingStats {
        repeats: n,
        mean_ms: sorted.iter().sum::<f64>() / n as f64,
        median_ms: median,
        p95_ms: percentile(&sorted, 95.0),
    })
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// One timed inference producing exactly `length` fixations.
pub fn run_once(
    model: &Gazeformer,
    bundle: &FeatureBundle,
    frame: &SampleFrame,
    mode: DecodeMode,
    length: usize,
    seed: u64,
) -> Result<f64> {
    let opts = PredictOptions {
        n_samples: 1,
        seed,
        ..PredictOptions::default()
    };
    let start = Instant::now();
    let path = match mode {
        DecodeMode::Parallel => model.predict_forced_length(bundle, frame, length, &opts)?,
        DecodeMode::Autoregressive => model.predict_autoregressive(bundle, frame, &opts, Some(length))?,
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    debug_assert_eq!(path.len(), length);
    Ok(elapsed)
}

pub type BenchKey = (DecodeMode, usize);

/// Times every `(mode, length)` combination `repeats` times after `warmup`
/// untimed rounds. Rounds cycle through all combinations so slow drifts in
/// machine load affect them alike.
pub fn bench_grid(
    model: &Gazeformer,
    bundle: &FeatureBundle,
    frame: &SampleFrame,
    modes: &[DecodeMode],
    lengths: &[usize],
    repeats: usize,
    warmup: usize,
) -> Result<BTreeMap<BenchKey, Vec<f64>>> {
    let mut out: BTreeMap<BenchKey, Vec<f64>> = BTreeMap::new();
    for round in 0..warmup + repeats {
        for &mode in modes {
            for &len in lengths {
                let ms = run_once(model, bundle, frame, mode, len, round as u64)?;
                if round >= warmup {
                    out.entry((mode, len)).or_default().push(ms);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: DecodeMode,
    pub length: usize,
    pub stats: TimingStats,
    /// Sequential median over parallel median at this length.
    pub speedup: Option<f64>,
}

pub fn summarize(grid: &BTreeMap<BenchKey, Vec<f64>>) -> Result<Vec<BenchRow>> {
    let stats: BTreeMap<BenchKey, TimingStats> = grid
        .iter()
        .map(|(k, v)| timing_stats(v).map(|s| (*k, s)))
        .collect::<Result<_>>()?;
    Ok(stats
        .iter()
        .map(|(&(mode, length), s)| {
            let par = stats.get(&(DecodeMode::Parallel, length));
            let seq = stats.get(&(DecodeMode::Autoregressive, length));
            let speedup = match (par, seq) {
                (Some(p), Some(q)) => Some(q.median_ms / p.median_ms),
                _ => None,
            };
            BenchRow {
                mode,
                length,
                stats: *s,
                speedup,
            }
        })
        .collect())
}

pub fn write_bench_csv<W: std::io::Write>(w: W, rows: &[BenchRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["mode", "length", "repeats", "mean_ms", "median_ms", "p95_ms", "speedup"])?;
    for r in rows {
        out.write_record([
            r.mode.as_str().to_string(),
            r.length.to_string(),
            r.stats.repeats.to_string(),
            format!("{:.4}", r.stats.mean_ms),
            format!("{:.4}", r.stats.median_ms),
            format!("{:.4}", r.stats.p95_ms),
            r.speedup.map_or_else(String::new, |s| format!("{s:.3}")),
        ])?;
    }
    out.flush().map_err(|e| Error::format("bench csv", e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_on_known_samples() {
        let s = timing_stats(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.mean_ms, s.median_ms, s.p95_ms), (3.0, 3.0, 5.0));
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = timing_stats(&v).unwrap();
        assert_eq!((s.median_ms, s.p95_ms), (50.5, 95.0));
        assert!(timing_stats(&[]).is_err());
    }

    #[test]
    fn cov_of_constant_is_zero() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), 0.0);
        assert!((coefficient_of_variation(&[1.0, 3.0]) - 0.5).abs() < 1e-12);
    }
}
