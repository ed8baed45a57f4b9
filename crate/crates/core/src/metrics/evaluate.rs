//! Scores model scanpaths against human scanpaths per image–target case
//! and aggregates per category and overall.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alignment::{edit_distance, sequence_score};
use super::cluster::{cluster_strings, DEFAULT_BANDWIDTH};
use super::multimatch::multimatch;
use super::saliency::{cc, fixation_map, nss, DEFAULT_SIGMA};
use super::strings::{expand_duration, intern, FixationString, DEFAULT_BIN_MS};
use crate::data::{fixations_to_labels, LabelGrid};
use crate::error::{Error, Result};
use crate::model::Scanpath;

/// Column metadata: key in the JSON report, display name, duration group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricColumn {
    pub key: &'static str,
    pub name: &'static str,
    pub duration: Option<bool>,
}

const fn col(key: &'static str, name: &'static str, duration: Option<bool>) -> MetricColumn {
    MetricColumn { key, name, duration }
}

pub const COLUMNS: [MetricColumn; 15] = [
    col("ss", "SS", Some(false)),
    col("ss_dur", "SS", Some(true)),
    col("fed", "FED", Some(false)),
    col("fed_dur", "FED", Some(true)),
    col("semss", "SemSS", Some(false)),
    col("semss_dur", "SemSS", Some(true)),
    col("semfed", "SemFED", Some(false)),
    col("semfed_dur", "SemFED", Some(true)),
    col("mm", "MM", None),
    col("mm_shape", "MM shape", None),
    col("mm_direction", "MM direction", None),
    col("mm_length", "MM length", None),
    col("mm_position", "MM position", None),
    col("cc", "CC", None),
    col("nss", "NSS", None),
];

pub type Scores = BTreeMap<String, Option<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub bandwidth: f64,
    pub bin_ms: f64,
    pub sigma: f64,
    /// Compute the duration-expanded string metrics.
    pub durations: bool,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bandwidth: DEFAULT_BANDWIDTH,
            bin_ms: DEFAULT_BIN_MS,
            sigma: DEFAULT_SIGMA,
            durations: true,
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub image_id: String,
    pub task: String,
    pub n_model: usize,
    pub n_human: usize,
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    /// Number of image–target cases.
    pub cases: usize,
    pub scores: Scores,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `image/task` keys with model scanpaths but no human scanpaths.
    pub unmatched_model: Vec<String>,
    /// `image/task` keys with human scanpaths but no model scanpaths.
    pub unmatched_human: Vec<String>,
    /// Images evaluated without a label grid.
    pub missing_labels: Vec<String>,
    /// Fixations that fell outside their label grid and were clamped.
    pub clamped_label_lookups: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: EvalConfig,
    pub aggregate: Scores,
    pub categories: BTreeMap<String, CategoryReport>,
    pub cases: Vec<CaseReport>,
    pub diagnostics: Diagnostics,
}

/// Sum with a fixed balanced tree, independent of thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Mean over the present values, `None` when there are none.
pub fn mean_present(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    (!present.is_empty()).then(|| pairwise_sum(&present) / present.len() as f64)
}

/// `Σ w·s / Σ w` over `(score, weight)` pairs.
pub fn weighted_mean(items: &[(f64, f64)]) -> Option<f64> {
    let weights: Vec<f64> = items.iter().map(|&(_, w)| w).collect();
    let total = pairwise_sum(&weights);
    if items.is_empty() || total <= 0.0 {
        return None;
    }
    let products: Vec<f64> = items.iter().map(|&(s, w)| s * w).collect();
    Some(pairwise_sum(&products) / total)
}

struct PairScores {
    values: BTreeMap<&'static str, Option<f64>>,
}

fn string_scores(
    a: &FixationString,
    b: &FixationString,
    ss_key: &'static str,
    fed_key: &'static str,
    out: &mut BTreeMap<&'static str, Option<f64>>,
) -> Result<()> {
    out.insert(ss_key, Some(sequence_score(&a.symbols, &b.symbols)?));
    out.insert(fed_key, Some(edit_distance(&a.symbols, &b.symbols) as f64));
    Ok(())
}

fn score_pair(
    m: &Scanpath,
    h: &Scanpath,
    grid: Option<&LabelGrid>,
    cfg: &EvalConfig,
    clamped: &mut usize,
) -> Result<PairScores> {
    let mut v: BTreeMap<&'static str, Option<f64>> = COLUMNS.iter().map(|c| (c.key, None)).collect();

    let strings = cluster_strings(&[m, h], cfg.bandwidth)?;
    string_scores(&strings[0], &strings[1], "ss", "fed", &mut v)?;
    if cfg.durations {
        let a = expand_duration(m, &strings[0], cfg.bin_ms)?;
        let b = expand_duration(h, &strings[1], cfg.bin_ms)?;
        string_scores(&a, &b, "ss_dur", "fed_dur", &mut v)?;
    }

    if let Some(grid) = grid {
        let lm = fixations_to_labels(m, grid);
        let lh = fixations_to_labels(h, grid);
        *clamped += lm.clamped + lh.clamped;
        let sem = intern(&[&lm.labels, &lh.labels]);
        string_scores(&sem[0], &sem[1], "semss", "semfed", &mut v)?;
        if cfg.durations {
            let a = expand_duration(m, &sem[0], cfg.bin_ms)?;
            let b = expand_duration(h, &sem[1], cfg.bin_ms)?;
            string_scores(&a, &b, "semss_dur", "semfed_dur", &mut v)?;
        }
    }

    let mm = multimatch(m, h, h.width, h.height)?;
    v.insert("mm", Some(mm.mean()));
    v.insert("mm_shape", mm.shape);
    v.insert("mm_direction", mm.direction);
    v.insert("mm_length", mm.length);
    v.insert("mm_position", Some(mm.position));
    Ok(PairScores { values: v })
}

struct CaseOutput {
    report: CaseReport,
    clamped: usize,
    missing_labels: bool,
}

fn score_case(
    key: &(String, String),
    model: &[&Scanpath],
    human: &[&Scanpath],
    labels: Option<&BTreeMap<String, LabelGrid>>,
    cfg: &EvalConfig,
) -> Result<CaseOutput> {
    let grid = labels.and_then(|l| l.get(&key.0));
    let mut clamped = 0;
    let mut per_pair: Vec<PairScores> = Vec::with_capacity(model.len() * human.len());
    for m in model {
        for h in human {
            per_pair.push(score_pair(m, h, grid, cfg, &mut clamped)?);
        }
    }
    let mut scores: Scores = COLUMNS
        .iter()
        .map(|c| {
            let vals: Vec<Option<f64>> = per_pair.iter().map(|p| p.values[c.key]).collect();
            (c.key.to_string(), mean_present(&vals))
        })
        .collect();

    let (h, w) = (human[0].height.round().max(1.0) as usize, human[0].width.round().max(1.0) as usize);
    let model_map = fixation_map(model, h, w, cfg.sigma)?;
    let human_map = fixation_map(human, h, w, cfg.sigma)?;
    let human_points: Vec<(f64, f64)> = human.iter().flat_map(|p| p.points()).collect();
    scores.insert("cc".into(), defined(cc(&model_map, &human_map))?);
    scores.insert("nss".into(), defined(nss(&model_map, &human_points))?);

    Ok(CaseOutput {
        report: CaseReport {
            image_id: key.0.clone(),
            task: key.1.clone(),
            n_model: model.len(),
            n_human: human.len(),
            scores,
        },
        clamped,
        missing_labels: labels.is_some() && grid.is_none(),
    })
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(msg)) => {
            log::warn!("{msg}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn group(paths: &[Scanpath]) -> BTreeMap<(String, String), Vec<&Scanpath>> {
    let mut out: BTreeMap<(String, String), Vec<&Scanpath>> = BTreeMap::new();
    for p in paths.iter().filter(|p| !p.is_empty()) {
        out.entry((p.image_id.clone(), p.task.clone())).or_default().push(p);
    }
    out
}

/// Per case, every model scanpath is scored against every human scanpath
/// and the pair scores averaged; CC and NSS compare the pooled model map
/// with the pooled human fixations. Category scores average their cases,
/// and the overall score weights each category by its case count.
pub fn evaluate(
    model: &[Scanpath],
    human: &[Scanpath],
    labels: Option<&BTreeMap<String, LabelGrid>>,
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    let model_groups = group(model);
    let human_groups = group(human);
    let mut diagnostics = Diagnostics::default();
    for key in model_groups.keys().filter(|k| !human_groups.contains_key(*k)) {
        log::warn!("no human scanpaths for {}/{}; excluded", key.0, key.1);
        diagnostics.unmatched_model.push(format!("{}/{}", key.0, key.1));
    }
    for key in human_groups.keys().filter(|k| !model_groups.contains_key(*k)) {
        diagnostics.unmatched_human.push(format!("{}/{}", key.0, key.1));
    }
    let keys: Vec<&(String, String)> = model_groups.keys().filter(|k| human_groups.contains_key(*k)).collect();

    let run = || -> Vec<Result<CaseOutput>> {
        keys.par_iter()
            .map(|k| score_case(k, &model_groups[*k], &human_groups[*k], labels, cfg))
            .collect()
    };
    let outputs = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut cases = Vec::with_capacity(outputs.len());
    for o in outputs {
        let o = o?;
        diagnostics.clamped_label_lookups += o.clamped;
        if o.missing_labels && !diagnostics.missing_labels.contains(&o.report.image_id) {
            diagnostics.missing_labels.push(o.report.image_id.clone());
        }
        cases.push(o.report);
    }

    let mut by_category: BTreeMap<String, Vec<&CaseReport>> = BTreeMap::new();
    for c in &cases {
        by_category.entry(c.task.clone()).or_default().push(c);
    }
    let categories: BTreeMap<String, CategoryReport> = by_category
        .into_iter()
        .map(|(cat, cs)| {
            let scores = COLUMNS
                .iter()
                .map(|col| {
                    let vals: Vec<Option<f64>> = cs.iter().map(|c| c.scores[col.key]).collect();
                    (col.key.to_string(), mean_present(&vals))
                })
                .collect();
            (cat, CategoryReport { cases: cs.len(), scores })
        })
        .collect();
    let aggregate = COLUMNS
        .iter()
        .map(|col| {
            let items: Vec<(f64, f64)> = categories
                .values()
                .filter_map(|c| c.scores[col.key].map(|s| (s, c.cases as f64)))
                .collect();
            (col.key.to_string(), weighted_mean(&items))
        })
        .collect();

    Ok(MetricReport {
        config: cfg.clone(),
        aggregate,
        categories,
        cases,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Fixation;

    pub(crate) fn path(image: &str, task: &str, pts: &[(f64, f64, f64)]) -> Scanpath {
        Scanpath {
            image_id: image.into(),
            task: task.into(),
            subject: "h".into(),
            width: 320.0,
            height: 240.0,
            fixations: pts.iter().map(|&(x, y, t)| Fixation { x, y, t }).collect(),
        }
    }

    #[test]
    fn pairwise_sum_matches_plain_sum_on_exact_values() {
        let v: Vec<f64> = (0..37).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn weighted_mean_of_two_categories() {
        let (s1, s2) = (0.3, 0.7);
        let got = weighted_mean(&[(s1, 1.0), (s2, 3.0)]).unwrap();
        assert!((got - (1.0 * s1 + 3.0 * s2) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn identical_scanpaths_score_perfectly() {
        let h = path("a", "cup", &[(160.0, 120.0, 200.0), (50.0, 40.0, 300.0), (250.0, 200.0, 120.0)]);
        let mut m = h.clone();
        m.subject = "model".into();
        let report = evaluate(&[m.clone(), m], &[h], None, &EvalConfig::default()).unwrap();
        let a = &report.aggregate;
        assert_eq!(a["ss"], Some(1.0));
        assert_eq!(a["ss_dur"], Some(1.0));
        assert_eq!(a["fed"], Some(0.0));
        for k in ["mm_shape", "mm_direction", "mm_length", "mm_position", "mm"] {
            assert_eq!(a[k], Some(1.0), "{k}");
        }
        assert!((a["cc"].unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(a["semss"], None);
    }

    #[test]
    fn durations_off_leaves_duration_columns_empty() {
        let h = path("a", "cup", &[(160.0, 120.0, 200.0), (50.0, 40.0, 300.0)]);
        let cfg = EvalConfig { durations: false, ..EvalConfig::default() };
        let report = evaluate(std::slice::from_ref(&h), std::slice::from_ref(&h), None, &cfg).unwrap();
        for c in COLUMNS.iter().filter(|c| c.duration == Some(true)) {
            assert_eq!(report.aggregate[c.key], None);
        }
        assert!(report.aggregate["ss"].is_some());
    }

    #[test]
    fn unmatched_cases_are_reported() {
        let h = path("a", "cup", &[(10.0, 10.0, 100.0)]);
        let m = path("b", "cup", &[(10.0, 10.0, 100.0)]);
        let report = evaluate(&[m, h.clone()], &[h], None, &EvalConfig::default()).unwrap();
        assert_eq!(report.diagnostics.unmatched_model, vec!["b/cup".to_string()]);
        assert_eq!(report.cases.len(), 1);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut model = Vec::new();
        let mut human = Vec::new();
        for i in 0..6 {
            let id = format!("img{i}");
            let task = if i % 2 == 0 { "cup" } else { "fork" };
            human.push(path(&id, task, &[(100.0 + i as f64, 80.0, 200.0), (200.0, 150.0 - i as f64, 250.0)]));
            model.push(path(&id, task, &[(90.0, 70.0 + i as f64, 180.0), (210.0, 140.0, 260.0), (20.0, 20.0, 90.0)]));
        }
        let one = evaluate(&model, &human, None, &EvalConfig { workers: Some(1), ..EvalConfig::default() }).unwrap();
        let four = evaluate(&model, &human, None, &EvalConfig { workers: Some(4), ..EvalConfig::default() }).unwrap();
        assert_eq!(one.aggregate, four.aggregate);
        assert_eq!(one.cases, four.cases);
    }
}
