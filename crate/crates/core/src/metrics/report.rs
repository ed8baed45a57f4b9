use std::io::Write;
use std::path::Path;

use super::evaluate::{MetricReport, COLUMNS};
use crate::error::{Error, Result};

/// Missing values print as this in the CSV.
pub const MISSING: &str = "-";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.6}"))
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per metric column: `metric,duration,aggregate,<category...>`.
    /// `duration` is `w/o Dur`, `w/ Dur`, or `n/a` for metrics without a
    /// duration variant.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["metric".to_string(), "duration".into(), "aggregate".into()];
        header.extend(self.categories.keys().cloned());
        out.write_record(&header)?;
        for c in COLUMNS {
            let duration = match c.duration {
                Some(false) => "w/o Dur",
                Some(true) => "w/ Dur",
                None => "n/a",
            };
            let mut row = vec![c.name.to_string(), duration.to_string(), cell(self.aggregate[c.key])];
            row.extend(self.categories.values().map(|cat| cell(cat.scores[c.key])));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::format("report csv", e.to_string()))?;
        Ok(())
    }

    pub fn save(&self, json_path: &Path, csv_path: &Path) -> Result<()> {
        std::fs::write(json_path, self.to_json()?).map_err(|e| Error::io(json_path, e))?;
        let f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}
