use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::{Fixation, Scanpath};

/// One record of the dataset JSON array. Field names follow the public
/// search-gaze releases so those files load unchanged; extra fields are
/// ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    #[serde(deserialize_with = "string_or_number")]
    pub subject: String,
    pub task: String,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    #[serde(rename = "Y")]
    pub y: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    pub img_w: u32,
    pub img_h: u32,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        I(i64),
        F(f64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::I(i) => i.to_string(),
        Id::F(f) => f.to_string(),
    })
}

impl Record {
    pub fn into_scanpath(self, index: usize) -> Result<Scanpath> {
        let bad = |message: String| Error::Record { index, message };
        if self.x.len() != self.y.len() || self.x.len() != self.t.len() {
            return Err(bad(format!(
                "X/Y/T lengths differ ({}, {}, {})",
                self.x.len(),
                self.y.len(),
                self.t.len()
            )));
        }
        if self.x.is_empty() {
            return Err(bad("scanpath has no fixations".into()));
        }
        if self.img_w == 0 || self.img_h == 0 {
            return Err(bad("image size must be positive".into()));
        }
        if self.task.trim().is_empty() {
            return Err(bad("empty task".into()));
        }
        let (w, h) = (f64::from(self.img_w), f64::from(self.img_h));
        let mut fixations = Vec::with_capacity(self.x.len());
        for (i, ((&x, &y), &t)) in self.x.iter().zip(&self.y).zip(&self.t).enumerate() {
            if !(x.is_finite() && y.is_finite() && t.is_finite()) {
                return Err(bad(format!("fixation {i} has non-finite values")));
            }
            if !(0.0..=w).contains(&x) || !(0.0..=h).contains(&y) {
                return Err(bad(format!("fixation {i} at ({x}, {y}) outside {w}×{h} image")));
            }
            if t < 0.0 {
                return Err(bad(format!("fixation {i} has negative duration {t}")));
            }
            fixations.push(Fixation { x, y, t });
        }
        Ok(Scanpath {
            image_id: self.name,
            task: self.task,
            subject: self.subject,
            width: w,
            height: h,
            fixations,
        })
    }

    pub fn from_scanpath(s: &Scanpath) -> Self {
        Record {
            name: s.image_id.clone(),
            subject: s.subject.clone(),
            task: s.task.clone(),
            x: s.fixations.iter().map(|f| f.x).collect(),
            y: s.fixations.iter().map(|f| f.y).collect(),
            t: s.fixations.iter().map(|f| f.t).collect(),
            img_w: s.width as u32,
            img_h: s.height as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageInfo {
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Scanpath>,
    pub categories: BTreeSet<String>,
    pub image_index: BTreeMap<String, ImageInfo>,
}

impl Dataset {
    pub fn from_scanpaths(samples: Vec<Scanpath>) -> Result<Self> {
        let mut categories = BTreeSet::new();
        let mut image_index = BTreeMap::new();
        for (index, s) in samples.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::Record {
                    index,
                    message: "scanpath has no fixations".into(),
                });
            }
            categories.insert(s.task.clone());
            let info = ImageInfo {
                width: s.width,
                height: s.height,
            };
            if let Some(prev) = image_index.insert(s.image_id.clone(), info) {
                if prev != info {
                    return Err(Error::Record {
                        index,
                        message: format!("image {:?} declared with two different sizes", s.image_id),
                    });
                }
            }
        }
        Ok(Self {
            samples,
            categories,
            image_index,
        })
    }

    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        let samples = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.into_scanpath(i))
            .collect::<Result<Vec<_>>>()?;
        Self::from_scanpaths(samples)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<Record> = serde_json::from_str(text)?;
        Self::from_records(records)
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<Record> = self.samples.iter().map(Record::from_scanpath).collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Keeps only samples whose image id is in `images`.
    pub fn restrict_to_images(&self, images: &BTreeSet<String>) -> Result<Self> {
        Self::from_scanpaths(
            self.samples
                .iter()
                .filter(|s| images.contains(&s.image_id))
                .cloned()
                .collect(),
        )
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Dataset::from_json(&text)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, ds.to_json()?).map_err(|e| Error::io(path, e))
}
