//! Target-category embeddings.
//!
//! Either a table of precomputed language-model vectors loaded from JSON
//! (`{"name": [f32, ...], ...}`), or deterministic pseudo-random vectors
//! derived from a hash of the name.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hashing::{hash_parts, SplitMix};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub enum TargetEmbedder {
    Table {
        vectors: BTreeMap<String, Vec<f64>>,
        dim: usize,
        /// Seed for the hash fallback; `None` makes unknown names an error.
        fallback_seed: Option<u64>,
    },
    Hash { dim: usize, seed: u64 },
}

/// Lowercases and collapses whitespace so `"Stop  Sign"` and `"stop sign"`
/// share an embedding.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Unit-variance uniform entries keyed by `(name, seed)`.
pub fn hash_embedding(name: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut stream = SplitMix::new(hash_parts(&["target", &normalize_name(name)], seed));
    let scale = 3f64.sqrt();
    (0..dim).map(|_| scale * stream.next_signed()).collect()
}

impl TargetEmbedder {
    pub fn hash(dim: usize, seed: u64) -> Self {
        TargetEmbedder::Hash { dim, seed }
    }

    pub fn from_table(vectors: BTreeMap<String, Vec<f64>>, fallback_seed: Option<u64>) -> Result<Self> {
        let mut normalized = BTreeMap::new();
        let mut dim = None;
        for (name, v) in vectors {
            if *dim.get_or_insert(v.len()) != v.len() {
                return Err(Error::format("embedding table", format!("{name:?} has length {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::format("embedding table", format!("{name:?} has non-finite entries")));
            }
            normalized.insert(normalize_name(&name), v);
        }
        let dim = dim.ok_or_else(|| Error::format("embedding table", "no entries"))?;
        Ok(TargetEmbedder::Table {
            vectors: normalized,
            dim,
            fallback_seed,
        })
    }

    pub fn load_table(path: &Path, fallback_seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let vectors: BTreeMap<String, Vec<f64>> = serde_json::from_str(&text)?;
        Self::from_table(vectors, fallback_seed)
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetEmbedder::Table { dim, .. } | TargetEmbedder::Hash { dim, .. } => *dim,
        }
    }

    /// Embeds a target name. Multi-word names are a single key.
    pub fn embed(&self, name: &str) -> Result<Tensor> {
        if name.trim().is_empty() {
            return Err(Error::Contract("target name must be non-empty".into()));
        }
        let v = match self {
            TargetEmbedder::Hash { dim, seed } => hash_embedding(name, *dim, *seed),
            TargetEmbedder::Table {
                vectors,
                dim,
                fallback_seed,
            } => match (vectors.get(&normalize_name(name)), fallback_seed) {
                (Some(v), _) => v.clone(),
                (None, Some(seed)) => hash_embedding(name, *dim, *seed),
                (None, None) => {
                    return Err(Error::UnknownTarget {
                        name: name.to_string(),
                        available: vectors.keys().cloned().collect::<Vec<_>>().join(", "),
                    })
                }
            },
        };
        Ok(Tensor::vector(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn deterministic_and_multi_word() {
        let e = TargetEmbedder::hash(768, 1);
        assert_eq!(e.embed("cup").unwrap(), e.embed("cup").unwrap());
        let s = e.embed("stop sign").unwrap();
        assert_eq!(s.numel(), 768);
        assert_eq!(s, e.embed("Stop  Sign").unwrap());
        assert!(e.embed("  ").is_err());
    }

    #[test]
    fn distinct_names_are_nearly_orthogonal() {
        let e = TargetEmbedder::hash(768, 0);
        let cup = e.embed("cup").unwrap();
        let car = e.embed("car").unwrap();
        assert!(cosine(cup.data(), car.data()).abs() < 0.5);

        // Average over many pairs as well.
        let names: Vec<String> = (0..40).map(|i| format!("object {i}")).collect();
        let mut total = 0.0;
        let mut n = 0;
        for i in 0..names.len() {
            for j in (i + 1)..names.len() {
                total += cosine(e.embed(&names[i]).unwrap().data(), e.embed(&names[j]).unwrap().data()).abs();
                n += 1;
            }
        }
        assert!(total / (n as f64) < 0.1);
    }

    #[test]
    fn table_lookup_and_fallback() {
        let mut t = BTreeMap::new();
        t.insert("Cup".to_string(), vec![1.0, 2.0]);
        t.insert("car".to_string(), vec![3.0, 4.0]);
        let strict = TargetEmbedder::from_table(t.clone(), None).unwrap();
        assert_eq!(strict.embed("cup").unwrap().data(), &[1.0, 2.0]);
        match strict.embed("mug") {
            Err(Error::UnknownTarget { available, .. }) => assert_eq!(available, "car, cup"),
            other => panic!("{other:?}"),
        }
        let lenient = TargetEmbedder::from_table(t, Some(9)).unwrap();
        assert_eq!(lenient.embed("mug").unwrap().numel(), 2);

        let mut bad = BTreeMap::new();
        bad.insert("a".to_string(), vec![1.0]);
        bad.insert("b".to_string(), vec![1.0, 2.0]);
        assert!(TargetEmbedder::from_table(bad, None).is_err());
    }
}
