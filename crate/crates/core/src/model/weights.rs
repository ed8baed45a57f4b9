use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::nn::AttentionParams;
use crate::tensor::{Graph, NodeId, Tensor};

/// Names of the prediction heads for a variant, in output order.
pub fn head_names(cfg: &ModelConfig) -> Vec<&'static str> {
    let mut names = Vec::new();
    if cfg.variant.regresses_location() {
        names.extend(["mu_x", "mu_y"]);
    }
    if cfg.variant.predicts_duration() {
        names.push("mu_t");
    }
    if cfg.variant.regresses_location() {
        names.extend(["lambda_x", "lambda_y"]);
    }
    if cfg.variant.predicts_duration() {
        names.push("lambda_t");
    }
    names.push("valid");
    if !cfg.variant.regresses_location() {
        names.push("patch");
    }
    names
}

fn head_out(cfg: &ModelConfig, head: &str) -> usize {
    match head {
        "valid" => 2,
        "patch" => cfg.patches(),
        _ => 1,
    }
}

const HEAD_OUTPUT_SCALE: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
enum Init {
    Xavier,
    /// Xavier scaled down, for head outputs that should start near zero.
    SmallXavier,
    Zeros,
    Ones,
    Normal(f64),
}

fn layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = cfg.d;
    let mut specs = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, init: Init| specs.push((name, shape, init));

    let linear = |push: &mut dyn FnMut(String, Vec<usize>, Init), prefix: &str, i: usize, o: usize| {
        push(format!("{prefix}.w"), vec![i, o], Init::Xavier);
        push(format!("{prefix}.b"), vec![o], Init::Zeros);
    };
    let attention = |push: &mut dyn FnMut(String, Vec<usize>, Init), prefix: &str| {
        for p in ["q", "k", "v", "o"] {
            push(format!("{prefix}.w{p}"), vec![d, d], Init::Xavier);
            push(format!("{prefix}.b{p}"), vec![d], Init::Zeros);
        }
    };
    let norm = |push: &mut dyn FnMut(String, Vec<usize>, Init), prefix: &str| {
        push(format!("{prefix}.gamma"), vec![d], Init::Ones);
        push(format!("{prefix}.beta"), vec![d], Init::Zeros);
    };

    linear(&mut push, "input_proj", cfg.channels, d);
    for i in 0..cfg.n_enc {
        attention(&mut push, &format!("enc.{i}.attn"));
        norm(&mut push, &format!("enc.{i}.ln1"));
        linear(&mut push, &format!("enc.{i}.ff1"), d, cfg.ffn);
        linear(&mut push, &format!("enc.{i}.ff2"), cfg.ffn, d);
        norm(&mut push, &format!("enc.{i}.ln2"));
    }
    linear(&mut push, "joint.img", d, d);
    linear(&mut push, "joint.tgt", cfg.d_text, d);
    linear(&mut push, "joint.fuse", 2 * d, d);
    push("queries".into(), vec![cfg.max_len, d], Init::Normal(1.0));
    for i in 0..cfg.n_dec {
        attention(&mut push, &format!("dec.{i}.self"));
        norm(&mut push, &format!("dec.{i}.ln1"));
        attention(&mut push, &format!("dec.{i}.cross"));
        norm(&mut push, &format!("dec.{i}.ln2"));
        linear(&mut push, &format!("dec.{i}.ff1"), d, cfg.ffn);
        linear(&mut push, &format!("dec.{i}.ff2"), cfg.ffn, d);
        norm(&mut push, &format!("dec.{i}.ln3"));
    }
    for head in head_names(cfg) {
        linear(&mut push, &format!("head.{head}.l1"), d, d);
        push(format!("head.{head}.l2.w"), vec![d, head_out(cfg, head)], Init::SmallXavier);
        push(format!("head.{head}.l2.b"), vec![head_out(cfg, head)], Init::Zeros);
    }
    specs
}

/// Named learnable parameters in a fixed order.
///
/// Values are kept representable at 32-bit precision (initialization and
/// every optimizer update round through `f32`), so checkpoints written as
/// 32-bit floats reload bit-identically while the forward pass still runs in
/// 64-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

pub(crate) fn round_f32(v: f64) -> f64 {
    v as f32 as f64
}

impl ModelWeights {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape, init) in layout(cfg) {
            let n: usize = shape.iter().product();
            let data: Vec<f64> = match init {
                Init::Zeros => vec![0.0; n],
                Init::Ones => vec![1.0; n],
                Init::Xavier | Init::SmallXavier => {
                    let mut limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                    if matches!(init, Init::SmallXavier) {
                        limit *= HEAD_OUTPUT_SCALE;
                    }
                    (0..n).map(|_| round_f32(rng.random_range(-limit..limit))).collect()
                }
                Init::Normal(std) => (0..n)
                    .map(|_| round_f32(std * rng.sample::<f64, _>(rand_distr::StandardNormal)))
                    .collect(),
            };
            names.push(name);
            tensors.push(Tensor::from_parts(shape, data));
        }
        Self::from_named(names.into_iter().zip(tensors).collect())
    }

    pub fn from_named(entries: Vec<(String, Tensor)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        let mut names = Vec::with_capacity(entries.len());
        let mut tensors = Vec::with_capacity(entries.len());
        for (i, (name, t)) in entries.into_iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::format("weights", format!("duplicate parameter {name:?}")));
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(Self { names, tensors, index })
    }

    /// Checks that names and shapes match what `cfg` expects.
    pub fn check_layout(&self, cfg: &ModelConfig) -> Result<()> {
        let expected = layout(cfg);
        if expected.len() != self.names.len() {
            return Err(Error::Config(format!(
                "config expects {} parameters, weights hold {}",
                expected.len(),
                self.names.len()
            )));
        }
        for (name, shape, _) in expected {
            let t = self
                .get(&name)
                .ok_or_else(|| Error::Config(format!("missing parameter {name:?}")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Config(format!(
                    "parameter {name:?} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Replaces parameter `i` (in layout order).
    pub fn set(&mut self, i: usize, value: Tensor) -> Result<()> {
        if self.tensors[i].shape() != value.shape() {
            return Err(Error::Dimension(format!(
                "parameter {:?}: {:?} vs {:?}",
                self.names[i],
                self.tensors[i].shape(),
                value.shape()
            )));
        }
        self.tensors[i] = value;
        Ok(())
    }

    /// Records every parameter as a graph leaf.
    pub fn bind(&self, g: &mut Graph, requires_grad: bool) -> Bound<'_> {
        let ids = self.tensors.iter().map(|t| g.leaf(t.clone(), requires_grad)).collect();
        Bound { weights: self, ids }
    }

    /// Binds parameters to leaves that already exist, in layout order.
    pub fn bind_ids(&self, ids: Vec<NodeId>) -> Result<Bound<'_>> {
        if ids.len() != self.tensors.len() {
            return Err(Error::Contract("one node id per parameter required".into()));
        }
        Ok(Bound { weights: self, ids })
    }
}

/// Parameters resolved to graph nodes.
pub struct Bound<'a> {
    weights: &'a ModelWeights,
    ids: Vec<NodeId>,
}

impl Bound<'_> {
    pub fn get(&self, name: &str) -> Result<NodeId> {
        self.weights
            .index
            .get(name)
            .map(|&i| self.ids[i])
            .ok_or_else(|| Error::Contract(format!("no parameter named {name:?}")))
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn linear(&self, prefix: &str) -> Result<(NodeId, NodeId)> {
        Ok((self.get(&format!("{prefix}.w"))?, self.get(&format!("{prefix}.b"))?))
    }

    pub fn norm(&self, prefix: &str) -> Result<(NodeId, NodeId)> {
        Ok((self.get(&format!("{prefix}.gamma"))?, self.get(&format!("{prefix}.beta"))?))
    }

    pub fn attention(&self, prefix: &str) -> Result<AttentionParams> {
        let p = |s: &str| self.get(&format!("{prefix}.{s}"));
        Ok(AttentionParams {
            wq: p("wq")?,
            bq: p("bq")?,
            wk: p("wk")?,
            bk: p("bk")?,
            wv: p("wv")?,
            bv: p("bv")?,
            wo: p("wo")?,
            bo: p("bo")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Variant;

    #[test]
    fn init_is_deterministic_and_f32_representable() {
        let cfg = ModelConfig::tiny();
        let a = ModelWeights::init(&cfg, 3).unwrap();
        let b = ModelWeights::init(&cfg, 3).unwrap();
        assert_eq!(a, b);
        for t in a.tensors() {
            assert!(t.data().iter().all(|&v| round_f32(v) == v));
        }
        a.check_layout(&cfg).unwrap();
    }

    #[test]
    fn seven_heads_for_full_variant() {
        let cfg = ModelConfig::tiny();
        assert_eq!(head_names(&cfg).len(), 7);
        let no_dur = cfg.clone().with_variant(Variant::NoDur);
        assert_eq!(head_names(&no_dur), vec!["mu_x", "mu_y", "lambda_x", "lambda_y", "valid"]);
        let no_reg = cfg.with_variant(Variant::NoReg);
        assert_eq!(head_names(&no_reg), vec!["mu_t", "lambda_t", "valid", "patch"]);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let w = ModelWeights::init(&ModelConfig::tiny(), 0).unwrap();
        let other = ModelConfig { d: 8, heads: 2, ..ModelConfig::tiny() };
        assert!(w.check_layout(&other).is_err());
    }
}
