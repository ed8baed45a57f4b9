//! The multitask loss: L1 regression on reparameterized samples over the
//! valid prefix plus validity negative log-likelihood over all steps.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::PaddedSample;
use crate::error::{Error, Result};
use crate::model::layers::{forward, HeadNodes};
use crate::model::weights::Bound;
use crate::model::{FeatureBundle, InitialFixation, ModelConfig};
use crate::tensor::{Graph, NodeId, Tensor};

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Standard-normal noise for every step of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsBlock {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
}

impl EpsBlock {
    pub fn zeros(steps: usize) -> Self {
        Self {
            x: vec![0.0; steps],
            y: vec![0.0; steps],
            t: vec![0.0; steps],
        }
    }

    pub fn sample<R: Rng + ?Sized>(steps: usize, rng: &mut R) -> Self {
        let mut draw = || -> Vec<f64> { (0..steps).map(|_| StandardNormal.sample(rng)).collect() };
        let x = draw();
        let y = draw();
        let t = draw();
        Self { x, y, t }
    }
}

/// Per-step predictions entering the regression loss, as `steps×1` nodes.
/// `x`/`y` are absent for the patch-classification variant, `t` when
/// durations are not predicted.
#[derive(Clone, Copy, Debug)]
pub struct SampledNodes {
    pub x: Option<NodeId>,
    pub y: Option<NodeId>,
    pub t: Option<NodeId>,
    pub patch_probs: Option<NodeId>,
}

fn reparam(g: &mut Graph, mu: NodeId, log_var: NodeId, eps: &[f64]) -> Result<NodeId> {
    let half = g.scale(log_var, 0.5);
    let std = g.exp(half);
    let e = g.constant(Tensor::matrix(eps.len(), 1, eps.to_vec())?);
    let noise = g.mul(std, e)?;
    g.add(mu, noise)
}

/// `mu + eps * exp(0.5 * lambda)` on the graph so gradients reach both.
pub fn sample_nodes(g: &mut Graph, heads: &HeadNodes, eps: &EpsBlock) -> Result<SampledNodes> {
    let mut pick = |mu: Option<NodeId>, lv: Option<NodeId>, e: &[f64]| -> Result<Option<NodeId>> {
        match (mu, lv) {
            (Some(mu), Some(lv)) => reparam(g, mu, lv, e).map(Some),
            _ => Ok(None),
        }
    };
    Ok(SampledNodes {
        x: pick(heads.mu_x, heads.lambda_x, &eps.x)?,
        y: pick(heads.mu_y, heads.lambda_y, &eps.y)?,
        t: pick(heads.mu_t, heads.lambda_t, &eps.t)?,
        patch_probs: heads.patch_probs,
    })
}

fn l1_prefix(g: &mut Graph, pred: NodeId, gt: &[f64], len: usize) -> Result<NodeId> {
    let head = g.slice_rows(pred, 0, len)?;
    let target = g.constant(Tensor::matrix(len, 1, gt[..len].to_vec())?);
    let diff = g.sub(head, target)?;
    let abs = g.abs(diff);
    Ok(g.sum(abs))
}

/// Row index of the patch containing a normalized location.
pub fn patch_index(x: f64, y: f64, grid_h: usize, grid_w: usize) -> usize {
    let col = ((x * grid_w as f64).floor().max(0.0) as usize).min(grid_w - 1);
    let row = ((y * grid_h as f64).floor().max(0.0) as usize).min(grid_h - 1);
    row * grid_w + col
}

/// Regression loss over the first `gt.len` steps, divided by `gt.len`.
///
/// Only the valid prefix of the ground truth is read, so padded slots cannot
/// affect the value. For the patch-classification variant the location term
/// is the negative log-probability of the ground-truth patch.
pub fn loss_xyt(g: &mut Graph, pred: &SampledNodes, gt: &PaddedSample, cfg: &ModelConfig) -> Result<NodeId> {
    let l = gt.len;
    if l == 0 {
        return Err(Error::Contract("ground-truth scanpath is empty".into()));
    }
    let mut terms = Vec::new();
    match (pred.x, pred.y, pred.patch_probs) {
        (Some(x), Some(y), _) => {
            terms.push(l1_prefix(g, x, &gt.xs, l)?);
            terms.push(l1_prefix(g, y, &gt.ys, l)?);
        }
        (_, _, Some(probs)) => {
            let hw = cfg.patches();
            let mut onehot = vec![0.0; l * hw];
            for i in 0..l {
                onehot[i * hw + patch_index(gt.xs[i], gt.ys[i], cfg.grid_h, cfg.grid_w)] = 1.0;
            }
            let head = g.slice_rows(probs, 0, l)?;
            let clamped = g.clamp(head, PROB_CLAMP, 1.0 - PROB_CLAMP);
            let logp = g.log(clamped)?;
            let mask = g.constant(Tensor::matrix(l, hw, onehot)?);
            let picked = g.mul(logp, mask)?;
            let s = g.sum(picked);
            terms.push(g.scale(s, -1.0));
        }
        _ => return Err(Error::Contract("no location prediction to score".into())),
    }
    if let Some(t) = pred.t {
        terms.push(l1_prefix(g, t, &gt.ts, l)?);
    }
    let mut total = terms[0];
    for &t in &terms[1..] {
        total = g.add(total, t)?;
    }
    Ok(g.scale(total, 1.0 / l as f64))
}

/// Mean binary negative log-likelihood of validity over all steps.
pub fn loss_val(g: &mut Graph, valid_prob: NodeId, gt: &PaddedSample) -> Result<NodeId> {
    let steps = gt.valid.len();
    let v = g.clamp(valid_prob, PROB_CLAMP, 1.0 - PROB_CLAMP);
    let log_v = g.log(v)?;
    let neg = g.scale(v, -1.0);
    let one_minus = g.add_scalar(neg, 1.0);
    let log_1mv = g.log(one_minus)?;
    let target = g.constant(Tensor::matrix(steps, 1, gt.valid.clone())?);
    let inverse = g.constant(Tensor::matrix(steps, 1, gt.valid.iter().map(|v| 1.0 - v).collect())?);
    let a = g.mul(target, log_v)?;
    let b = g.mul(inverse, log_1mv)?;
    let ab = g.add(a, b)?;
    let s = g.sum(ab);
    Ok(g.scale(s, -1.0 / steps as f64))
}

/// Loss nodes for one training sample.
#[derive(Clone, Copy, Debug)]
pub struct SampleLoss {
    pub xyt: NodeId,
    pub val: NodeId,
    pub total: NodeId,
}

/// Full forward pass plus both loss terms for one sample.
pub fn sample_loss(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    bundle: &FeatureBundle,
    gt: &PaddedSample,
    eps: &EpsBlock,
) -> Result<SampleLoss> {
    if gt.max_len() != cfg.max_len {
        return Err(Error::Dimension(format!(
            "padded to {} steps, model decodes {}",
            gt.max_len(),
            cfg.max_len
        )));
    }
    let nodes = forward(g, p, cfg, bundle, InitialFixation::default())?;
    let sampled = sample_nodes(g, &nodes.heads, eps)?;
    let xyt = loss_xyt(g, &sampled, gt, cfg)?;
    let val = loss_val(g, nodes.heads.valid_prob, gt)?;
    let total = g.add(xyt, val)?;
    Ok(SampleLoss { xyt, val, total })
}

/// One sample of a batch.
pub struct BatchItem<'a> {
    pub bundle: &'a FeatureBundle,
    pub gt: &'a PaddedSample,
    pub eps: &'a EpsBlock,
}

/// `(1/M) Σ_j (L_xyt^j + L_val^j)` on a single graph.
pub fn total_loss(g: &mut Graph, p: &Bound, cfg: &ModelConfig, batch: &[BatchItem]) -> Result<NodeId> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let mut acc: Option<NodeId> = None;
    for item in batch {
        let l = sample_loss(g, p, cfg, item.bundle, item.gt, item.eps)?.total;
        acc = Some(match acc {
            None => l,
            Some(a) => g.add(a, l)?,
        });
    }
    let sum = acc.expect("batch is non-empty");
    Ok(g.scale(sum, 1.0 / batch.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Fixation;
    use crate::model::Scanpath;

    fn padded(points: &[(f64, f64, f64)], max_len: usize) -> PaddedSample {
        let s = Scanpath {
            image_id: "i".into(),
            task: "t".into(),
            subject: "s".into(),
            width: 1.0,
            height: 1.0,
            fixations: points.iter().map(|&(x, y, t)| Fixation { x, y, t: t * crate::model::T_MAX_MS }).collect(),
        };
        crate::data::pad_scanpath(&s, max_len)
    }

    fn column(g: &mut Graph, v: &[f64]) -> NodeId {
        g.constant(Tensor::matrix(v.len(), 1, v.to_vec()).unwrap())
    }

    fn xyt_value(pred: [&[f64]; 3], gt: &PaddedSample) -> f64 {
        let mut g = Graph::new();
        let nodes = SampledNodes {
            x: Some(column(&mut g, pred[0])),
            y: Some(column(&mut g, pred[1])),
            t: Some(column(&mut g, pred[2])),
            patch_probs: None,
        };
        let id = loss_xyt(&mut g, &nodes, gt, &ModelConfig::tiny()).unwrap();
        g.value(id).item().unwrap()
    }

    #[test]
    fn xyt_zero_when_prediction_matches() {
        let gt = padded(&[(0.2, 0.3, 0.04), (0.6, 0.1, 0.05)], 3);
        assert_eq!(xyt_value([&gt.xs, &gt.ys, &gt.ts], &gt), 0.0);
    }

    #[test]
    fn xyt_hand_value() {
        let gt = padded(&[(0.5, 0.5, 0.5)], 3);
        let v = xyt_value([&[0.6, 9.0, 9.0], &[0.3, 9.0, 9.0], &[0.8, 9.0, 9.0]], &gt);
        assert!((v - 0.6).abs() < 1e-12, "{v}");
    }

    #[test]
    fn xyt_rejects_empty_ground_truth() {
        let gt = padded(&[], 3);
        let mut g = Graph::new();
        let c = column(&mut g, &[0.0; 3]);
        let nodes = SampledNodes { x: Some(c), y: Some(c), t: None, patch_probs: None };
        assert!(matches!(loss_xyt(&mut g, &nodes, &gt, &ModelConfig::tiny()), Err(Error::Contract(_))));
    }

    fn val_value(v: &[f64], gt: &PaddedSample) -> f64 {
        let mut g = Graph::new();
        let c = column(&mut g, v);
        let id = loss_val(&mut g, c, gt).unwrap();
        g.value(id).item().unwrap()
    }

    #[test]
    fn validity_loss_values() {
        let gt = padded(&[(0.1, 0.1, 0.1), (0.2, 0.2, 0.2)], 4);
        assert!(val_value(&[1.0, 1.0, 0.0, 0.0], &gt) < 1e-6);
        assert!((val_value(&[0.5; 4], &gt) - std::f64::consts::LN_2).abs() < 1e-12);
        let wrong = val_value(&[0.0, 1.0, 0.0, 0.0], &gt);
        assert!(wrong >= -(PROB_CLAMP.ln()) / 4.0 - 1e-9);
    }

    #[test]
    fn patch_index_clamps_edges() {
        assert_eq!(patch_index(0.0, 0.0, 2, 3), 0);
        assert_eq!(patch_index(1.0, 1.0, 2, 3), 5);
        assert_eq!(patch_index(0.5, 0.25, 2, 3), 1);
    }
}
