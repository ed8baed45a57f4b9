//! Adam with bias-corrected moments. Parameters and moments are rounded to
//! `f32` after every update so that 32-bit checkpoints are lossless.

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::model::weights::round_f32;
use crate::model::ModelWeights;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    /// Number of updates applied so far.
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(weights: &ModelWeights) -> Self {
        let zeros: Vec<Tensor> = weights.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

pub fn optimizer_step(weights: &mut ModelWeights, grads: &[Tensor], state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    let n = weights.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::Dimension(format!(
            "{n} parameters, {} gradients, {} / {} moments",
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    for (i, g) in grads.iter().enumerate() {
        let w = &weights.tensors()[i];
        if g.shape() != w.shape() || state.m[i].shape() != w.shape() || state.v[i].shape() != w.shape() {
            return Err(Error::Dimension(format!(
                "parameter {:?}: weight {:?}, gradient {:?}",
                weights.names()[i],
                w.shape(),
                g.shape()
            )));
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, g) in grads.iter().enumerate() {
        let m: Vec<f64> = state.m[i]
            .data()
            .iter()
            .zip(g.data())
            .map(|(&m, &g)| round_f32(cfg.beta1 * m + (1.0 - cfg.beta1) * g))
            .collect();
        let v: Vec<f64> = state.v[i]
            .data()
            .iter()
            .zip(g.data())
            .map(|(&v, &g)| round_f32(cfg.beta2 * v + (1.0 - cfg.beta2) * g * g))
            .collect();
        let w: Vec<f64> = weights.tensors()[i]
            .data()
            .iter()
            .zip(m.iter().zip(&v))
            .map(|(&w, (&m, &v))| round_f32(w - cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps)))
            .collect();
        let shape = g.shape().to_vec();
        state.m[i] = Tensor::from_parts(shape.clone(), m);
        state.v[i] = Tensor::from_parts(shape.clone(), v);
        weights.set(i, Tensor::from_parts(shape, w))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn setup() -> (ModelWeights, AdamState, TrainConfig) {
        let w = ModelWeights::init(&ModelConfig::tiny(), 1).unwrap();
        let s = AdamState::new(&w);
        (w, s, TrainConfig::default())
    }

    #[test]
    fn zero_gradient_leaves_weights_unchanged() {
        let (mut w, mut s, cfg) = setup();
        let before = w.clone();
        let grads: Vec<Tensor> = w.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        optimizer_step(&mut w, &grads, &mut s, &cfg).unwrap();
        assert_eq!(w, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let (mut w, mut s, cfg) = setup();
        let before = w.clone();
        let grads: Vec<Tensor> = w.tensors().iter().map(|t| Tensor::full(t.shape(), 0.3)).collect();
        optimizer_step(&mut w, &grads, &mut s, &cfg).unwrap();
        for (a, b) in before.tensors().iter().zip(w.tensors()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                // f32 rounding of the result bounds the deviation.
                let tol = 1e-7 * x.abs().max(1.0);
                assert!(((x - y) - cfg.lr).abs() < tol, "{x} -> {y}");
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (mut w, mut s, cfg) = setup();
        let grads = vec![Tensor::zeros(&[1])];
        assert!(matches!(optimizer_step(&mut w, &grads, &mut s, &cfg), Err(Error::Dimension(_))));
    }
}
