//! Transformer building blocks expressed as graph ops.

use super::{Graph, NodeId};
use crate::error::{Error, Result};

/// Projection parameters of one multi-head attention block. Weights are
/// `d×d` and act on row vectors (`x @ w + b`).
#[derive(Clone, Copy, Debug)]
pub struct AttentionParams {
    pub wq: NodeId,
    pub bq: NodeId,
    pub wk: NodeId,
    pub bk: NodeId,
    pub wv: NodeId,
    pub bv: NodeId,
    pub wo: NodeId,
    pub bo: NodeId,
}

/// Scaled dot-product attention, split over `heads`, concatenated and
/// output-projected. There is no masking: every query sees every key.
pub fn multi_head_attention(
    g: &mut Graph,
    q: NodeId,
    k: NodeId,
    v: NodeId,
    heads: usize,
    p: &AttentionParams,
) -> Result<NodeId> {
    let (_, d) = g.value(q).dims2()?;
    if heads == 0 || d % heads != 0 {
        return Err(Error::Config(format!("model width {d} is not divisible by {heads} heads")));
    }
    let (_, dk) = g.value(k).dims2()?;
    let (_, dv) = g.value(v).dims2()?;
    if dk != d || dv != d {
        return Err(Error::Dimension(format!("attention widths q={d} k={dk} v={dv}")));
    }
    let head_dim = d / heads;
    let scale = 1.0 / (head_dim as f64).sqrt();

    let qp = g.linear(q, p.wq, p.bq)?;
    let kp = g.linear(k, p.wk, p.bk)?;
    let vp = g.linear(v, p.wv, p.bv)?;

    let mut outputs = Vec::with_capacity(heads);
    for h in 0..heads {
        let (lo, hi) = (h * head_dim, (h + 1) * head_dim);
        let qh = g.slice_cols(qp, lo, hi)?;
        let kh = g.slice_cols(kp, lo, hi)?;
        let vh = g.slice_cols(vp, lo, hi)?;
        let kt = g.transpose(kh)?;
        let scores = g.matmul(qh, kt)?;
        let scores = g.scale(scores, scale);
        let weights = g.softmax(scores, 1)?;
        outputs.push(g.matmul(weights, vh)?);
    }
    let joined = if heads == 1 { outputs[0] } else { g.concat_cols(&outputs)? };
    g.linear(joined, p.wo, p.bo)
}

/// Position-wise `relu(x @ w1 + b1) @ w2 + b2`.
pub fn feed_forward(
    g: &mut Graph,
    x: NodeId,
    w1: NodeId,
    b1: NodeId,
    w2: NodeId,
    b2: NodeId,
) -> Result<NodeId> {
    let h = g.linear(x, w1, b1)?;
    let h = g.relu(h);
    g.linear(h, w2, b2)
}
