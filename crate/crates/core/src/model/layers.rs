//! The forward pass, stage by stage, recorded on a [`Graph`].

use super::config::{ModelConfig, LAYER_NORM_EPS};
use super::posenc::{encode_normalized, positional_encoding_2d};
use super::target::TargetEmbedder;
use super::types::{FeatureBundle, FixationOutput, InitialFixation};
use super::weights::Bound;
use crate::error::{Error, Result};
use crate::tensor::nn::{feed_forward, multi_head_attention};
use crate::tensor::{Graph, NodeId, Tensor};

pub fn check_bundle(bundle: &FeatureBundle, cfg: &ModelConfig) -> Result<()> {
    let want = [cfg.channels, cfg.grid_h, cfg.grid_w];
    if bundle.image_features.shape() != want {
        return Err(Error::Dimension(format!(
            "image features {:?}, model expects {want:?}",
            bundle.image_features.shape()
        )));
    }
    if bundle.target_embedding.numel() != cfg.d_text {
        return Err(Error::Dimension(format!(
            "target embedding has {} entries, model expects {}",
            bundle.target_embedding.numel(),
            cfg.d_text
        )));
    }
    Ok(())
}

pub fn embed_target(name: &str, embedder: &TargetEmbedder, cfg: &ModelConfig) -> Result<Tensor> {
    let v = embedder.embed(name)?;
    if v.numel() != cfg.d_text {
        return Err(Error::Dimension(format!(
            "embedding provider yields {} dims, model expects {}",
            v.numel(),
            cfg.d_text
        )));
    }
    Ok(v)
}

fn add_norm(g: &mut Graph, p: &Bound, x: NodeId, delta: NodeId, norm: &str) -> Result<NodeId> {
    let sum = g.add(x, delta)?;
    let (gamma, beta) = p.norm(norm)?;
    g.layer_norm(sum, gamma, beta, LAYER_NORM_EPS)
}

fn ffn(g: &mut Graph, p: &Bound, x: NodeId, prefix: &str) -> Result<NodeId> {
    let (w1, b1) = p.linear(&format!("{prefix}.ff1"))?;
    let (w2, b2) = p.linear(&format!("{prefix}.ff2"))?;
    feed_forward(g, x, w1, b1, w2, b2)
}

/// `C×h×w` features → `hw×d` contextual features: flatten, project, then
/// `n_enc` post-norm encoder layers with the patch encoding added to
/// queries and keys of every self-attention.
pub fn encode_image(g: &mut Graph, p: &Bound, cfg: &ModelConfig, raw: &Tensor) -> Result<NodeId> {
    if raw.shape() != [cfg.channels, cfg.grid_h, cfg.grid_w] {
        return Err(Error::Dimension(format!(
            "raw features {:?} vs config {}×{}×{}",
            raw.shape(),
            cfg.channels,
            cfg.grid_h,
            cfg.grid_w
        )));
    }
    let hw = cfg.patches();
    let flat = raw.reshape(vec![cfg.channels, hw])?.transpose()?;
    let x = g.constant(flat);
    let (w, b) = p.linear("input_proj")?;
    let mut x = g.linear(x, w, b)?;
    if cfg.n_enc == 0 {
        return Ok(x);
    }
    let pos = g.constant(positional_encoding_2d(cfg.grid_h, cfg.grid_w, cfg.d)?);
    for i in 0..cfg.n_enc {
        let qk = g.add(x, pos)?;
        let attn = multi_head_attention(g, qk, qk, x, cfg.heads, &p.attention(&format!("enc.{i}.attn"))?)?;
        x = add_norm(g, p, x, attn, &format!("enc.{i}.ln1"))?;
        let ff = ffn(g, p, x, &format!("enc.{i}"))?;
        x = add_norm(g, p, x, ff, &format!("enc.{i}.ln2"))?;
    }
    Ok(x)
}

/// Projects image and target features to width `d`, tiles the target over
/// all patches, concatenates channelwise and fuses with `linear + ReLU`.
pub fn joint_embed(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    f_image: NodeId,
    target: &Tensor,
) -> Result<NodeId> {
    let hw = cfg.patches();
    if g.value(f_image).shape() != [hw, cfg.d] {
        return Err(Error::Dimension(format!("F_image {:?}", g.value(f_image).shape())));
    }
    if target.numel() != cfg.d_text {
        return Err(Error::Dimension(format!("target embedding of length {}", target.numel())));
    }
    let t = g.constant(target.reshape(vec![1, cfg.d_text])?);
    let (wi, bi) = p.linear("joint.img")?;
    let img = g.linear(f_image, wi, bi)?;
    let (wt, bt) = p.linear("joint.tgt")?;
    let tgt = g.linear(t, wt, bt)?;
    let tiled = g.tile_rows(tgt, hw)?;
    let both = g.concat_cols(&[img, tiled])?;
    let (wf, bf) = p.linear("joint.fuse")?;
    let fused = g.linear(both, wf, bf)?;
    Ok(g.relu(fused))
}

/// Rows added to the learned queries: the initial-fixation code on query 0,
/// zeros elsewhere.
pub fn initial_query_offsets(cfg: &ModelConfig, init: InitialFixation, steps: usize) -> Result<Tensor> {
    let mut data = vec![0.0; steps * cfg.d];
    let code = encode_normalized(init.x, init.y, cfg.grid_h, cfg.grid_w, cfg.d)?;
    data[..cfg.d].copy_from_slice(&code);
    Tensor::matrix(steps, cfg.d, data)
}

/// Decoder over the first `offsets.rows` learned queries, each shifted by the
/// matching offset row. Self-attention is unmasked; every cross-attention
/// adds the patch encoding to the `F_joint` keys.
pub fn decode_with_offsets(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    f_joint: NodeId,
    offsets: &Tensor,
) -> Result<NodeId> {
    let (steps, width) = offsets.dims2()?;
    if width != cfg.d || steps == 0 || steps > cfg.max_len {
        return Err(Error::Dimension(format!("query offsets {:?}", offsets.shape())));
    }
    let queries = p.get("queries")?;
    let queries = if steps == cfg.max_len { queries } else { g.slice_rows(queries, 0, steps)? };
    let off = g.constant(offsets.clone());
    let mut x = g.add(queries, off)?;

    let pos = g.constant(positional_encoding_2d(cfg.grid_h, cfg.grid_w, cfg.d)?);
    let keys = g.add(f_joint, pos)?;
    for i in 0..cfg.n_dec {
        let sa = multi_head_attention(g, x, x, x, cfg.heads, &p.attention(&format!("dec.{i}.self"))?)?;
        x = add_norm(g, p, x, sa, &format!("dec.{i}.ln1"))?;
        let ca = multi_head_attention(g, x, keys, f_joint, cfg.heads, &p.attention(&format!("dec.{i}.cross"))?)?;
        x = add_norm(g, p, x, ca, &format!("dec.{i}.ln2"))?;
        let ff = ffn(g, p, x, &format!("dec.{i}"))?;
        x = add_norm(g, p, x, ff, &format!("dec.{i}.ln3"))?;
    }
    Ok(x)
}

/// All `L` fixation embeddings in one pass.
pub fn decode_fixations(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    f_joint: NodeId,
    init: InitialFixation,
) -> Result<NodeId> {
    let offsets = initial_query_offsets(cfg, init, cfg.max_len)?;
    decode_with_offsets(g, p, cfg, f_joint, &offsets)
}

/// Head outputs as graph nodes, each `steps×1` except `patch_probs`
/// (`steps×hw`).
#[derive(Clone, Copy, Debug)]
pub struct HeadNodes {
    pub mu_x: Option<NodeId>,
    pub mu_y: Option<NodeId>,
    pub mu_t: Option<NodeId>,
    pub lambda_x: Option<NodeId>,
    pub lambda_y: Option<NodeId>,
    pub lambda_t: Option<NodeId>,
    pub valid_prob: NodeId,
    pub patch_probs: Option<NodeId>,
}

fn head(g: &mut Graph, p: &Bound, x: NodeId, name: &str) -> Result<NodeId> {
    let (w1, b1) = p.linear(&format!("head.{name}.l1"))?;
    let (w2, b2) = p.linear(&format!("head.{name}.l2"))?;
    feed_forward(g, x, w1, b1, w2, b2)
}

/// Independent two-layer MLP heads applied row-wise to `F_dec`.
pub fn predict_heads(g: &mut Graph, p: &Bound, cfg: &ModelConfig, f_dec: NodeId) -> Result<HeadNodes> {
    let reg = cfg.variant.regresses_location();
    let dur = cfg.variant.predicts_duration();
    let mut opt = |on: bool, name: &str| -> Result<Option<NodeId>> {
        if on {
            head(g, p, f_dec, name).map(Some)
        } else {
            Ok(None)
        }
    };
    let mu_x = opt(reg, "mu_x")?;
    let mu_y = opt(reg, "mu_y")?;
    let mu_t = opt(dur, "mu_t")?;
    let lambda_x = opt(reg, "lambda_x")?;
    let lambda_y = opt(reg, "lambda_y")?;
    let lambda_t = opt(dur, "lambda_t")?;

    let logits = head(g, p, f_dec, "valid")?;
    let probs = g.softmax(logits, 1)?;
    // Column 1 is the "valid fixation" class.
    let valid_prob = g.slice_cols(probs, 1, 2)?;

    let patch_probs = if reg {
        None
    } else {
        let logits = head(g, p, f_dec, "patch")?;
        Some(g.softmax(logits, 1)?)
    };
    Ok(HeadNodes {
        mu_x,
        mu_y,
        mu_t,
        lambda_x,
        lambda_y,
        lambda_t,
        valid_prob,
        patch_probs,
    })
}

impl HeadNodes {
    pub fn read(&self, g: &Graph, cfg: &ModelConfig) -> FixationOutput {
        let col = |id: Option<NodeId>| id.map(|i| g.value(i).data().to_vec()).unwrap_or_default();
        let patch_probs = self.patch_probs.map(|id| {
            let t = g.value(id);
            let (rows, _) = t.dims2().expect("patch probabilities are a matrix");
            (0..rows).map(|r| t.row(r).to_vec()).collect()
        });
        FixationOutput {
            mu_x: col(self.mu_x),
            mu_y: col(self.mu_y),
            mu_t: col(self.mu_t),
            lambda_x: col(self.lambda_x),
            lambda_y: col(self.lambda_y),
            lambda_t: col(self.lambda_t),
            valid_prob: col(Some(self.valid_prob)),
            patch_probs,
            grid: (cfg.grid_h, cfg.grid_w),
        }
    }
}

/// Node handles for every stage of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardNodes {
    pub f_image: NodeId,
    pub f_joint: NodeId,
    pub f_dec: NodeId,
    pub heads: HeadNodes,
}

pub fn forward(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    bundle: &FeatureBundle,
    init: InitialFixation,
) -> Result<ForwardNodes> {
    check_bundle(bundle, cfg)?;
    let f_image = encode_image(g, p, cfg, &bundle.image_features)?;
    let f_joint = joint_embed(g, p, cfg, f_image, &bundle.target_embedding)?;
    let f_dec = decode_fixations(g, p, cfg, f_joint, init)?;
    let heads = predict_heads(g, p, cfg, f_dec)?;
    Ok(ForwardNodes {
        f_image,
        f_joint,
        f_dec,
        heads,
    })
}
