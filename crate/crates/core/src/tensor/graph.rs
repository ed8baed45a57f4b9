use super::{axis_strides, matmul_kernel, transpose_kernel, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Relu(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Abs(NodeId),
    Clamp(NodeId, f64, f64),
    Softmax(NodeId, usize),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
    },
    Transpose(NodeId),
    SliceCols(NodeId, usize, usize),
    SliceRows(NodeId, usize),
    ConcatCols(Vec<NodeId>),
    ConcatRows(Vec<NodeId>),
    TileRows(NodeId),
    Reshape(NodeId),
    Sum(NodeId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
    /// Op-specific values saved for the backward pass (layer norm keeps the
    /// normalized input followed by per-row reciprocal std).
    saved: Vec<f64>,
}

/// Append-only computation record. Node ids are indices into insertion
/// order, so every input of a node refers to an earlier node and the graph
/// is acyclic by construction.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to graph nodes.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<Tensor> {
        self.grads[id.0]
            .as_ref()
            .map(|g| Tensor::from_parts(self.shapes[id.0].clone(), g.clone()))
    }

    /// Gradient as a flat slice; zeros are not materialized for nodes the
    /// loss does not depend on.
    pub fn slice(&self, id: NodeId) -> Option<&[f64]> {
        self.grads[id.0].as_deref()
    }
}

fn shape_err(op: &str, a: &[usize], b: &[usize]) -> Error {
    Error::Dimension(format!("{op}: incompatible shapes {a:?} and {b:?}"))
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor, inputs: &[NodeId], saved: Vec<f64>) -> NodeId {
        let needs_grad = inputs.iter().any(|i| self.nodes[i.0].needs_grad);
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
            saved,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Records a leaf. Only leaves with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
            needs_grad: requires_grad,
            saved: Vec::new(),
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), value, &[a, b], Vec::new()))
    }

    fn zip_same(&mut self, a: NodeId, b: NodeId, name: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err(name, va.shape(), vb.shape()));
        }
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor::from_parts(va.shape().to_vec(), data))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.zip_same(a, b, "add", |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), value, &[a, b], Vec::new()))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.zip_same(a, b, "sub", |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), value, &[a, b], Vec::new()))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.zip_same(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), value, &[a, b], Vec::new()))
    }

    /// `a[m×n] + row[n]`, broadcasting the row over every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (va, vr) = (self.value(a), self.value(row));
        let (m, n) = va.dims2()?;
        if vr.numel() != n {
            return Err(shape_err("add_row", va.shape(), vr.shape()));
        }
        let mut data = va.data().to_vec();
        for r in 0..m {
            for (o, &b) in data[r * n..(r + 1) * n].iter_mut().zip(vr.data()) {
                *o += b;
            }
        }
        let value = Tensor::from_parts(va.shape().to_vec(), data);
        Ok(self.push(Op::AddRow(a, row), value, &[a, row], Vec::new()))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.value(a).map(|v| v * c);
        self.push(Op::Scale(a, c), value, &[a], Vec::new())
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.value(a).map(|v| v + c);
        self.push(Op::AddScalar(a), value, &[a], Vec::new())
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|v| v.max(0.0));
        self.push(Op::Relu(a), value, &[a], Vec::new())
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::exp);
        self.push(Op::Exp(a), value, &[a], Vec::new())
    }

    pub fn log(&mut self, a: NodeId) -> Result<NodeId> {
        if let Some(index) = self.value(a).data().iter().position(|&v| v <= 0.0) {
            return Err(Error::Contract(format!("log of non-positive value at {index}")));
        }
        let value = self.value(a).map(f64::ln);
        Ok(self.push(Op::Log(a), value, &[a], Vec::new()))
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::abs);
        self.push(Op::Abs(a), value, &[a], Vec::new())
    }

    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> NodeId {
        let value = self.value(a).map(|v| v.clamp(lo, hi));
        self.push(Op::Clamp(a, lo, hi), value, &[a], Vec::new())
    }

    pub fn softmax(&mut self, a: NodeId, axis: usize) -> Result<NodeId> {
        let value = self.value(a).softmax(axis)?;
        Ok(self.push(Op::Softmax(a, axis), value, &[a], Vec::new()))
    }

    /// Normalizes each row over the last dimension, then applies
    /// `gamma * x_hat + beta`.
    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId, eps: f64) -> Result<NodeId> {
        if eps <= 0.0 {
            return Err(Error::Contract("layer_norm eps must be positive".into()));
        }
        let vx = self.value(x);
        let d = *vx.shape().last().ok_or_else(|| Error::Dimension("layer_norm on scalar".into()))?;
        let (vg, vb) = (self.value(gamma), self.value(beta));
        if vg.numel() != d || vb.numel() != d {
            return Err(shape_err("layer_norm", vx.shape(), vg.shape()));
        }
        let rows = vx.numel() / d;
        let mut xhat = vec![0.0; vx.numel()];
        let mut rstds = Vec::with_capacity(rows);
        let mut out = vec![0.0; vx.numel()];
        for r in 0..rows {
            let row = &vx.data()[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let rstd = 1.0 / (var + eps).sqrt();
            rstds.push(rstd);
            for j in 0..d {
                let h = (row[j] - mean) * rstd;
                xhat[r * d + j] = h;
                out[r * d + j] = h * vg.data()[j] + vb.data()[j];
            }
        }
        let value = Tensor::from_parts(vx.shape().to_vec(), out);
        xhat.extend(rstds);
        Ok(self.push(Op::LayerNorm { x, gamma, beta }, value, &[x, gamma, beta], xhat))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.value(a).transpose()?;
        Ok(self.push(Op::Transpose(a), value, &[a], Vec::new()))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let va = self.value(a);
        let (m, n) = va.dims2()?;
        if start >= end || end > n {
            return Err(Error::Dimension(format!("slice_cols {start}..{end} of {n} columns")));
        }
        let w = end - start;
        let mut data = Vec::with_capacity(m * w);
        for r in 0..m {
            data.extend_from_slice(&va.data()[r * n + start..r * n + end]);
        }
        let value = Tensor::from_parts(vec![m, w], data);
        Ok(self.push(Op::SliceCols(a, start, end), value, &[a], Vec::new()))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let va = self.value(a);
        let (m, n) = va.dims2()?;
        if start >= end || end > m {
            return Err(Error::Dimension(format!("slice_rows {start}..{end} of {m} rows")));
        }
        let value = Tensor::from_parts(vec![end - start, n], va.data()[start * n..end * n].to_vec());
        Ok(self.push(Op::SliceRows(a, start), value, &[a], Vec::new()))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = parts.first().ok_or_else(|| Error::Dimension("concat of nothing".into()))?;
        let (m, _) = self.value(*first).dims2()?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pm, pn) = self.value(p).dims2()?;
            if pm != m {
                return Err(shape_err("concat_cols", self.value(*first).shape(), self.value(p).shape()));
            }
            widths.push(pn);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * total);
        for r in 0..m {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let value = Tensor::from_parts(vec![m, total], data);
        Ok(self.push(Op::ConcatCols(parts.to_vec()), value, parts, Vec::new()))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = parts.first().ok_or_else(|| Error::Dimension("concat of nothing".into()))?;
        let (_, n) = self.value(*first).dims2()?;
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let (pm, pn) = self.value(p).dims2()?;
            if pn != n {
                return Err(shape_err("concat_rows", self.value(*first).shape(), self.value(p).shape()));
            }
            rows += pm;
            data.extend_from_slice(self.value(p).data());
        }
        let value = Tensor::from_parts(vec![rows, n], data);
        Ok(self.push(Op::ConcatRows(parts.to_vec()), value, parts, Vec::new()))
    }

    /// Repeats a single row `n` times into an `n×d` matrix.
    pub fn tile_rows(&mut self, a: NodeId, n: usize) -> Result<NodeId> {
        let va = self.value(a);
        let (m, d) = va.dims2()?;
        if m != 1 {
            return Err(Error::Dimension(format!("tile_rows expects one row, got {:?}", va.shape())));
        }
        let data = va.data().repeat(n);
        let value = Tensor::from_parts(vec![n, d], data);
        Ok(self.push(Op::TileRows(a), value, &[a], Vec::new()))
    }

    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let value = self.value(a).reshape(shape)?;
        Ok(self.push(Op::Reshape(a), value, &[a], Vec::new()))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(Op::Sum(a), value, &[a], Vec::new())
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.value(a).numel();
        let s = self.sum(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// `x @ w + b` for a weight `w[in×out]` and bias `b[out]`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    /// Reverse-mode sweep from a scalar `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        // Only leaves that asked for gradients keep them.
        for (idx, node) in self.nodes.iter().enumerate() {
            if !(matches!(node.op, Op::Leaf) && node.needs_grad) {
                grads[idx] = None;
            }
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], id: NodeId, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[id.0].needs_grad {
            return;
        }
        let slot = grads[id.0].get_or_insert_with(|| vec![0.0; self.nodes[id.0].value.numel()]);
        f(slot);
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |id: NodeId| &self.nodes[id.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = val(*a).dims2().unwrap();
                let n = val(*b).shape()[1];
                self.accumulate(grads, *a, |ga| {
                    let bt = transpose_kernel(val(*b).data(), k, n);
                    for (o, v) in ga.iter_mut().zip(matmul_kernel(g, &bt, m, n, k)) {
                        *o += v;
                    }
                });
                self.accumulate(grads, *b, |gb| {
                    let at = transpose_kernel(val(*a).data(), m, k);
                    for (o, v) in gb.iter_mut().zip(matmul_kernel(&at, g, k, m, n)) {
                        *o += v;
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *b, |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *b, |gb| {
                    for (o, v) in gb.iter_mut().zip(g) {
                        *o -= v;
                    }
                });
            }
            Op::Mul(a, b) => {
                self.accumulate(grads, *a, |ga| {
                    for ((o, gv), bv) in ga.iter_mut().zip(g).zip(val(*b).data()) {
                        *o += gv * bv;
                    }
                });
                self.accumulate(grads, *b, |gb| {
                    for ((o, gv), av) in gb.iter_mut().zip(g).zip(val(*a).data()) {
                        *o += gv * av;
                    }
                });
            }
            Op::AddRow(a, row) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *row, |gr| {
                    let n = gr.len();
                    for chunk in g.chunks(n) {
                        add_into(gr, chunk);
                    }
                });
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, |ga| {
                for (o, gv) in ga.iter_mut().zip(g) {
                    *o += c * gv;
                }
            }),
            Op::AddScalar(a) => self.accumulate(grads, *a, |ga| add_into(ga, g)),
            Op::Relu(a) => self.accumulate(grads, *a, |ga| {
                for ((o, gv), x) in ga.iter_mut().zip(g).zip(val(*a).data()) {
                    if *x > 0.0 {
                        *o += gv;
                    }
                }
            }),
            Op::Exp(a) => self.accumulate(grads, *a, |ga| {
                for ((o, gv), y) in ga.iter_mut().zip(g).zip(node.value.data()) {
                    *o += gv * y;
                }
            }),
            Op::Log(a) => self.accumulate(grads, *a, |ga| {
                for ((o, gv), x) in ga.iter_mut().zip(g).zip(val(*a).data()) {
                    *o += gv / x;
                }
            }),
            Op::Abs(a) => self.accumulate(grads, *a, |ga| {
                for ((o, gv), x) in ga.iter_mut().zip(g).zip(val(*a).data()) {
                    // sign(0) = 0
                    if *x > 0.0 {
                        *o += gv;
                    } else if *x < 0.0 {
                        *o -= gv;
                    }
                }
            }),
            Op::Clamp(a, lo, hi) => self.accumulate(grads, *a, |ga| {
                for ((o, gv), x) in ga.iter_mut().zip(g).zip(val(*a).data()) {
                    if x >= lo && x <= hi {
                        *o += gv;
                    }
                }
            }),
            Op::Softmax(a, axis) => self.accumulate(grads, *a, |ga| {
                let y = node.value.data();
                let (outer, len, inner) = axis_strides(node.value.shape(), *axis).unwrap();
                for o in 0..outer {
                    for i in 0..inner {
                        let base = o * len * inner + i;
                        let dot: f64 = (0..len).map(|j| g[base + j * inner] * y[base + j * inner]).sum();
                        for j in 0..len {
                            let k = base + j * inner;
                            ga[k] += y[k] * (g[k] - dot);
                        }
                    }
                }
            }),
            Op::LayerNorm { x, gamma, beta } => {
                let d = val(*gamma).numel();
                let numel = node.value.numel();
                let (xhat, rstds) = node.saved.split_at(numel);
                let gam = val(*gamma).data();
                self.accumulate(grads, *gamma, |gg| {
                    for (gr, hr) in g.chunks(d).zip(xhat.chunks(d)) {
                        for j in 0..d {
                            gg[j] += gr[j] * hr[j];
                        }
                    }
                });
                self.accumulate(grads, *beta, |gb| {
                    for gr in g.chunks(d) {
                        add_into(gb, gr);
                    }
                });
                self.accumulate(grads, *x, |gx| {
                    let n = d as f64;
                    for (r, &rstd) in rstds.iter().enumerate() {
                        let gr = &g[r * d..(r + 1) * d];
                        let hr = &xhat[r * d..(r + 1) * d];
                        let gh: Vec<f64> = gr.iter().zip(gam).map(|(a, b)| a * b).collect();
                        let sum_gh: f64 = gh.iter().sum();
                        let sum_ghh: f64 = gh.iter().zip(hr).map(|(a, b)| a * b).sum();
                        for j in 0..d {
                            gx[r * d + j] += rstd / n * (n * gh[j] - sum_gh - hr[j] * sum_ghh);
                        }
                    }
                });
            }
            Op::Transpose(a) => self.accumulate(grads, *a, |ga| {
                let (m, n) = val(*a).dims2().unwrap();
                add_into(ga, &transpose_kernel(g, n, m));
            }),
            Op::SliceCols(a, start, end) => self.accumulate(grads, *a, |ga| {
                let n = val(*a).shape()[1];
                let w = end - start;
                for (r, gr) in g.chunks(w).enumerate() {
                    add_into(&mut ga[r * n + start..r * n + end], gr);
                }
            }),
            Op::SliceRows(a, start) => self.accumulate(grads, *a, |ga| {
                let n = val(*a).shape()[1];
                add_into(&mut ga[start * n..start * n + g.len()], g);
            }),
            Op::ConcatCols(parts) => {
                let total = node.value.shape()[1];
                let mut offset = 0;
                for &p in parts {
                    let w = val(p).shape()[1];
                    self.accumulate(grads, p, |gp| {
                        for (r, chunk) in gp.chunks_mut(w).enumerate() {
                            add_into(chunk, &g[r * total + offset..r * total + offset + w]);
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = val(p).numel();
                    self.accumulate(grads, p, |gp| add_into(gp, &g[offset..offset + len]));
                    offset += len;
                }
            }
            Op::TileRows(a) => self.accumulate(grads, *a, |ga| {
                let d = ga.len();
                for chunk in g.chunks(d) {
                    add_into(ga, chunk);
                }
            }),
            Op::Reshape(a) => self.accumulate(grads, *a, |ga| add_into(ga, g)),
            Op::Sum(a) => self.accumulate(grads, *a, |ga| {
                for o in ga.iter_mut() {
                    *o += g[0];
                }
            }),
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, -2.0, 3.5]));
        let s = g.sum(x);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn dot_with_self_gradient_is_twice_x() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let sq = g.mul(x, x).unwrap();
        let s = g.sum(sq);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn non_scalar_loss_is_contract_error() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]));
        let y = g.scale(x, 2.0);
        assert!(matches!(g.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0]));
        let c = g.constant(Tensor::vector(vec![3.0]));
        let y = g.mul(x, c).unwrap();
        let s = g.sum(y);
        let grads = g.backward(s).unwrap();
        assert!(grads.get(c).is_none());
        assert_eq!(grads.get(x).unwrap().data(), &[3.0]);
    }

    #[test]
    fn layer_norm_examples() {
        let mut g = Graph::new();
        let ones = g.constant(Tensor::full(&[4], 1.0));
        let zeros = g.constant(Tensor::zeros(&[4]));
        let x = g.constant(Tensor::full(&[1, 4], 5.0));
        let y = g.layer_norm(x, ones, zeros, 1e-5).unwrap();
        assert_eq!(g.value(y).data(), &[0.0; 4]);

        let ones2 = g.constant(Tensor::full(&[2], 1.0));
        let zeros2 = g.constant(Tensor::zeros(&[2]));
        let x = g.constant(Tensor::matrix(1, 2, vec![1.0, 3.0]).unwrap());
        let y = g.layer_norm(x, ones2, zeros2, 1e-12).unwrap();
        let out = g.value(y).data();
        assert!((out[0] + 1.0).abs() < 1e-9 && (out[1] - 1.0).abs() < 1e-9);

        let beta = g.constant(Tensor::vector(vec![0.25, -0.5]));
        let zero_gamma = g.constant(Tensor::zeros(&[2]));
        let x = g.constant(Tensor::matrix(2, 2, vec![1.0, 7.0, -3.0, 2.0]).unwrap());
        let y = g.layer_norm(x, zero_gamma, beta, 1e-5).unwrap();
        assert_eq!(g.value(y).data(), &[0.25, -0.5, 0.25, -0.5]);

        assert!(g.layer_norm(x, ones2, zeros2, 0.0).is_err());
    }

    #[test]
    fn slicing_and_concat_round_trip() {
        let mut g = Graph::new();
        let x = g.param(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let left = g.slice_cols(x, 0, 1).unwrap();
        let right = g.slice_cols(x, 1, 3).unwrap();
        let back = g.concat_cols(&[left, right]).unwrap();
        assert_eq!(g.value(back), g.value(x));
        let top = g.slice_rows(x, 0, 1).unwrap();
        let bottom = g.slice_rows(x, 1, 2).unwrap();
        let back = g.concat_rows(&[top, bottom]).unwrap();
        assert_eq!(g.value(back), g.value(x));
        assert!(g.slice_cols(x, 2, 2).is_err());
        assert!(g.slice_rows(x, 0, 3).is_err());
    }
}
