//! Dense f64 tensors with reverse-mode differentiation.
//!
//! Every operation records its parents, so a value is also a node in the
//! computation graph it was produced by. `backward()` walks that graph once
//! in reverse topological order and accumulates gradients into every node
//! that requires them. The op set is exactly what the classifier needs:
//! matmul, elementwise arithmetic, softmax, layer norm, 2-D convolution,
//! mean-pool and cross-entropy, plus row/column splicing for attention heads.

use std::cell::{Ref, RefCell, RefMut};
use std::collections::HashSet;
use std::rc::Rc;

use crate::error::{Error, Result};

/// Probabilities below this floor are clamped inside `cross_entropy` so the
/// loss stays bounded on degenerate inputs.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone)]
pub struct Tensor {
    node: Rc<Node>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.node.shape)
            .field("requires_grad", &self.node.requires_grad)
            .finish_non_exhaustive()
    }
}

struct Node {
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: bool,
    op: Op,
}

enum Op {
    Leaf,
    Matmul(Tensor, Tensor),
    Add(Tensor, Tensor),
    Mul(Tensor, Tensor),
    Scale(Tensor, f64),
    Exp(Tensor),
    Relu(Tensor),
    Gelu(Tensor),
    Sum(Tensor),
    Transpose(Tensor),
    Reshape(Tensor),
    SliceRows(Tensor, usize),
    SliceCols(Tensor, usize),
    ConcatRows(Vec<Tensor>),
    ConcatCols(Vec<Tensor>),
    Softmax(Tensor, usize),
    LayerNorm {
        x: Tensor,
        gain: Tensor,
        bias: Tensor,
        eps: f64,
    },
    CrossEntropy {
        p: Tensor,
        target: Vec<f64>,
    },
    Conv2d {
        x: Tensor,
        w: Tensor,
        b: Tensor,
        stride: usize,
        pad: usize,
    },
    MeanPool(Tensor),
}

impl Op {
    fn parents(&self) -> Vec<&Tensor> {
        match self {
            Op::Leaf => vec![],
            Op::Matmul(a, b) | Op::Add(a, b) | Op::Mul(a, b) => vec![a, b],
            Op::Scale(a, _)
            | Op::Exp(a)
            | Op::Relu(a)
            | Op::Gelu(a)
            | Op::Sum(a)
            | Op::Transpose(a)
            | Op::Reshape(a)
            | Op::SliceRows(a, _)
            | Op::SliceCols(a, _)
            | Op::Softmax(a, _)
            | Op::MeanPool(a) => vec![a],
            Op::ConcatRows(ps) | Op::ConcatCols(ps) => ps.iter().collect(),
            Op::LayerNorm { x, gain, bias, .. } => vec![x, gain, bias],
            Op::CrossEntropy { p, .. } => vec![p],
            Op::Conv2d { x, w, b, .. } => vec![x, w, b],
        }
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    // ── Construction ────────────────────────────────────────────────

    pub fn from_vec(data: Vec<f64>, shape: &[usize]) -> Result<Tensor> {
        if data.len() != numel(shape) {
            return Err(Error::shape(
                "from_vec",
                format!("data length {} != product of shape {:?}", data.len(), shape),
            ));
        }
        Ok(Self::new(data, shape.to_vec(), false, Op::Leaf))
    }

    /// Leaf that participates in gradient computation.
    pub fn param(data: Vec<f64>, shape: &[usize]) -> Result<Tensor> {
        if data.len() != numel(shape) {
            return Err(Error::shape(
                "param",
                format!("data length {} != product of shape {:?}", data.len(), shape),
            ));
        }
        Ok(Self::new(data, shape.to_vec(), true, Op::Leaf))
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Self::new(vec![0.0; numel(shape)], shape.to_vec(), false, Op::Leaf)
    }

    pub fn scalar(v: f64) -> Tensor {
        Self::new(vec![v], vec![1], false, Op::Leaf)
    }

    fn new(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool, op: Op) -> Tensor {
        Tensor {
            node: Rc::new(Node {
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad,
                op,
            }),
        }
    }

    fn from_op(data: Vec<f64>, shape: Vec<usize>, op: Op) -> Tensor {
        let requires = op.parents().iter().any(|p| p.node.requires_grad);
        Self::new(data, shape, requires, op)
    }

    // ── Accessors ───────────────────────────────────────────────────

    pub fn shape(&self) -> &[usize] {
        &self.node.shape
    }

    pub fn len(&self) -> usize {
        numel(&self.node.shape)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> Ref<'_, [f64]> {
        Ref::map(self.node.data.borrow(), |v| v.as_slice())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.node.data.borrow().clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1);
        self.node.data.borrow()[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.node.requires_grad
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.node.grad.borrow().clone()
    }

    pub(crate) fn grad_ref(&self) -> Ref<'_, Option<Vec<f64>>> {
        self.node.grad.borrow()
    }

    pub fn zero_grad(&self) {
        *self.node.grad.borrow_mut() = None;
    }

    /// Overwrite the stored values; shape must match. Used by the optimizer
    /// and by checkpoint loading, never on nodes inside a live graph.
    pub fn set_data(&self, vals: &[f64]) -> Result<()> {
        if vals.len() != self.len() {
            return Err(Error::shape(
                "set_data",
                format!("got {} values for shape {:?}", vals.len(), self.shape()),
            ));
        }
        self.node.data.borrow_mut().copy_from_slice(vals);
        Ok(())
    }

    pub(crate) fn data_mut(&self) -> RefMut<'_, Vec<f64>> {
        self.node.data.borrow_mut()
    }

    pub fn is_finite(&self) -> bool {
        self.node.data.borrow().iter().all(|v| v.is_finite())
    }

    fn accum_grad(&self, g: &[f64]) {
        let mut slot = self.node.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += b;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    // ── Forward ops ─────────────────────────────────────────────────

    fn require_2d(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape() {
            [n, k] => Ok((*n, *k)),
            s => Err(Error::shape(op, format!("expected 2-D tensor, got {s:?}"))),
        }
    }

    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (n, k) = self.require_2d("matmul")?;
        let (k2, p) = rhs.require_2d("matmul")?;
        if k != k2 {
            return Err(Error::shape(
                "matmul",
                format!("inner extents disagree: {:?} x {:?}", self.shape(), rhs.shape()),
            ));
        }
        let out = matmul_raw(&self.data(), &rhs.data(), n, k, p);
        Ok(Tensor::from_op(
            out,
            vec![n, p],
            Op::Matmul(self.clone(), rhs.clone()),
        ))
    }

    /// Elementwise add; the right side may also be a single row (`[1, p]` or
    /// `[p]`) broadcast over the rows of a `[n, p]` left side.
    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        let out = if self.shape() == rhs.shape() {
            self.data().iter().zip(rhs.data().iter()).map(|(a, b)| a + b).collect()
        } else if row_broadcastable(self.shape(), rhs.shape()) {
            let cols = rhs.len();
            let rd = rhs.data();
            self.data()
                .iter()
                .enumerate()
                .map(|(i, a)| a + rd[i % cols])
                .collect()
        } else {
            return Err(Error::shape(
                "add",
                format!("{:?} + {:?}", self.shape(), rhs.shape()),
            ));
        };
        Ok(Tensor::from_op(
            out,
            self.node.shape.clone(),
            Op::Add(self.clone(), rhs.clone()),
        ))
    }

    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(
                "mul",
                format!("{:?} * {:?}", self.shape(), rhs.shape()),
            ));
        }
        let out = self.data().iter().zip(rhs.data().iter()).map(|(a, b)| a * b).collect();
        Ok(Tensor::from_op(
            out,
            self.node.shape.clone(),
            Op::Mul(self.clone(), rhs.clone()),
        ))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let out = self.data().iter().map(|a| a * c).collect();
        Tensor::from_op(out, self.node.shape.clone(), Op::Scale(self.clone(), c))
    }

    pub fn exp(&self) -> Tensor {
        let out = self.data().iter().map(|a| a.exp()).collect();
        Tensor::from_op(out, self.node.shape.clone(), Op::Exp(self.clone()))
    }

    pub fn relu(&self) -> Tensor {
        let out = self.data().iter().map(|a| a.max(0.0)).collect();
        Tensor::from_op(out, self.node.shape.clone(), Op::Relu(self.clone()))
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&self) -> Tensor {
        let out = self.data().iter().map(|&a| gelu_fwd(a)).collect();
        Tensor::from_op(out, self.node.shape.clone(), Op::Gelu(self.clone()))
    }

    pub fn sum(&self) -> Tensor {
        let s: f64 = self.data().iter().sum();
        Tensor::from_op(vec![s], vec![1], Op::Sum(self.clone()))
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (n, k) = self.require_2d("transpose")?;
        let d = self.data();
        let mut out = vec![0.0; n * k];
        for i in 0..n {
            for j in 0..k {
                out[j * n + i] = d[i * k + j];
            }
        }
        Ok(Tensor::from_op(out, vec![k, n], Op::Transpose(self.clone())))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel(shape) != self.len() {
            return Err(Error::shape(
                "reshape",
                format!("{:?} -> {:?}", self.shape(), shape),
            ));
        }
        Ok(Tensor::from_op(
            self.to_vec(),
            shape.to_vec(),
            Op::Reshape(self.clone()),
        ))
    }

    /// Contiguous row range `[start, start+len)` of a 2-D tensor.
    pub fn slice_rows(&self, start: usize, len: usize) -> Result<Tensor> {
        let (n, k) = self.require_2d("slice_rows")?;
        if start + len > n {
            return Err(Error::shape(
                "slice_rows",
                format!("rows {start}..{} out of {n}", start + len),
            ));
        }
        let out = self.data()[start * k..(start + len) * k].to_vec();
        Ok(Tensor::from_op(
            out,
            vec![len, k],
            Op::SliceRows(self.clone(), start),
        ))
    }

    /// Contiguous column range `[start, start+len)` of a 2-D tensor.
    pub fn slice_cols(&self, start: usize, len: usize) -> Result<Tensor> {
        let (n, k) = self.require_2d("slice_cols")?;
        if start + len > k {
            return Err(Error::shape(
                "slice_cols",
                format!("cols {start}..{} out of {k}", start + len),
            ));
        }
        let d = self.data();
        let mut out = Vec::with_capacity(n * len);
        for i in 0..n {
            out.extend_from_slice(&d[i * k + start..i * k + start + len]);
        }
        Ok(Tensor::from_op(
            out,
            vec![n, len],
            Op::SliceCols(self.clone(), start),
        ))
    }

    /// Stack 2-D blocks with equal column counts on top of each other.
    pub fn concat_rows(parts: &[Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::invalid("concat_rows on empty list"));
        }
        let (_, k) = parts[0].require_2d("concat_rows")?;
        let mut rows = 0;
        let mut out = Vec::new();
        for p in parts {
            let (n, k2) = p.require_2d("concat_rows")?;
            if k2 != k {
                return Err(Error::shape(
                    "concat_rows",
                    format!("column count {k2} != {k}"),
                ));
            }
            rows += n;
            out.extend_from_slice(&p.data());
        }
        Ok(Tensor::from_op(
            out,
            vec![rows, k],
            Op::ConcatRows(parts.to_vec()),
        ))
    }

    /// Join 2-D blocks with equal row counts side by side.
    pub fn concat_cols(parts: &[Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::invalid("concat_cols on empty list"));
        }
        let (n, _) = parts[0].require_2d("concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (n2, k) = p.require_2d("concat_cols")?;
            if n2 != n {
                return Err(Error::shape("concat_cols", format!("row count {n2} != {n}")));
            }
            widths.push(k);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; n * total];
        let mut offset = 0;
        for (p, &k) in parts.iter().zip(&widths) {
            let d = p.data();
            for i in 0..n {
                out[i * total + offset..i * total + offset + k]
                    .copy_from_slice(&d[i * k..(i + 1) * k]);
            }
            offset += k;
        }
        Ok(Tensor::from_op(
            out,
            vec![n, total],
            Op::ConcatCols(parts.to_vec()),
        ))
    }

    /// Numerically stable softmax along `axis`.
    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        if axis >= self.shape().len() {
            return Err(Error::shape(
                "softmax",
                format!("axis {axis} out of range for {:?}", self.shape()),
            ));
        }
        if self.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("softmax input".to_string()));
        }
        let (outer, axis_len, inner) = axis_split(self.shape(), axis);
        let d = self.data();
        let mut out = vec![0.0; d.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |a: usize| o * axis_len * inner + a * inner + i;
                let mut m = f64::NEG_INFINITY;
                for a in 0..axis_len {
                    m = m.max(d[at(a)]);
                }
                let mut z = 0.0;
                for a in 0..axis_len {
                    let e = (d[at(a)] - m).exp();
                    out[at(a)] = e;
                    z += e;
                }
                for a in 0..axis_len {
                    out[at(a)] /= z;
                }
            }
        }
        Ok(Tensor::from_op(
            out,
            self.node.shape.clone(),
            Op::Softmax(self.clone(), axis),
        ))
    }

    /// Normalize the last axis to zero mean and unit variance, then apply
    /// `gain ⊙ x + bias`. A zero-variance slice maps to zeros before the
    /// affine step (the variance floor `eps` sits inside the square root).
    pub fn layer_norm(&self, gain: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
        let d = *self
            .shape()
            .last()
            .ok_or_else(|| Error::shape("layer_norm", "zero-rank input".to_string()))?;
        if gain.len() != d || bias.len() != d {
            return Err(Error::shape(
                "layer_norm",
                format!(
                    "gain {:?} / bias {:?} do not match last axis {d}",
                    gain.shape(),
                    bias.shape()
                ),
            ));
        }
        let x = self.data();
        let gd = gain.data();
        let bd = bias.data();
        let rows = x.len() / d;
        let mut out = vec![0.0; x.len()];
        for r in 0..rows {
            let s = &x[r * d..(r + 1) * d];
            let mean = s.iter().sum::<f64>() / d as f64;
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for j in 0..d {
                out[r * d + j] = (s[j] - mean) * inv * gd[j] + bd[j];
            }
        }
        Ok(Tensor::from_op(
            out,
            self.node.shape.clone(),
            Op::LayerNorm {
                x: self.clone(),
                gain: gain.clone(),
                bias: bias.clone(),
                eps,
            },
        ))
    }

    /// `−Σᵢ yᵢ·ln(max(pᵢ, LOG_FLOOR))` for a probability vector `p` and a
    /// one-hot target `y`.
    pub fn cross_entropy(&self, target: &[f64]) -> Result<Tensor> {
        if self.len() != target.len() {
            return Err(Error::shape(
                "cross_entropy",
                format!("p has {} entries, y has {}", self.len(), target.len()),
            ));
        }
        let ones = target.iter().filter(|&&v| v == 1.0).count();
        if ones != 1 || target.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("cross_entropy target must be one-hot"));
        }
        let p = self.data();
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "cross_entropy expects probabilities summing to 1, got {total}"
            )));
        }
        let loss: f64 = p
            .iter()
            .zip(target)
            .map(|(&pi, &yi)| -yi * pi.max(LOG_FLOOR).ln())
            .sum();
        Ok(Tensor::from_op(
            vec![loss],
            vec![1],
            Op::CrossEntropy {
                p: self.clone(),
                target: target.to_vec(),
            },
        ))
    }

    /// 2-D convolution over a `[C_in, H, W]` input with `[C_out, C_in, kh, kw]`
    /// kernels, `[C_out]` bias, implicit zero padding.
    pub fn conv2d(&self, w: &Tensor, b: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
        let (cin, h, wd) = match self.shape() {
            [c, h, w] => (*c, *h, *w),
            s => return Err(Error::shape("conv2d", format!("input must be [C,H,W], got {s:?}"))),
        };
        let (cout, cin2, kh, kw) = match w.shape() {
            [o, c, kh, kw] => (*o, *c, *kh, *kw),
            s => {
                return Err(Error::shape(
                    "conv2d",
                    format!("kernel must be [Cout,Cin,kh,kw], got {s:?}"),
                ))
            }
        };
        if cin != cin2 || b.len() != cout {
            return Err(Error::shape(
                "conv2d",
                format!(
                    "input {:?} vs kernel {:?} vs bias {:?}",
                    self.shape(),
                    w.shape(),
                    b.shape()
                ),
            ));
        }
        if stride == 0 || h + 2 * pad < kh || wd + 2 * pad < kw {
            return Err(Error::invalid("conv2d: kernel larger than padded input"));
        }
        let ho = (h + 2 * pad - kh) / stride + 1;
        let wo = (wd + 2 * pad - kw) / stride + 1;
        let x = self.data();
        let wv = w.data();
        let bv = b.data();
        let mut out = vec![0.0; cout * ho * wo];
        for o in 0..cout {
            out[o * ho * wo..(o + 1) * ho * wo].fill(bv[o]);
        }
        let geom = ConvGeom::new(h, wd, ho, wo, kh, kw, stride, pad);
        for o in 0..cout {
            for c in 0..cin {
                let xplane = &x[c * h * wd..(c + 1) * h * wd];
                let oplane = &mut out[o * ho * wo..(o + 1) * ho * wo];
                let wbase = ((o * cin + c) * kh) * kw;
                for u in 0..kh {
                    for v in 0..kw {
                        let wval = wv[wbase + u * kw + v];
                        geom.for_each_tap(u, v, |i, y, j0, j1, x0| {
                            let orow = &mut oplane[i * wo + j0..i * wo + j1];
                            let mut xi = y * wd + x0;
                            for ov in orow {
                                *ov += wval * xplane[xi];
                                xi += stride;
                            }
                        });
                    }
                }
            }
        }
        Ok(Tensor::from_op(
            out,
            vec![cout, ho, wo],
            Op::Conv2d {
                x: self.clone(),
                w: w.clone(),
                b: b.clone(),
                stride,
                pad,
            },
        ))
    }

    /// Spatial mean over a `[C, H, W]` input, producing a `[1, C]` row.
    pub fn global_mean_pool(&self) -> Result<Tensor> {
        let (c, h, w) = match self.shape() {
            [c, h, w] => (*c, *h, *w),
            s => {
                return Err(Error::shape(
                    "global_mean_pool",
                    format!("input must be [C,H,W], got {s:?}"),
                ))
            }
        };
        let d = self.data();
        let area = (h * w) as f64;
        let out = (0..c)
            .map(|ch| d[ch * h * w..(ch + 1) * h * w].iter().sum::<f64>() / area)
            .collect();
        Ok(Tensor::from_op(out, vec![1, c], Op::MeanPool(self.clone())))
    }

    // ── Backward ────────────────────────────────────────────────────

    /// Reverse-mode sweep from a scalar output. Visits each reachable node
    /// exactly once in reverse topological order; leaf gradients accumulate
    /// until `zero_grad`.
    pub fn backward(&self) -> Result<()> {
        if self.len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("root must be scalar, got {:?}", self.shape()),
            ));
        }
        if !self.node.requires_grad {
            return Err(Error::invalid("backward on a graph with no trainable leaves"));
        }
        let order = topo_order(self);
        self.accum_grad(&[1.0]);
        for t in order.iter().rev() {
            if matches!(t.node.op, Op::Leaf) {
                continue;
            }
            // Intermediate grads are consumed exactly once.
            let g = t.node.grad.borrow_mut().take();
            let Some(g) = g else { continue };
            t.backprop(&g);
        }
        Ok(())
    }

    fn backprop(&self, g: &[f64]) {
        match &self.node.op {
            Op::Leaf => {}
            Op::Matmul(a, b) => {
                let (n, k) = (a.shape()[0], a.shape()[1]);
                let p = b.shape()[1];
                if a.node.requires_grad {
                    let bd = b.data();
                    let mut ga = vec![0.0; n * k];
                    for i in 0..n {
                        let grow = &g[i * p..(i + 1) * p];
                        let garow = &mut ga[i * k..(i + 1) * k];
                        for (q, gaq) in garow.iter_mut().enumerate() {
                            let brow = &bd[q * p..(q + 1) * p];
                            let mut s = 0.0;
                            for j in 0..p {
                                s += grow[j] * brow[j];
                            }
                            *gaq += s;
                        }
                    }
                    a.accum_grad(&ga);
                }
                if b.node.requires_grad {
                    let ad = a.data();
                    let mut gb = vec![0.0; k * p];
                    for i in 0..n {
                        let grow = &g[i * p..(i + 1) * p];
                        let arow = &ad[i * k..(i + 1) * k];
                        for (q, &aq) in arow.iter().enumerate() {
                            let gbrow = &mut gb[q * p..(q + 1) * p];
                            for j in 0..p {
                                gbrow[j] += aq * grow[j];
                            }
                        }
                    }
                    b.accum_grad(&gb);
                }
            }
            Op::Add(a, b) => {
                if a.node.requires_grad {
                    a.accum_grad(g);
                }
                if b.node.requires_grad {
                    if b.len() == g.len() {
                        b.accum_grad(g);
                    } else {
                        // Row broadcast: fold the rows back down.
                        let cols = b.len();
                        let mut gb = vec![0.0; cols];
                        for (i, gv) in g.iter().enumerate() {
                            gb[i % cols] += gv;
                        }
                        b.accum_grad(&gb);
                    }
                }
            }
            Op::Mul(a, b) => {
                if a.node.requires_grad {
                    let bd = b.data();
                    let ga: Vec<f64> = g.iter().zip(bd.iter()).map(|(gv, bv)| gv * bv).collect();
                    a.accum_grad(&ga);
                }
                if b.node.requires_grad {
                    let ad = a.data();
                    let gb: Vec<f64> = g.iter().zip(ad.iter()).map(|(gv, av)| gv * av).collect();
                    b.accum_grad(&gb);
                }
            }
            Op::Scale(a, c) => {
                if a.node.requires_grad {
                    let ga: Vec<f64> = g.iter().map(|gv| gv * c).collect();
                    a.accum_grad(&ga);
                }
            }
            Op::Exp(a) => {
                if a.node.requires_grad {
                    let od = self.data();
                    let ga: Vec<f64> = g.iter().zip(od.iter()).map(|(gv, ov)| gv * ov).collect();
                    a.accum_grad(&ga);
                }
            }
            Op::Relu(a) => {
                if a.node.requires_grad {
                    let ad = a.data();
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(ad.iter())
                        .map(|(gv, &av)| if av > 0.0 { *gv } else { 0.0 })
                        .collect();
                    a.accum_grad(&ga);
                }
            }
            Op::Gelu(a) => {
                if a.node.requires_grad {
                    let ad = a.data();
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(ad.iter())
                        .map(|(gv, &av)| gv * gelu_bwd(av))
                        .collect();
                    a.accum_grad(&ga);
                }
            }
            Op::Sum(a) => {
                if a.node.requires_grad {
                    a.accum_grad(&vec![g[0]; a.len()]);
                }
            }
            Op::Transpose(a) => {
                if a.node.requires_grad {
                    let (n, k) = (a.shape()[0], a.shape()[1]);
                    let mut ga = vec![0.0; n * k];
                    for i in 0..n {
                        for j in 0..k {
                            ga[i * k + j] = g[j * n + i];
                        }
                    }
                    a.accum_grad(&ga);
                }
            }
            Op::Reshape(a) => {
                if a.node.requires_grad {
                    a.accum_grad(g);
                }
            }
            Op::SliceRows(a, start) => {
                if a.node.requires_grad {
                    let k = a.shape()[1];
                    let mut ga = vec![0.0; a.len()];
                    ga[start * k..start * k + g.len()].copy_from_slice(g);
                    a.accum_grad(&ga);
                }
            }
            Op::SliceCols(a, start) => {
                if a.node.requires_grad {
                    let (n, k) = (a.shape()[0], a.shape()[1]);
                    let len = self.shape()[1];
                    let mut ga = vec![0.0; n * k];
                    for i in 0..n {
                        ga[i * k + start..i * k + start + len]
                            .copy_from_slice(&g[i * len..(i + 1) * len]);
                    }
                    a.accum_grad(&ga);
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let span = p.len();
                    if p.node.requires_grad {
                        p.accum_grad(&g[offset..offset + span]);
                    }
                    offset += span;
                }
            }
            Op::ConcatCols(parts) => {
                let n = self.shape()[0];
                let total = self.shape()[1];
                let mut offset = 0;
                for p in parts {
                    let k = p.shape()[1];
                    if p.node.requires_grad {
                        let mut gp = vec![0.0; n * k];
                        for i in 0..n {
                            gp[i * k..(i + 1) * k]
                                .copy_from_slice(&g[i * total + offset..i * total + offset + k]);
                        }
                        p.accum_grad(&gp);
                    }
                    offset += k;
                }
            }
            Op::Softmax(a, axis) => {
                if a.node.requires_grad {
                    let (outer, axis_len, inner) = axis_split(self.shape(), *axis);
                    let s = self.data();
                    let mut ga = vec![0.0; s.len()];
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |x: usize| o * axis_len * inner + x * inner + i;
                            let mut dot = 0.0;
                            for x in 0..axis_len {
                                dot += g[at(x)] * s[at(x)];
                            }
                            for x in 0..axis_len {
                                ga[at(x)] = s[at(x)] * (g[at(x)] - dot);
                            }
                        }
                    }
                    a.accum_grad(&ga);
                }
            }
            Op::LayerNorm { x, gain, bias, eps } => {
                let d = *x.shape().last().unwrap();
                let xd = x.data();
                let gd = gain.data();
                let rows = xd.len() / d;
                let mut gx = vec![0.0; xd.len()];
                let mut ggain = vec![0.0; d];
                let mut gbias = vec![0.0; d];
                for r in 0..rows {
                    let s = &xd[r * d..(r + 1) * d];
                    let grow = &g[r * d..(r + 1) * d];
                    let mean = s.iter().sum::<f64>() / d as f64;
                    let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
                    let inv = 1.0 / (var + eps).sqrt();
                    let xhat: Vec<f64> = s.iter().map(|v| (v - mean) * inv).collect();
                    let mut sum_dxhat = 0.0;
                    let mut sum_dxhat_xhat = 0.0;
                    for j in 0..d {
                        let dxh = grow[j] * gd[j];
                        ggain[j] += grow[j] * xhat[j];
                        gbias[j] += grow[j];
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * xhat[j];
                    }
                    let df = d as f64;
                    for j in 0..d {
                        let dxh = grow[j] * gd[j];
                        gx[r * d + j] = inv / df * (df * dxh - sum_dxhat - xhat[j] * sum_dxhat_xhat);
                    }
                }
                if x.node.requires_grad {
                    x.accum_grad(&gx);
                }
                if gain.node.requires_grad {
                    gain.accum_grad(&ggain);
                }
                if bias.node.requires_grad {
                    bias.accum_grad(&gbias);
                }
            }
            Op::CrossEntropy { p, target } => {
                if p.node.requires_grad {
                    let pd = p.data();
                    let gp: Vec<f64> = pd
                        .iter()
                        .zip(target)
                        .map(|(&pi, &yi)| {
                            if yi != 0.0 && pi > LOG_FLOOR {
                                -g[0] * yi / pi
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    p.accum_grad(&gp);
                }
            }
            Op::Conv2d { x, w, b, stride, pad } => {
                let (cin, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
                let (cout, _, kh, kw) =
                    (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
                let (ho, wo) = (self.shape()[1], self.shape()[2]);
                let xd = x.data();
                let wv = w.data();
                let mut gx = vec![0.0; xd.len()];
                let mut gw = vec![0.0; wv.len()];
                let mut gb = vec![0.0; cout];
                let geom = ConvGeom::new(h, wd, ho, wo, kh, kw, *stride, *pad);
                for o in 0..cout {
                    let gplane = &g[o * ho * wo..(o + 1) * ho * wo];
                    gb[o] += gplane.iter().sum::<f64>();
                    for c in 0..cin {
                        let xplane = &xd[c * h * wd..(c + 1) * h * wd];
                        let gxplane = &mut gx[c * h * wd..(c + 1) * h * wd];
                        let wbase = ((o * cin + c) * kh) * kw;
                        for u in 0..kh {
                            for v in 0..kw {
                                let wval = wv[wbase + u * kw + v];
                                let mut wacc = 0.0;
                                geom.for_each_tap(u, v, |i, y, j0, j1, x0| {
                                    let grow = &gplane[i * wo + j0..i * wo + j1];
                                    let mut xi = y * wd + x0;
                                    for &gv in grow {
                                        gxplane[xi] += gv * wval;
                                        wacc += gv * xplane[xi];
                                        xi += stride;
                                    }
                                });
                                gw[wbase + u * kw + v] += wacc;
                            }
                        }
                    }
                }
                if x.node.requires_grad {
                    x.accum_grad(&gx);
                }
                if w.node.requires_grad {
                    w.accum_grad(&gw);
                }
                if b.node.requires_grad {
                    b.accum_grad(&gb);
                }
            }
            Op::MeanPool(a) => {
                if a.node.requires_grad {
                    let (c, h, w) = (a.shape()[0], a.shape()[1], a.shape()[2]);
                    let area = (h * w) as f64;
                    let mut ga = vec![0.0; a.len()];
                    for ch in 0..c {
                        let gv = g[ch] / area;
                        for px in &mut ga[ch * h * w..(ch + 1) * h * w] {
                            *px = gv;
                        }
                    }
                    a.accum_grad(&ga);
                }
            }
        }
    }
}

/// Valid-range bookkeeping for one convolution: for a kernel tap `(u, v)`,
/// which output rows/cols stay inside the unpadded input.
struct ConvGeom {
    h: usize,
    wd: usize,
    ho: usize,
    wo: usize,
    stride: usize,
    pad: usize,
}

impl ConvGeom {
    #[allow(clippy::too_many_arguments)]
    fn new(h: usize, wd: usize, ho: usize, wo: usize, _kh: usize, _kw: usize, stride: usize, pad: usize) -> ConvGeom {
        ConvGeom {
            h,
            wd,
            ho,
            wo,
            stride,
            pad,
        }
    }

    /// Calls `f(i, y, j0, j1, x0)` for every valid output row `i` (input row
    /// `y`), with the valid output column span `[j0, j1)` starting at input
    /// column `x0`.
    fn for_each_tap(&self, u: usize, v: usize, mut f: impl FnMut(usize, usize, usize, usize, usize)) {
        let i_lo = if self.pad > u {
            (self.pad - u).div_ceil(self.stride)
        } else {
            0
        };
        let i_hi = ((self.h - 1 + self.pad - u) / self.stride).min(self.ho - 1);
        let j_lo = if self.pad > v {
            (self.pad - v).div_ceil(self.stride)
        } else {
            0
        };
        let j_hi = ((self.wd - 1 + self.pad - v) / self.stride).min(self.wo - 1);
        if i_lo > i_hi || j_lo > j_hi {
            return;
        }
        let x0 = j_lo * self.stride + v - self.pad;
        for i in i_lo..=i_hi {
            let y = i * self.stride + u - self.pad;
            f(i, y, j_lo, j_hi + 1, x0);
        }
    }
}

fn row_broadcastable(lhs: &[usize], rhs: &[usize]) -> bool {
    match (lhs, rhs) {
        ([_, p], [p2]) => p == p2,
        ([_, p], [1, p2]) => p == p2,
        _ => false,
    }
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn gelu_fwd(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_bwd(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let inner = C * (x + 0.044715 * x * x * x);
    let t = inner.tanh();
    let sech2 = 1.0 - t * t;
    let dinner = C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * sech2 * dinner
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], n: usize, k: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * p..(i + 1) * p];
        for (q, &av) in arow.iter().enumerate() {
            let brow = &b[q * p..(q + 1) * p];
            for j in 0..p {
                orow[j] += av * brow[j];
            }
        }
    }
    out
}

fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut visited: HashSet<*const Node> = HashSet::new();
    let mut stack: Vec<(Tensor, bool)> = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !visited.insert(Rc::as_ptr(&t.node)) {
            continue;
        }
        stack.push((t.clone(), true));
        for p in t.node.op.parents() {
            if p.node.requires_grad && !visited.contains(&Rc::as_ptr(&p.node)) {
                stack.push((p.clone(), false));
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(data: &[f64], shape: &[usize]) -> Tensor {
        Tensor::from_vec(data.to_vec(), shape).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matmul_identity() {
        let i2 = t(&[1.0, 0.0, 0.0, 1.0], &[2, 2]);
        let m = t(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        let out = i2.matmul(&m).unwrap();
        assert_eq!(out.to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn matmul_projector() {
        let proj = t(&[1.0, 0.0, 0.0, 0.0], &[2, 2]);
        let m = t(&[5.0, 6.0, 7.0, 8.0], &[2, 2]);
        let out = proj.matmul(&m).unwrap();
        assert_eq!(out.to_vec(), vec![5.0, 6.0, 0.0, 0.0]);
    }

    #[test]
    fn matmul_shape_mismatch_reports_both_shapes() {
        let a = t(&[0.0; 6], &[2, 3]);
        let b = t(&[0.0; 4], &[2, 2]);
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[2, 2]"), "{err}");
    }

    #[test]
    fn softmax_symmetry_and_analytic() {
        let x = t(&[0.0, 0.0], &[2]);
        assert_eq!(x.softmax(0).unwrap().to_vec(), vec![0.5, 0.5]);

        let x = t(&[2.0f64.ln(), 0.0], &[2]);
        let s = x.softmax(0).unwrap().to_vec();
        assert!(close(s[0], 2.0 / 3.0, 1e-15) && close(s[1], 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn softmax_is_stable_under_huge_inputs() {
        let x = t(&[1000.0, 0.0], &[2]);
        let s = x.softmax(0).unwrap().to_vec();
        assert!(s.iter().all(|v| v.is_finite()));
        assert!(close(s[0], 1.0, 1e-12) && s[1] >= 0.0 && s[1] < 1e-300);
    }

    #[test]
    fn softmax_rejects_nan() {
        let x = t(&[f64::NAN, 0.0], &[2]);
        assert!(matches!(x.softmax(0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn layer_norm_constant_input_gives_zeros() {
        let x = t(&[5.0, 5.0, 5.0], &[1, 3]);
        let gain = t(&[1.0, 1.0, 1.0], &[3]);
        let bias = t(&[0.0, 0.0, 0.0], &[3]);
        let out = x.layer_norm(&gain, &bias, 1e-5).unwrap();
        assert_eq!(out.to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn layer_norm_already_normalized() {
        let x = t(&[1.0, -1.0], &[1, 2]);
        let gain = t(&[1.0, 1.0], &[2]);
        let bias = t(&[0.0, 0.0], &[2]);
        let eps = 1e-5;
        let out = x.layer_norm(&gain, &bias, eps).unwrap().to_vec();
        let want = 1.0 / (1.0 + eps).sqrt();
        assert!(close(out[0], want, 1e-12) && close(out[1], -want, 1e-12));
    }

    #[test]
    fn layer_norm_affine_dominates_with_zero_gain() {
        let x = t(&[3.0, -4.0, 9.0], &[1, 3]);
        let gain = t(&[0.0, 0.0, 0.0], &[3]);
        let bias = t(&[7.0, 7.0, 7.0], &[3]);
        let out = x.layer_norm(&gain, &bias, 1e-5).unwrap();
        assert_eq!(out.to_vec(), vec![7.0, 7.0, 7.0]);
    }

    #[test]
    fn cross_entropy_perfect_prediction_is_zero() {
        let p = t(&[0.0, 1.0, 0.0], &[3]);
        let y = [0.0, 1.0, 0.0];
        assert_eq!(p.cross_entropy(&y).unwrap().item(), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_analytic() {
        for k in [86usize, 11] {
            let p = t(&vec![1.0 / k as f64; k], &[k]);
            let mut y = vec![0.0; k];
            y[3] = 1.0;
            let loss = p.cross_entropy(&y).unwrap().item();
            assert!(close(loss, (k as f64).ln(), 1e-12), "k={k}: {loss}");
        }
    }

    #[test]
    fn cross_entropy_rejects_dimension_mismatch() {
        let p = t(&[0.5, 0.5], &[2]);
        assert!(p.cross_entropy(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn backward_accumulates_shared_subexpression() {
        // y = x*x + x*x reuses the same node twice; dy/dx = 4x.
        let x = Tensor::param(vec![3.0], &[1]).unwrap();
        let sq = x.mul(&x).unwrap();
        let y = sq.add(&sq).unwrap();
        y.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![12.0]);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let x = Tensor::param(vec![1.0, 2.0], &[2]).unwrap();
        let y = x.scale(2.0);
        assert!(y.backward().is_err());
    }

    #[test]
    fn grad_accumulates_until_zeroed() {
        let x = Tensor::param(vec![2.0], &[1]).unwrap();
        x.mul(&x).unwrap().backward().unwrap();
        x.mul(&x).unwrap().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![8.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn slice_and_concat_round_trip() {
        let m = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        let left = m.slice_cols(0, 2).unwrap();
        let right = m.slice_cols(2, 1).unwrap();
        let back = Tensor::concat_cols(&[left, right]).unwrap();
        assert_eq!(back.to_vec(), m.to_vec());

        let top = m.slice_rows(0, 1).unwrap();
        let bottom = m.slice_rows(1, 1).unwrap();
        let back = Tensor::concat_rows(&[top, bottom]).unwrap();
        assert_eq!(back.to_vec(), m.to_vec());
    }

    #[test]
    fn conv2d_known_values() {
        // 1x3x3 input, single 2x2 kernel of ones, stride 1, no padding.
        let x = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0], &[1, 3, 3]);
        let w = t(&[1.0, 1.0, 1.0, 1.0], &[1, 1, 2, 2]);
        let b = t(&[0.5], &[1]);
        let out = x.conv2d(&w, &b, 1, 0).unwrap();
        assert_eq!(out.shape(), &[1, 2, 2]);
        assert_eq!(out.to_vec(), vec![12.5, 16.5, 24.5, 28.5]);
    }

    #[test]
    fn mean_pool_averages_channels() {
        let x = t(&[1.0, 3.0, 5.0, 7.0, 2.0, 2.0, 2.0, 2.0], &[2, 2, 2]);
        let out = x.global_mean_pool().unwrap();
        assert_eq!(out.shape(), &[1, 2]);
        assert_eq!(out.to_vec(), vec![4.0, 2.0]);
    }
}
