use std::borrow::Cow;

use super::kernels::{gemm, View};
use super::{Result, Tensor, TensorError};

/// Lower bound applied to the gold-class probability before taking its log.
pub const PROB_CLAMP: f64 = 1e-12;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Tanh,
    Sigmoid,
    Neg,
    Exp,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Unary(UnaryOp, Var),
    Binary(BinaryOp, Var, Var, Broadcast, Broadcast),
    Softmax(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Slice { input: Var, axis: usize, start: usize },
    CrossEntropy { probs: Var, gold: usize },
    Sum(Var),
    Reshape(Var),
    Transpose(Var),
    GatherRows { sources: Vec<Var>, picks: Vec<(usize, usize)> },
}

/// How an operand of an elementwise op maps onto the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Broadcast {
    Full,
    Scalar,
    /// Repeated across the rows of a 2-D output; carries the row width.
    Row(usize),
}

impl Broadcast {
    #[inline]
    fn index(self, i: usize) -> usize {
        match self {
            Broadcast::Full => i,
            Broadcast::Scalar => 0,
            Broadcast::Row(n) => i % n,
        }
    }
}

struct Node<'a> {
    value: Cow<'a, Tensor>,
    op: Op,
    requires_grad: bool,
}

/// An append-only record of tensor operations.
///
/// Nodes are stored in creation order, which is a topological order: every
/// node's inputs were created before it. Leaves may borrow their values
/// (parameters are registered without copying).
#[derive(Default)]
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Cow<'a, Tensor>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn derived(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(Cow::Owned(value), op, requires_grad)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Cow::Owned(value), Op::Leaf, false)
    }

    pub fn constant_ref(&mut self, value: &'a Tensor) -> Var {
        self.push(Cow::Borrowed(value), Op::Leaf, false)
    }

    /// A leaf whose gradient is reported by [`Graph::backward`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(Cow::Owned(value), Op::Leaf, true)
    }

    pub fn param_ref(&mut self, value: &'a Tensor) -> Var {
        self.push(Cow::Borrowed(value), Op::Leaf, true)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows() {
            return Err(TensorError::Dimension {
                op: "matmul",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![0.0; m * n];
        gemm(View::new(av.data(), m, k), View::new(bv.data(), k, n), 0.0, &mut out);
        Ok(self.derived(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), &[a, b]))
    }

    pub fn unary(&mut self, kind: UnaryOp, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = match kind {
            UnaryOp::Tanh => xv.map(f64::tanh),
            UnaryOp::Sigmoid => xv.map(sigmoid),
            UnaryOp::Neg => xv.map(|v| -v),
            UnaryOp::Exp => xv.map(f64::exp),
            UnaryOp::Log => {
                if let Some((index, &value)) = xv.data().iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(TensorError::Domain { index, value });
                }
                xv.map(f64::ln)
            }
        };
        Ok(self.derived(out, Op::Unary(kind, x), &[x]))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Tanh, x)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Sigmoid, x)
    }

    pub fn binary(&mut self, kind: BinaryOp, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (out_shape, ba, bb) = broadcast_shapes(av, bv).ok_or_else(|| TensorError::Dimension {
            op: "binary",
            left: av.shape().to_vec(),
            right: bv.shape().to_vec(),
        })?;
        let len: usize = out_shape.iter().product();
        let (ad, bd) = (av.data(), bv.data());
        let f: fn(f64, f64) -> f64 = match kind {
            BinaryOp::Add => |x, y| x + y,
            BinaryOp::Sub => |x, y| x - y,
            BinaryOp::Mul => |x, y| x * y,
        };
        let out = if ba == Broadcast::Full && bb == Broadcast::Full {
            ad.iter().zip(bd).map(|(&x, &y)| f(x, y)).collect()
        } else {
            (0..len).map(|i| f(ad[ba.index(i)], bd[bb.index(i)])).collect()
        };
        Ok(self.derived(
            Tensor::from_parts(out_shape, out),
            Op::Binary(kind, a, b, ba, bb),
            &[a, b],
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Mul, a, b)
    }

    /// Softmax over every element of `x`, shape preserved.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let max = xv.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xv.data().iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let out = Tensor::from_parts(
            xv.shape().to_vec(),
            exps.into_iter().map(|e| e / total).collect(),
        );
        Ok(self.derived(out, Op::Softmax(x), &[x]))
    }

    /// Concatenation along `axis` (0 or 1 for matrices, 0 for vectors).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = *parts.first().ok_or(TensorError::Empty { op: "concat" })?;
        let shape0 = self.shape(first).to_vec();
        if axis >= shape0.len() || shape0.len() > 2 {
            return Err(TensorError::Shape {
                op: "concat",
                shape: shape0,
                reason: "axis out of range",
            });
        }
        for &p in &parts[1..] {
            let s = self.shape(p);
            let agrees = s.len() == shape0.len()
                && s.iter().zip(&shape0).enumerate().all(|(d, (x, y))| d == axis || x == y);
            if !agrees {
                return Err(TensorError::Dimension {
                    op: "concat",
                    left: shape0,
                    right: s.to_vec(),
                });
            }
        }
        let mut shape = shape0.clone();
        shape[axis] = parts.iter().map(|&p| self.shape(p)[axis]).sum();
        let mut data = Vec::with_capacity(shape.iter().product());
        if axis == 0 {
            for &p in parts {
                data.extend_from_slice(self.value(p).data());
            }
        } else {
            for r in 0..shape[0] {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row_slice(r));
                }
            }
        }
        Ok(self.derived(
            Tensor::from_parts(shape, data),
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            parts,
        ))
    }

    /// `len` consecutive entries along `axis` starting at `start`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        let shape = xv.shape().to_vec();
        if axis >= shape.len() || shape.len() > 2 || len == 0 || start + len > shape[axis] {
            return Err(TensorError::Shape {
                op: "slice",
                shape,
                reason: "slice range out of bounds",
            });
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = len;
        let data = if axis == 0 {
            let inner: usize = shape[1..].iter().product();
            xv.data()[start * inner..(start + len) * inner].to_vec()
        } else {
            let mut d = Vec::with_capacity(shape[0] * len);
            for r in 0..shape[0] {
                d.extend_from_slice(&xv.row_slice(r)[start..start + len]);
            }
            d
        };
        Ok(self.derived(
            Tensor::from_parts(out_shape, data),
            Op::Slice { input: x, axis, start },
            &[x],
        ))
    }

    /// `−ln(max(probs[gold], PROB_CLAMP))` as a one-element tensor.
    pub fn cross_entropy(&mut self, probs: Var, gold: usize) -> Result<Var> {
        let pv = self.value(probs);
        if gold >= pv.len() {
            return Err(TensorError::Index {
                index: gold,
                classes: pv.len(),
            });
        }
        let sum: f64 = pv.data().iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(TensorError::NotDistribution { sum });
        }
        let loss = -pv.data()[gold].max(PROB_CLAMP).ln();
        Ok(self.derived(Tensor::scalar(loss), Op::CrossEntropy { probs, gold }, &[probs]))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.value(x).data().iter().sum();
        Ok(self.derived(Tensor::scalar(total), Op::Sum(x), &[x]))
    }

    /// Sum of one-element tensors; errors on an empty list.
    pub fn sum_scalars(&mut self, xs: &[Var]) -> Result<Var> {
        let mut iter = xs.iter().copied();
        let mut acc = iter.next().ok_or(TensorError::Empty { op: "sum_scalars" })?;
        for x in iter {
            acc = self.add(acc, x)?;
        }
        Ok(acc)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let c = self.constant(Tensor::scalar(factor));
        self.mul(x, c)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshaped(shape.to_vec())?;
        Ok(self.derived(out, Op::Reshape(x), &[x]))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.ndim() != 2 {
            return Err(TensorError::Shape {
                op: "transpose",
                shape: xv.shape().to_vec(),
                reason: "expected a matrix",
            });
        }
        let (r, c) = (xv.rows(), xv.cols());
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = xv.data()[i * c + j];
            }
        }
        Ok(self.derived(Tensor::from_parts(vec![c, r], data), Op::Transpose(x), &[x]))
    }

    /// Builds a matrix whose row `i` is row `picks[i].1` of matrix
    /// `sources[picks[i].0]`. All sources must share a column count.
    pub fn gather_rows(&mut self, sources: &[Var], picks: &[(usize, usize)]) -> Result<Var> {
        if picks.is_empty() || sources.is_empty() {
            return Err(TensorError::Empty { op: "gather_rows" });
        }
        let cols = self.value(sources[0]).cols();
        for &s in sources {
            let v = self.value(s);
            if v.ndim() != 2 || v.cols() != cols {
                return Err(TensorError::Dimension {
                    op: "gather_rows",
                    left: self.shape(sources[0]).to_vec(),
                    right: v.shape().to_vec(),
                });
            }
        }
        let mut data = Vec::with_capacity(picks.len() * cols);
        for &(s, r) in picks {
            let src = sources.get(s).map(|&v| self.value(v));
            match src {
                Some(t) if r < t.rows() => data.extend_from_slice(t.row_slice(r)),
                _ => {
                    return Err(TensorError::Index {
                        index: r,
                        classes: src.map_or(0, Tensor::rows),
                    })
                }
            }
        }
        Ok(self.derived(
            Tensor::from_parts(vec![picks.len(), cols], data),
            Op::GatherRows {
                sources: sources.to_vec(),
                picks: picks.to_vec(),
            },
            sources,
        ))
    }

    /// Reverse pass from a one-element `loss`.
    ///
    /// Returns the gradient of `loss` with respect to every leaf created with
    /// [`Graph::param`]/[`Graph::param_ref`]; leaves that do not influence
    /// the loss receive zeros. Contributions from multiple consumers add up.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::Shape {
                op: "backward",
                shape: lv.shape().to_vec(),
                reason: "loss must be a scalar",
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(lv.shape(), 1.0));
        let mut leaf_grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];

        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            if let Op::Leaf = node.op {
                leaf_grads[id] = Some(g);
                continue;
            }
            self.propagate(id, &g, &mut grads);
        }

        for (id, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && leaf_grads[id].is_none() {
                leaf_grads[id] = Some(Tensor::zeros(node.value.shape()));
            }
        }
        Ok(Gradients { grads: leaf_grads })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[id];
        let out = &*node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                let gview = View::new(g.data(), m, n);
                if self.wants(*a) {
                    // dA = G · Bᵀ
                    accumulate_with(&mut grads[a.0], av.shape(), |buf, beta| {
                        gemm(gview, View::new(bv.data(), k, n).t(), beta, buf)
                    });
                }
                if self.wants(*b) {
                    // dB = Aᵀ · G
                    accumulate_with(&mut grads[b.0], bv.shape(), |buf, beta| {
                        gemm(View::new(av.data(), m, k).t(), gview, beta, buf)
                    });
                }
            }
            Op::Unary(kind, x) => {
                if !self.wants(*x) {
                    return;
                }
                let xv = self.value(*x);
                let d: Vec<f64> = match kind {
                    UnaryOp::Tanh => zip_map(g, out, |g, y| g * (1.0 - y * y)),
                    UnaryOp::Sigmoid => zip_map(g, out, |g, y| g * y * (1.0 - y)),
                    UnaryOp::Neg => g.data().iter().map(|v| -v).collect(),
                    UnaryOp::Exp => zip_map(g, out, |g, y| g * y),
                    UnaryOp::Log => zip_map(g, xv, |g, x| g / x),
                };
                accumulate(&mut grads[x.0], Tensor::from_parts(xv.shape().to_vec(), d));
            }
            Op::Binary(kind, a, b, ba, bb) => {
                let (ad, bd) = (self.value(*a).data(), self.value(*b).data());
                let gd = g.data();
                if self.wants(*a) {
                    let mut da = Tensor::zeros(self.shape(*a));
                    let dd = da.data_mut();
                    for (i, &gi) in gd.iter().enumerate() {
                        dd[ba.index(i)] += match kind {
                            BinaryOp::Add | BinaryOp::Sub => gi,
                            BinaryOp::Mul => gi * bd[bb.index(i)],
                        };
                    }
                    accumulate(&mut grads[a.0], da);
                }
                if self.wants(*b) {
                    let mut db = Tensor::zeros(self.shape(*b));
                    let dd = db.data_mut();
                    for (i, &gi) in gd.iter().enumerate() {
                        dd[bb.index(i)] += match kind {
                            BinaryOp::Add => gi,
                            BinaryOp::Sub => -gi,
                            BinaryOp::Mul => gi * ad[ba.index(i)],
                        };
                    }
                    accumulate(&mut grads[b.0], db);
                }
            }
            Op::Softmax(x) => {
                if !self.wants(*x) {
                    return;
                }
                let dot: f64 = g.data().iter().zip(out.data()).map(|(g, y)| g * y).sum();
                let d = zip_map(g, out, |g, y| y * (g - dot));
                accumulate(&mut grads[x.0], Tensor::from_parts(out.shape().to_vec(), d));
            }
            Op::Concat { parts, axis } => {
                let mut offset = 0;
                for &p in parts {
                    let ps = self.shape(p).to_vec();
                    let width = ps[*axis];
                    if self.wants(p) {
                        let piece = if *axis == 0 {
                            let inner: usize = ps[1..].iter().product();
                            g.data()[offset * inner..(offset + width) * inner].to_vec()
                        } else {
                            let mut d = Vec::with_capacity(ps[0] * width);
                            for r in 0..ps[0] {
                                d.extend_from_slice(&g.row_slice(r)[offset..offset + width]);
                            }
                            d
                        };
                        accumulate(&mut grads[p.0], Tensor::from_parts(ps, piece));
                    }
                    offset += width;
                }
            }
            Op::Slice { input, axis, start } => {
                if !self.wants(*input) {
                    return;
                }
                let shape = self.shape(*input).to_vec();
                let slot = grads[input.0].get_or_insert_with(|| Tensor::zeros(&shape));
                if *axis == 0 {
                    let inner: usize = shape[1..].iter().product();
                    let dst = &mut slot.data_mut()[start * inner..start * inner + g.len()];
                    for (d, v) in dst.iter_mut().zip(g.data()) {
                        *d += v;
                    }
                } else {
                    let w = g.cols();
                    for r in 0..shape[0] {
                        let dst = &mut slot.row_slice_mut(r)[*start..start + w];
                        for (d, v) in dst.iter_mut().zip(g.row_slice(r)) {
                            *d += v;
                        }
                    }
                }
            }
            Op::CrossEntropy { probs, gold } => {
                if !self.wants(*probs) {
                    return;
                }
                let pv = self.value(*probs);
                let mut d = Tensor::zeros(pv.shape());
                let p = pv.data()[*gold];
                if p > PROB_CLAMP {
                    d.data_mut()[*gold] = -g.item() / p;
                }
                accumulate(&mut grads[probs.0], d);
            }
            Op::Sum(x) => {
                if self.wants(*x) {
                    accumulate(&mut grads[x.0], Tensor::filled(self.shape(*x), g.item()));
                }
            }
            Op::Reshape(x) => {
                if self.wants(*x) {
                    let shaped = Tensor::from_parts(self.shape(*x).to_vec(), g.data().to_vec());
                    accumulate(&mut grads[x.0], shaped);
                }
            }
            Op::Transpose(x) => {
                if self.wants(*x) {
                    let (r, c) = (g.rows(), g.cols());
                    let mut d = vec![0.0; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            d[j * r + i] = g.data()[i * c + j];
                        }
                    }
                    accumulate(&mut grads[x.0], Tensor::from_parts(vec![c, r], d));
                }
            }
            Op::GatherRows { sources, picks } => {
                for (i, &(s, r)) in picks.iter().enumerate() {
                    let src = sources[s];
                    if !self.wants(src) {
                        continue;
                    }
                    let shape = self.shape(src).to_vec();
                    let slot = grads[src.0].get_or_insert_with(|| Tensor::zeros(&shape));
                    for (d, v) in slot.row_slice_mut(r).iter_mut().zip(g.row_slice(i)) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// Gradients of a scalar loss with respect to the parameter leaves of a graph.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` for nodes that are not parameter leaves.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Moves a parameter's gradient out; `None` if `var` is not a parameter.
    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }

    /// Map from node id to gradient, over all parameter leaves.
    pub fn iter(&self) -> impl Iterator<Item = (Var, &Tensor)> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (Var(i), g)))
    }
}

#[inline]
pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
}

fn accumulate(slot: &mut Option<Tensor>, contribution: Tensor) {
    match slot {
        Some(existing) => existing.add_assign(&contribution),
        None => *slot = Some(contribution),
    }
}

fn accumulate_with(slot: &mut Option<Tensor>, shape: &[usize], fill: impl FnOnce(&mut [f64], f64)) {
    match slot {
        Some(existing) => fill(existing.data_mut(), 1.0),
        None => {
            let mut t = Tensor::zeros(shape);
            fill(t.data_mut(), 0.0);
            *slot = Some(t);
        }
    }
}

fn broadcast_shapes(a: &Tensor, b: &Tensor) -> Option<(Vec<usize>, Broadcast, Broadcast)> {
    if a.shape() == b.shape() {
        return Some((a.shape().to_vec(), Broadcast::Full, Broadcast::Full));
    }
    if b.len() == 1 {
        return Some((a.shape().to_vec(), Broadcast::Full, Broadcast::Scalar));
    }
    if a.len() == 1 {
        return Some((b.shape().to_vec(), Broadcast::Scalar, Broadcast::Full));
    }
    let is_row_of = |row: &Tensor, full: &Tensor| {
        full.ndim() == 2 && row.rows() == 1 && row.ndim() <= 2 && row.cols() == full.cols()
    };
    if is_row_of(b, a) {
        return Some((a.shape().to_vec(), Broadcast::Full, Broadcast::Row(b.cols())));
    }
    if is_row_of(a, b) {
        return Some((b.shape().to_vec(), Broadcast::Row(a.cols()), Broadcast::Full));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let mut g = Graph::new();
        let eye = g.constant(m(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let a = g.constant(m(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let r = g.matmul(eye, a).unwrap();
        assert_eq!(g.value(r).data(), &[1.0, 2.0, 3.0, 4.0]);

        let z = g.constant(m(2, 1, &[0.0, 0.0]));
        let r = g.matmul(eye, z).unwrap();
        assert_eq!(g.value(r).data(), &[0.0, 0.0]);

        let col = g.constant(m(2, 1, &[5.0, 6.0]));
        let r = g.matmul(a, col).unwrap();
        assert_eq!(g.value(r).shape(), &[2, 1]);
        assert_eq!(g.value(r).data(), &[17.0, 39.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        let err = g.matmul(a, b).unwrap_err();
        assert_eq!(
            err,
            TensorError::Dimension {
                op: "matmul",
                left: vec![2, 3],
                right: vec![2, 3]
            }
        );
        assert!(err.to_string().contains("[2, 3]"));
    }

    #[test]
    fn unary_examples() {
        let mut g = Graph::new();
        let zero = g.constant(Tensor::scalar(0.0));
        let t = g.tanh(zero).unwrap();
        let s = g.sigmoid(zero).unwrap();
        assert_eq!(g.value(t).item(), 0.0);
        assert_eq!(g.value(s).item(), 0.5);
        let one = g.constant(Tensor::scalar(1.0));
        let t1 = g.tanh(one).unwrap();
        let e2 = 1f64.exp().powi(2);
        assert!((g.value(t1).item() - (e2 - 1.0) / (e2 + 1.0)).abs() < 1e-15);
        assert!((g.value(t1).item() - 0.761_594_155_955_764_9).abs() < 1e-12);
    }

    #[test]
    fn log_domain_error_reports_index() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![1.0, 2.0, -0.5]).unwrap());
        assert_eq!(
            g.unary(UnaryOp::Log, x).unwrap_err(),
            TensorError::Domain {
                index: 2,
                value: -0.5
            }
        );
    }

    #[test]
    fn binary_identities_and_broadcast() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![1.5, -2.0, 3.25]).unwrap());
        let zero = g.constant(Tensor::scalar(0.0));
        let one = g.constant(Tensor::scalar(1.0));
        let s = g.add(x, zero).unwrap();
        let p = g.mul(x, one).unwrap();
        assert_eq!(g.value(s), g.value(x));
        assert_eq!(g.value(p), g.value(x));

        let a = g.constant(Tensor::vector(vec![1.0, 2.0]).unwrap());
        let b = g.constant(Tensor::vector(vec![3.0, 4.0]).unwrap());
        let c = g.add(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[4.0, 6.0]);

        let mat = g.constant(m(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let row = g.constant(m(1, 2, &[10.0, 20.0]));
        let r = g.sub(row, mat).unwrap();
        assert_eq!(g.value(r).data(), &[9.0, 18.0, 7.0, 16.0]);

        let bad = g.constant(Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap());
        assert!(matches!(g.add(a, bad), Err(TensorError::Dimension { .. })));
    }

    #[test]
    fn softmax_examples() {
        let mut g = Graph::new();
        let c = g.constant(Tensor::vector(vec![7.0; 3]).unwrap());
        let s = g.softmax(c).unwrap();
        for v in g.value(s).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let one = g.constant(Tensor::vector(vec![-123.0]).unwrap());
        let s = g.softmax(one).unwrap();
        assert_eq!(g.value(s).data(), &[1.0]);
        let x = g.constant(Tensor::vector(vec![0.0, 2f64.ln()]).unwrap());
        let s = g.softmax(x).unwrap();
        assert!((g.value(s).data()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.value(s).data()[1] - 2.0 / 3.0).abs() < 1e-15);
        // large logits do not overflow
        let big = g.constant(Tensor::vector(vec![1000.0, 1000.0]).unwrap());
        let s = g.softmax(big).unwrap();
        assert_eq!(g.value(s).data(), &[0.5, 0.5]);
    }

    #[test]
    fn concat_examples() {
        let mut g = Graph::new();
        let w = g.constant(Tensor::zeros(&[1, 200]));
        let p = g.constant(Tensor::zeros(&[1, 25]));
        let s = g.constant(Tensor::zeros(&[1, 5]));
        let e = g.concat(&[w, p, s], 1).unwrap();
        assert_eq!(g.shape(e), &[1, 230]);
        let f = g.constant(Tensor::vector(vec![1.0; 300]).unwrap());
        let b = g.constant(Tensor::vector(vec![2.0; 300]).unwrap());
        let h = g.concat(&[f, b], 0).unwrap();
        assert_eq!(g.shape(h), &[600]);
        let single = g.concat(&[f], 0).unwrap();
        assert_eq!(g.value(single), g.value(f));
        let bad = g.constant(Tensor::zeros(&[2, 5]));
        assert!(matches!(g.concat(&[w, bad], 1), Err(TensorError::Dimension { .. })));
    }

    #[test]
    fn cross_entropy_examples() {
        let mut g = Graph::new();
        let onehot = g.constant(Tensor::vector(vec![1.0, 0.0, 0.0]).unwrap());
        let l = g.cross_entropy(onehot, 0).unwrap();
        assert_eq!(g.value(l).item(), 0.0);
        let half = g.constant(Tensor::vector(vec![0.5, 0.5]).unwrap());
        let l = g.cross_entropy(half, 0).unwrap();
        assert!((g.value(l).item() - 0.693_147_180_559_945_3).abs() < 1e-12);
        let tiny = g.constant(Tensor::vector(vec![1e-15, 1.0 - 1e-15]).unwrap());
        let l = g.cross_entropy(tiny, 0).unwrap();
        assert!((g.value(l).item() - 27.631_021_115_928_547).abs() < 1e-9);
        assert_eq!(
            g.cross_entropy(half, 2).unwrap_err(),
            TensorError::Index { index: 2, classes: 2 }
        );
    }

    #[test]
    fn backward_examples() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(3.0));
        let sq = g.mul(x, x).unwrap();
        let grads = g.backward(sq).unwrap();
        assert_eq!(grads.get(x).unwrap().item(), 6.0);

        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]).unwrap());
        let c = g.constant(Tensor::scalar(4.0));
        let grads = g.backward(c).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.0, 0.0]);

        let mut g = Graph::new();
        let logits = g.param(Tensor::vector(vec![0.0, 0.0]).unwrap());
        let p = g.softmax(logits).unwrap();
        let l = g.cross_entropy(p, 0).unwrap();
        let grads = g.backward(l).unwrap();
        let d = grads.get(logits).unwrap().data();
        assert!((d[0] + 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]).unwrap());
        assert!(matches!(g.backward(x), Err(TensorError::Shape { .. })));
    }

    #[test]
    fn shared_input_gradients_accumulate() {
        // loss = sum(x*y + x) with x used twice
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, -2.0]).unwrap());
        let y = g.param(Tensor::vector(vec![3.0, 5.0]).unwrap());
        let xy = g.mul(x, y).unwrap();
        let s = g.add(xy, x).unwrap();
        let l = g.sum(s).unwrap();
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[4.0, 6.0]);
        assert_eq!(grads.get(y).unwrap().data(), &[1.0, -2.0]);
    }

    #[test]
    fn gather_rows_picks_and_scatters() {
        let mut g = Graph::new();
        let a = g.param(m(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let b = g.constant(m(1, 2, &[9.0, 9.0]));
        let out = g.gather_rows(&[a, b], &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.value(out).data(), &[3.0, 4.0, 9.0, 9.0, 3.0, 4.0]);
        let l = g.sum(out).unwrap();
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(a).unwrap().data(), &[0.0, 0.0, 2.0, 2.0]);
        assert!(grads.get(b).is_none());
    }
}
