use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Affine(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Relu(Var),
    Log(Var),
    Square(Var),
    Abs(Var),
    ConcatCols(Vec<Var>),
    StackRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    SumAll(Var),
    MaskedSum(Var, Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only tape of tensor operations.
///
/// Nodes are stored in creation order, so every input precedes its consumer
/// and the record is a topological order by construction.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `var`; zeros when the loss does not depend on it.
    pub fn wrt(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0].clone();
        match &self.grads[var.0] {
            Some(g) => Tensor::new(shape, g.clone()).expect("gradient shape"),
            None => Tensor::zeros(&shape),
        }
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(op, a.shape(), b.shape()));
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    slot.get_or_insert_with(|| vec![0.0; len])
}

/// `c (m×n) = alpha * a (m×k) @ b (k×n) + beta * c`, with explicit strides so
/// transposed operands need no copy.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= m * n);
    // SAFETY: slice lengths cover every index reachable through the given
    // dimensions and strides, checked by the callers' shape validation.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
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

    /// Records a leaf. Gradients flow into it iff `tensor.requires_grad()`.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        let requires_grad = tensor.requires_grad();
        self.push(tensor, Op::Leaf, requires_grad)
    }

    /// Records a leaf that never receives gradients.
    pub fn constant(&mut self, mut tensor: Tensor) -> Var {
        tensor.set_requires_grad(false);
        self.push(tensor, Op::Leaf, false)
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

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let src = &self.nodes[a.0].value;
        let data = src.data().iter().map(|&x| f(x)).collect();
        let out = Tensor::new(src.shape().to_vec(), data).expect("unary shape");
        let rg = self.any_grad(&[a]);
        self.push(out, op, rg)
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        same_shape(name, ta, tb)?;
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(out, op, rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape().len() != 2 || tb.shape().len() != 2 || ta.cols() != tb.rows() {
            return Err(Error::dim("matmul", ta.shape(), tb.shape()));
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            ta.data(),
            (k as isize, 1),
            tb.data(),
            (n as isize, 1),
            0.0,
            &mut out,
        );
        let out = Tensor::matrix(m, n, out)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    fn row_broadcast(
        &mut self,
        name: &'static str,
        a: Var,
        row: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var> {
        let (ta, tr) = (&self.nodes[a.0].value, &self.nodes[row.0].value);
        if ta.shape().len() != 2 || tr.numel() != ta.cols() || tr.rows() != 1 {
            return Err(Error::dim(name, ta.shape(), tr.shape()));
        }
        let cols = ta.cols();
        let r = tr.data();
        let data = ta
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, r[i % cols]))
            .collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.any_grad(&[a, row]);
        Ok(self.push(out, op, rg))
    }

    /// `a (m×n) + row (1×n)` broadcast over rows.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_broadcast("add_row", a, row, Op::AddRow(a, row), |x, y| x + y)
    }

    /// `a (m×n) ⊙ row (1×n)` broadcast over rows.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_broadcast("mul_row", a, row, Op::MulRow(a, row), |x, y| x * y)
    }

    /// `scale * a + shift`.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        self.unary(a, Op::Affine(a, scale), |x| scale * x + shift)
    }

    pub fn scale(&mut self, a: Var, scale: f64) -> Var {
        self.affine(a, scale, 0.0)
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.affine(a, -1.0, 1.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, Op::Log(a), f64::ln)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, Op::Abs(a), f64::abs)
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        let rows = self.nodes[first.0].value.rows();
        let mut total = 0;
        for p in parts {
            let t = &self.nodes[p.0].value;
            if t.shape().len() != 2 || t.rows() != rows {
                return Err(Error::dim(
                    "concat_cols",
                    self.nodes[first.0].value.shape(),
                    t.shape(),
                ));
            }
            total += t.cols();
        }
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.nodes[p.0].value.row(r));
            }
        }
        let out = Tensor::matrix(rows, total, data)?;
        let rg = self.any_grad(parts);
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Row-wise stacking of matrices with equal column counts.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("stack of zero tensors".into()))?;
        let cols = self.nodes[first.0].value.cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for p in parts {
            let t = &self.nodes[p.0].value;
            if t.shape().len() != 2 || t.cols() != cols {
                return Err(Error::dim(
                    "stack_rows",
                    self.nodes[first.0].value.shape(),
                    t.shape(),
                ));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let out = Tensor::matrix(rows, cols, data)?;
        let rg = self.any_grad(parts);
        Ok(self.push(out, Op::StackRows(parts.to_vec()), rg))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if t.shape().len() != 2 || start + len > t.cols() {
            return Err(Error::dim("slice_cols", t.shape(), &[start, len]));
        }
        let rows = t.rows();
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&t.row(r)[start..start + len]);
        }
        let out = Tensor::matrix(rows, len, data)?;
        let rg = self.any_grad(&[a]);
        Ok(self.push(out, Op::SliceCols(a, start), rg))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if t.shape().len() != 2 || start + len > t.rows() {
            return Err(Error::dim("slice_rows", t.shape(), &[start, len]));
        }
        let cols = t.cols();
        let data = t.data()[start * cols..(start + len) * cols].to_vec();
        let out = Tensor::matrix(len, cols, data)?;
        let rg = self.any_grad(&[a]);
        Ok(self.push(out, Op::SliceRows(a, start), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.data().iter().sum();
        let rg = self.any_grad(&[a]);
        self.push(Tensor::scalar(s), Op::SumAll(a), rg)
    }

    /// `Σ a ⊙ mask`. Entries where `mask == 0` contribute nothing to the value
    /// and receive an exactly-zero gradient, even when `a` is not finite there.
    pub fn masked_sum(&mut self, a: Var, mask: Var) -> Result<Var> {
        let (ta, tm) = (&self.nodes[a.0].value, &self.nodes[mask.0].value);
        same_shape("masked_sum", ta, tm)?;
        let s = ta
            .data()
            .iter()
            .zip(tm.data())
            .filter(|(_, &m)| m != 0.0)
            .map(|(&x, &m)| x * m)
            .sum();
        let rg = self.any_grad(&[a, mask]);
        Ok(self.push(Tensor::scalar(s), Op::MaskedSum(a, mask), rg))
    }

    fn row_softmax(t: &Tensor, log: bool) -> Tensor {
        let cols = t.cols();
        let mut out = Vec::with_capacity(t.numel());
        for r in 0..t.rows() {
            let row = t.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            if log {
                out.extend(row.iter().map(|&x| x - lse));
            } else {
                out.extend(row.iter().map(|&x| (x - lse).exp()));
            }
        }
        debug_assert_eq!(out.len(), t.rows() * cols);
        Tensor::new(t.shape().to_vec(), out).expect("softmax shape")
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let out = Self::row_softmax(&self.nodes[a.0].value, false);
        let rg = self.any_grad(&[a]);
        self.push(out, Op::SoftmaxRows(a), rg)
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let out = Self::row_softmax(&self.nodes[a.0].value, true);
        let rg = self.any_grad(&[a]);
        self.push(out, Op::LogSoftmaxRows(a), rg)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = &self.nodes[loss.0].value;
        if lt.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        Ok(Gradients {
            grads,
            shapes: self
                .nodes
                .iter()
                .map(|n| n.value.shape().to_vec())
                .collect(),
        })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn val(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Adds `f(i)` into the gradient slot of `v` for every element.
    fn acc_map(
        &self,
        grads: &mut [Option<Vec<f64>>],
        v: Var,
        f: impl Fn(usize) -> f64,
    ) {
        if !self.wants(v) {
            return;
        }
        let n = self.val(v).numel();
        let slot = accumulate(&mut grads[v.0], n);
        for (i, s) in slot.iter_mut().enumerate() {
            *s += f(i);
        }
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let out = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.val(*a), self.val(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                if self.wants(*a) {
                    let slot = accumulate(&mut grads[a.0], m * k);
                    // dA = dC @ Bᵀ
                    gemm(m, n, k, g, (n as isize, 1), tb.data(), (1, n as isize), 1.0, slot);
                }
                if self.wants(*b) {
                    let slot = accumulate(&mut grads[b.0], k * n);
                    // dB = Aᵀ @ dC
                    gemm(k, m, n, ta.data(), (1, k as isize), g, (n as isize, 1), 1.0, slot);
                }
            }
            Op::Add(a, b) => {
                self.acc_map(grads, *a, |i| g[i]);
                self.acc_map(grads, *b, |i| g[i]);
            }
            Op::Sub(a, b) => {
                self.acc_map(grads, *a, |i| g[i]);
                self.acc_map(grads, *b, |i| -g[i]);
            }
            Op::Mul(a, b) => {
                let (da, db) = (self.val(*a).data(), self.val(*b).data());
                self.acc_map(grads, *a, |i| g[i] * db[i]);
                self.acc_map(grads, *b, |i| g[i] * da[i]);
            }
            Op::AddRow(a, row) => {
                self.acc_map(grads, *a, |i| g[i]);
                if self.wants(*row) {
                    let cols = self.val(*row).numel();
                    let slot = accumulate(&mut grads[row.0], cols);
                    for (i, &gi) in g.iter().enumerate() {
                        slot[i % cols] += gi;
                    }
                }
            }
            Op::MulRow(a, row) => {
                let (da, dr) = (self.val(*a).data(), self.val(*row).data());
                let cols = dr.len();
                self.acc_map(grads, *a, |i| g[i] * dr[i % cols]);
                if self.wants(*row) {
                    let slot = accumulate(&mut grads[row.0], cols);
                    for (i, &gi) in g.iter().enumerate() {
                        slot[i % cols] += gi * da[i];
                    }
                }
            }
            Op::Affine(a, scale) => self.acc_map(grads, *a, |i| g[i] * scale),
            Op::Sigmoid(a) => self.acc_map(grads, *a, |i| g[i] * out[i] * (1.0 - out[i])),
            Op::Tanh(a) => self.acc_map(grads, *a, |i| g[i] * (1.0 - out[i] * out[i])),
            Op::Exp(a) => self.acc_map(grads, *a, |i| g[i] * out[i]),
            Op::Relu(a) => {
                let x = self.val(*a).data();
                self.acc_map(grads, *a, |i| if x[i] > 0.0 { g[i] } else { 0.0 })
            }
            Op::Log(a) => {
                let x = self.val(*a).data();
                self.acc_map(grads, *a, |i| g[i] / x[i])
            }
            Op::Square(a) => {
                let x = self.val(*a).data();
                self.acc_map(grads, *a, |i| 2.0 * x[i] * g[i])
            }
            Op::Abs(a) => {
                // Subgradient 0 at the kink.
                let x = self.val(*a).data();
                self.acc_map(grads, *a, |i| {
                    if x[i] > 0.0 {
                        g[i]
                    } else if x[i] < 0.0 {
                        -g[i]
                    } else {
                        0.0
                    }
                })
            }
            Op::ConcatCols(parts) => {
                let total = node.value.cols();
                let mut offset = 0;
                for p in parts {
                    let w = self.val(*p).cols();
                    self.acc_map(grads, *p, |i| {
                        let (r, c) = (i / w, i % w);
                        g[r * total + offset + c]
                    });
                    offset += w;
                }
            }
            Op::StackRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.val(*p).numel();
                    self.acc_map(grads, *p, |i| g[offset + i]);
                    offset += n;
                }
            }
            Op::SliceCols(a, start) => {
                let (w, src_cols) = (node.value.cols(), self.val(*a).cols());
                if self.wants(*a) {
                    let slot = accumulate(&mut grads[a.0], self.val(*a).numel());
                    for (i, &gi) in g.iter().enumerate() {
                        slot[(i / w) * src_cols + start + i % w] += gi;
                    }
                }
            }
            Op::SliceRows(a, start) => {
                if self.wants(*a) {
                    let cols = node.value.cols();
                    let slot = accumulate(&mut grads[a.0], self.val(*a).numel());
                    let base = start * cols;
                    for (i, &gi) in g.iter().enumerate() {
                        slot[base + i] += gi;
                    }
                }
            }
            Op::SumAll(a) => self.acc_map(grads, *a, |_| g[0]),
            Op::MaskedSum(a, mask) => {
                let (da, dm) = (self.val(*a).data(), self.val(*mask).data());
                self.acc_map(grads, *a, |i| if dm[i] != 0.0 { g[0] * dm[i] } else { 0.0 });
                self.acc_map(grads, *mask, |i| if dm[i] != 0.0 { g[0] * da[i] } else { 0.0 });
            }
            Op::SoftmaxRows(a) => {
                if self.wants(*a) {
                    let cols = node.value.cols();
                    let slot = accumulate(&mut grads[a.0], out.len());
                    for r in 0..node.value.rows() {
                        let s = &out[r * cols..(r + 1) * cols];
                        let gr = &g[r * cols..(r + 1) * cols];
                        let dot: f64 = s.iter().zip(gr).map(|(x, y)| x * y).sum();
                        for c in 0..cols {
                            slot[r * cols + c] += s[c] * (gr[c] - dot);
                        }
                    }
                }
            }
            Op::LogSoftmaxRows(a) => {
                if self.wants(*a) {
                    let cols = node.value.cols();
                    let slot = accumulate(&mut grads[a.0], out.len());
                    for r in 0..node.value.rows() {
                        let ls = &out[r * cols..(r + 1) * cols];
                        let gr = &g[r * cols..(r + 1) * cols];
                        let total: f64 = gr.iter().sum();
                        for c in 0..cols {
                            slot[r * cols + c] += gr[c] - ls[c].exp() * total;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(g: &mut Graph, rows: &[Vec<f64>]) -> Var {
        g.leaf(Tensor::from_rows(rows).unwrap().with_grad())
    }

    #[test]
    fn sigmoid_and_tanh_at_zero() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(0.0));
        let s = g.sigmoid(x);
        let t = g.tanh(x);
        assert_eq!(g.value(s).item(), 0.5);
        assert_eq!(g.value(t).item(), 0.0);
    }

    #[test]
    fn identity_matmul() {
        let mut g = Graph::new();
        let a = Tensor::from_rows(&[
            vec![1.0, -2.0, 3.5],
            vec![0.25, 4.0, -1.0],
            vec![7.0, 0.0, 2.0],
        ])
        .unwrap();
        let i = g.constant(Tensor::eye(3));
        let av = g.constant(a.clone());
        let p = g.matmul(i, av).unwrap();
        assert_eq!(g.value(p).data(), a.data());
    }

    #[test]
    fn shape_errors_name_the_primitive() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        match g.matmul(a, b) {
            Err(Error::Dimension { op, lhs, rhs }) => {
                assert_eq!(op, "matmul");
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![2, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let c = g.constant(Tensor::zeros(&[3, 2]));
        assert!(matches!(g.add(a, c), Err(Error::Dimension { op: "add", .. })));
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(3.0).with_grad());
        let y = g.square(x);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.wrt(x).item(), 6.0);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(0.0).with_grad());
        let y = g.sigmoid(x);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.wrt(x).item(), 0.25);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut g = Graph::new();
        let x = param(&mut g, &[vec![1.0, 2.0]]);
        assert!(matches!(g.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn unreachable_parameter_gets_zero_gradient() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(2.0).with_grad());
        let unused = param(&mut g, &[vec![1.0, 2.0]]);
        let y = g.square(x);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.wrt(unused).data(), &[0.0, 0.0]);
    }

    #[test]
    fn abs_subgradient_is_zero_at_kink() {
        let mut g = Graph::new();
        let x = param(&mut g, &[vec![0.0, -1.0, 2.0]]);
        let a = g.abs(x);
        let s = g.sum(a);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.wrt(x).data(), &[0.0, -1.0, 1.0]);
    }

    #[test]
    fn masked_sum_ignores_non_finite_masked_entries() {
        let mut g = Graph::new();
        let x = param(&mut g, &[vec![1.0, f64::INFINITY, 3.0]]);
        let m = g.constant(Tensor::from_rows(&[vec![1.0, 0.0, 1.0]]).unwrap());
        let s = g.masked_sum(x, m).unwrap();
        assert_eq!(g.value(s).item(), 4.0);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.wrt(x).data(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::from_rows(&[vec![1000.0, 0.0], vec![-3.0, 2.0]]).unwrap());
        let s = g.softmax_rows(x);
        for r in 0..2 {
            let row = g.value(s).row(r);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_is_deterministic() {
        let build = || {
            let mut g = Graph::new();
            let w = param(&mut g, &[vec![0.3, -0.7], vec![1.1, 0.2]]);
            let x = g.constant(Tensor::from_rows(&[vec![0.5, -1.5], vec![2.0, 0.1]]).unwrap());
            let h = g.matmul(x, w).unwrap();
            let t = g.tanh(h);
            let sq = g.square(t);
            let loss = g.sum(sq);
            let grads = g.backward(loss).unwrap();
            grads.wrt(w)
        };
        let (a, b) = (build(), build());
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
