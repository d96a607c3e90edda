//! Tape-based reverse-mode differentiation over dense tensors.
//!
//! Every operation appends a node to the tape; node order is therefore a
//! topological order and [`Tape::backward`] replays it in reverse. A tape is
//! meant to live for one forward/backward pass and is dropped afterwards.
//!
//! Parameter tensors are borrowed by the tape rather than copied, which keeps
//! large embedding tables cheap to bind on every step.

use std::cell::{Cell, Ref, RefCell};
use std::ops::Deref;

use super::tensor::{axis_strides, softmax_along, Tensor};
use crate::error::{Error, Result};

/// Lower bound applied to a probability before taking its logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Tolerance on `sum(probs) == 1` accepted by [`Tape::cross_entropy`].
pub const DISTRIBUTION_TOL: f64 = 1e-6;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }

    pub(crate) fn from_id(id: usize) -> Var {
        Var(id)
    }
}

enum Value<'a> {
    Owned(Tensor),
    Borrowed(&'a Tensor),
}

impl Deref for Value<'_> {
    type Target = Tensor;

    fn deref(&self) -> &Tensor {
        match self {
            Value::Owned(t) => t,
            Value::Borrowed(t) => t,
        }
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, scale: f64 },
    ScalarMul { s: Var, x: Var },
    Linear { x: Var, w: Var, b: Var },
    Tanh(Var),
    Softmax { x: Var, axis: usize },
    NegLog { x: Var, index: usize, floored: bool },
    Sum(Var),
    Mean(Var),
    Index { x: Var, index: usize },
    Row { x: Var, row: usize },
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    StackRows(Vec<Var>),
    EmbeddingBag { table: Var, counts: Vec<(usize, f64)> },
}

impl Op {
    fn parents(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::ScalarMul { s, x } => vec![*s, *x],
            Op::Linear { x, w, b } => vec![*x, *w, *b],
            Op::Transpose(x)
            | Op::Tanh(x)
            | Op::Sum(x)
            | Op::Mean(x)
            | Op::Affine { x, .. }
            | Op::Softmax { x, .. }
            | Op::NegLog { x, .. }
            | Op::Index { x, .. }
            | Op::Row { x, .. }
            | Op::SliceCols { x, .. } => vec![*x],
            Op::ConcatCols(xs) | Op::StackRows(xs) => xs.clone(),
            Op::EmbeddingBag { table, .. } => vec![*table],
        }
    }
}

struct Node<'a> {
    value: Value<'a>,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when the variable does not influence the loss or does not require grad.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

#[derive(Default)]
pub struct Tape<'a> {
    nodes: RefCell<Vec<Node<'a>>>,
    floor_hits: Cell<usize>,
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of times [`Tape::cross_entropy`] had to floor a probability.
    pub fn floor_hits(&self) -> usize {
        self.floor_hits.get()
    }

    /// Borrow an existing tensor as a leaf.
    pub fn leaf(&self, tensor: &'a Tensor, requires_grad: bool) -> Var {
        self.push_node(Value::Borrowed(tensor), Op::Leaf, requires_grad)
    }

    /// Borrowed trainable leaf.
    pub fn param(&self, tensor: &'a Tensor) -> Var {
        self.leaf(tensor, true)
    }

    /// Owned leaf that receives gradients.
    pub fn variable(&self, tensor: Tensor) -> Var {
        self.push_node(Value::Owned(tensor), Op::Leaf, true)
    }

    /// Owned leaf without gradient.
    pub fn constant(&self, tensor: Tensor) -> Var {
        self.push_node(Value::Owned(tensor), Op::Leaf, false)
    }

    pub fn value(&self, var: Var) -> Ref<'_, Tensor> {
        Ref::map(self.nodes.borrow(), |nodes| &*nodes[var.0].value)
    }

    pub fn scalar(&self, var: Var) -> f64 {
        self.value(var).data()[0]
    }

    pub fn shape(&self, var: Var) -> Vec<usize> {
        self.value(var).shape().to_vec()
    }

    fn push_node(&self, value: Value<'a>, op: Op, requires_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(nodes.len() - 1)
    }

    fn push(&self, value: Tensor, op: Op) -> Var {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            op.parents().iter().any(|p| nodes[p.0].requires_grad)
        };
        self.push_node(Value::Owned(value), op, requires_grad)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(&self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn transpose(&self, x: Var) -> Result<Var> {
        let out = self.value(x).transpose()?;
        Ok(self.push(out, Op::Transpose(x)))
    }

    fn zip_with(&self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(op, ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with("add", a, b, |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with("sub", a, b, |x, y| x - y)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with("mul", a, b, |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// `scale * x + shift`, elementwise.
    pub fn affine(&self, x: Var, scale: f64, shift: f64) -> Var {
        let out = self.value(x).map(|v| scale * v + shift);
        self.push(out, Op::Affine { x, scale })
    }

    pub fn scale(&self, x: Var, scale: f64) -> Var {
        self.affine(x, scale, 0.0)
    }

    /// Multiplies every element of `x` by the single value held in `s`.
    pub fn scalar_mul(&self, s: Var, x: Var) -> Result<Var> {
        let sv = {
            let st = self.value(s);
            if !st.is_scalar() {
                return Err(Error::shape("scalar_mul", st.shape(), &[1]));
            }
            st.data()[0]
        };
        let out = self.value(x).map(|v| sv * v);
        Ok(self.push(out, Op::ScalarMul { s, x }))
    }

    /// `x · wᵀ + b` with `x: m×in`, `w: out×in`, `b` holding `out` values.
    pub fn linear(&self, x: Var, w: Var, b: Var) -> Result<Var> {
        let out = {
            let (tx, tw, tb) = (self.value(x), self.value(w), self.value(b));
            let (m, k) = tx.dims2()?;
            let (n, k2) = tw.dims2()?;
            if k != k2 {
                return Err(Error::shape("linear", tx.shape(), tw.shape()));
            }
            if tb.len() != n {
                return Err(Error::shape("linear bias", tw.shape(), tb.shape()));
            }
            let mut data = vec![0.0; m * n];
            for i in 0..m {
                let xr = tx.row_slice(i);
                for j in 0..n {
                    let wr = tw.row_slice(j);
                    let dot: f64 = xr.iter().zip(wr).map(|(a, b)| a * b).sum();
                    data[i * n + j] = dot + tb.data()[j];
                }
            }
            Tensor::matrix(m, n, data)?
        };
        Ok(self.push(out, Op::Linear { x, w, b }))
    }

    pub fn tanh(&self, x: Var) -> Var {
        let out = self.value(x).map(f64::tanh);
        self.push(out, Op::Tanh(x))
    }

    pub fn softmax(&self, x: Var, axis: usize) -> Result<Var> {
        let out = {
            let t = self.value(x);
            if axis >= t.rank() {
                return Err(Error::contract(format!(
                    "softmax axis {axis} out of range for shape {:?}",
                    t.shape()
                )));
            }
            if !t.is_finite() {
                return Err(Error::Numeric("softmax input is not finite".into()));
            }
            Tensor::new(t.shape().to_vec(), softmax_along(t.shape(), t.data(), axis))?
        };
        Ok(self.push(out, Op::Softmax { x, axis }))
    }

    /// `-ln(probs[target])` for a probability vector; floored at [`LOG_FLOOR`].
    pub fn cross_entropy(&self, probs: Var, target: usize) -> Result<Var> {
        let (p, floored) = {
            let t = self.value(probs);
            if target >= t.len() {
                return Err(Error::contract(format!(
                    "target class {target} out of range for {} classes",
                    t.len()
                )));
            }
            let total = t.sum();
            if (total - 1.0).abs() > DISTRIBUTION_TOL || t.data().iter().any(|&v| v < 0.0) {
                return Err(Error::contract(format!(
                    "cross_entropy expects a probability vector, sum was {total}"
                )));
            }
            let p = t.data()[target];
            (p.max(LOG_FLOOR), p < LOG_FLOOR)
        };
        if floored {
            self.floor_hits.set(self.floor_hits.get() + 1);
            log::warn!("cross_entropy: probability of class {target} floored at {LOG_FLOOR:e}");
        }
        Ok(self.push(
            Tensor::scalar(-p.ln()),
            Op::NegLog {
                x: probs,
                index: target,
                floored,
            },
        ))
    }

    pub fn sum(&self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&self, x: Var) -> Var {
        let s = {
            let t = self.value(x);
            t.sum() / t.len() as f64
        };
        self.push(Tensor::scalar(s), Op::Mean(x))
    }

    /// Sum of scalar variables, accumulated left to right.
    pub fn add_all(&self, xs: &[Var]) -> Result<Var> {
        let (first, rest) = xs
            .split_first()
            .ok_or_else(|| Error::contract("add_all of an empty list"))?;
        rest.iter().try_fold(*first, |acc, &x| self.add(acc, x))
    }

    /// Element `index` of the flattened tensor, as a scalar.
    pub fn index(&self, x: Var, index: usize) -> Result<Var> {
        let v = {
            let t = self.value(x);
            *t.data().get(index).ok_or_else(|| {
                Error::contract(format!("index {index} out of range for {:?}", t.shape()))
            })?
        };
        Ok(self.push(Tensor::scalar(v), Op::Index { x, index }))
    }

    /// Row `row` of a matrix, as `1 × cols`.
    pub fn row(&self, x: Var, row: usize) -> Result<Var> {
        let out = {
            let t = self.value(x);
            let (rows, _) = t.dims2()?;
            if row >= rows {
                return Err(Error::contract(format!("row {row} out of range for {rows} rows")));
            }
            Tensor::row(t.row_slice(row))
        };
        Ok(self.push(out, Op::Row { x, row }))
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&self, x: Var, start: usize, end: usize) -> Result<Var> {
        let out = {
            let t = self.value(x);
            let (rows, cols) = t.dims2()?;
            if start >= end || end > cols {
                return Err(Error::contract(format!(
                    "column slice {start}..{end} invalid for {cols} columns"
                )));
            }
            let data = (0..rows)
                .flat_map(|r| t.row_slice(r)[start..end].iter().copied())
                .collect();
            Tensor::matrix(rows, end - start, data)?
        };
        Ok(self.push(out, Op::SliceCols { x, start }))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(&self, xs: &[Var]) -> Result<Var> {
        let out = {
            let parts: Vec<Ref<'_, Tensor>> = xs.iter().map(|&x| self.value(x)).collect();
            let first = parts.first().ok_or_else(|| Error::contract("concat of nothing"))?;
            let (rows, _) = first.dims2()?;
            let mut widths = Vec::with_capacity(parts.len());
            for p in &parts {
                let (r, c) = p.dims2()?;
                if r != rows {
                    return Err(Error::shape("concat_cols", first.shape(), p.shape()));
                }
                widths.push(c);
            }
            let total: usize = widths.iter().sum();
            let mut data = Vec::with_capacity(rows * total);
            for r in 0..rows {
                for p in &parts {
                    data.extend_from_slice(p.row_slice(r));
                }
            }
            Tensor::matrix(rows, total, data)?
        };
        Ok(self.push(out, Op::ConcatCols(xs.to_vec())))
    }

    /// Stacks equally sized tensors as the rows of a matrix.
    pub fn stack_rows(&self, xs: &[Var]) -> Result<Var> {
        let out = {
            let parts: Vec<Ref<'_, Tensor>> = xs.iter().map(|&x| self.value(x)).collect();
            let first = parts.first().ok_or_else(|| Error::contract("stack of nothing"))?;
            let width = first.len();
            let mut data = Vec::with_capacity(width * parts.len());
            for p in &parts {
                if p.len() != width {
                    return Err(Error::shape("stack_rows", first.shape(), p.shape()));
                }
                data.extend_from_slice(p.data());
            }
            Tensor::matrix(parts.len(), width, data)?
        };
        Ok(self.push(out, Op::StackRows(xs.to_vec())))
    }

    /// `Σ count · table[token]` over sparse `(token, count)` pairs, as `1 × d`.
    /// An empty bag yields the zero row.
    pub fn embedding_bag(&self, table: Var, counts: &[(usize, f64)]) -> Result<Var> {
        let out = {
            let t = self.value(table);
            let (vocab, width) = t.dims2()?;
            let mut acc = vec![0.0; width];
            for &(token, count) in counts {
                if token >= vocab {
                    return Err(Error::contract(format!(
                        "token bucket {token} out of range for table of {vocab} rows"
                    )));
                }
                for (a, w) in acc.iter_mut().zip(t.row_slice(token)) {
                    *a += count * w;
                }
            }
            Tensor::matrix(1, width, acc)?
        };
        Ok(self.push(
            out,
            Op::EmbeddingBag {
                table,
                counts: counts.to_vec(),
            },
        ))
    }

    /// Reverse sweep from a scalar `loss`. Gradients accumulate additively
    /// over every use of a variable.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let loss_value = &nodes[loss.0].value;
        if !loss_value.is_scalar() {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss_value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(loss_value.shape(), 1.0));

        for id in (0..=loss.0).rev() {
            if !nodes[id].requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            propagate(&nodes, id, &g, &mut grads)?;
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

/// Gradient buffer of `var`, created as zeros on first touch; `None` when
/// the variable does not require grad.
fn slot<'g>(nodes: &[Node<'_>], grads: &'g mut [Option<Tensor>], var: Var) -> Option<&'g mut [f64]> {
    let node = &nodes[var.0];
    if !node.requires_grad {
        return None;
    }
    Some(
        grads[var.0]
            .get_or_insert_with(|| Tensor::zeros(node.value.shape()))
            .data_mut(),
    )
}

fn propagate(nodes: &[Node<'_>], id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
    let node = &nodes[id];
    let gd = g.data();
    let val = |v: Var| -> &Tensor { &nodes[v.0].value };
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (ta, tb) = (val(*a), val(*b));
            let (m, k) = ta.dims2()?;
            let (_, n) = tb.dims2()?;
            if let Some(da) = slot(nodes, grads, *a) {
                // dA = dC · Bᵀ
                for i in 0..m {
                    for p in 0..k {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += gd[i * n + j] * tb.data()[p * n + j];
                        }
                        da[i * k + p] += acc;
                    }
                }
            }
            if let Some(db) = slot(nodes, grads, *b) {
                // dB = Aᵀ · dC
                for i in 0..m {
                    for p in 0..k {
                        let av = ta.data()[i * k + p];
                        for j in 0..n {
                            db[p * n + j] += av * gd[i * n + j];
                        }
                    }
                }
            }
        }
        Op::Transpose(x) => {
            let (rows, cols) = g.dims2()?;
            if let Some(dx) = slot(nodes, grads, *x) {
                for i in 0..rows {
                    for j in 0..cols {
                        dx[j * rows + i] += gd[i * cols + j];
                    }
                }
            }
        }
        Op::Add(a, b) => {
            for v in [a, b] {
                if let Some(d) = slot(nodes, grads, *v) {
                    d.iter_mut().zip(gd).for_each(|(d, g)| *d += g);
                }
            }
        }
        Op::Sub(a, b) => {
            if let Some(d) = slot(nodes, grads, *a) {
                d.iter_mut().zip(gd).for_each(|(d, g)| *d += g);
            }
            if let Some(d) = slot(nodes, grads, *b) {
                d.iter_mut().zip(gd).for_each(|(d, g)| *d -= g);
            }
        }
        Op::Mul(a, b) => {
            let (ta, tb) = (val(*a), val(*b));
            if let Some(d) = slot(nodes, grads, *a) {
                for ((d, g), y) in d.iter_mut().zip(gd).zip(tb.data()) {
                    *d += g * y;
                }
            }
            if let Some(d) = slot(nodes, grads, *b) {
                for ((d, g), x) in d.iter_mut().zip(gd).zip(ta.data()) {
                    *d += g * x;
                }
            }
        }
        Op::Affine { x, scale } => {
            if let Some(d) = slot(nodes, grads, *x) {
                d.iter_mut().zip(gd).for_each(|(d, g)| *d += scale * g);
            }
        }
        Op::ScalarMul { s, x } => {
            let sv = val(*s).data()[0];
            let tx = val(*x);
            if let Some(d) = slot(nodes, grads, *s) {
                d[0] += gd.iter().zip(tx.data()).map(|(g, x)| g * x).sum::<f64>();
            }
            if let Some(d) = slot(nodes, grads, *x) {
                d.iter_mut().zip(gd).for_each(|(d, g)| *d += sv * g);
            }
        }
        Op::Linear { x, w, b } => {
            let (tx, tw) = (val(*x), val(*w));
            let (m, k) = tx.dims2()?;
            let (n, _) = tw.dims2()?;
            if let Some(dx) = slot(nodes, grads, *x) {
                for i in 0..m {
                    for j in 0..n {
                        let gv = gd[i * n + j];
                        for p in 0..k {
                            dx[i * k + p] += gv * tw.data()[j * k + p];
                        }
                    }
                }
            }
            if let Some(dw) = slot(nodes, grads, *w) {
                for i in 0..m {
                    for j in 0..n {
                        let gv = gd[i * n + j];
                        for p in 0..k {
                            dw[j * k + p] += gv * tx.data()[i * k + p];
                        }
                    }
                }
            }
            if let Some(db) = slot(nodes, grads, *b) {
                for i in 0..m {
                    for j in 0..n {
                        db[j] += gd[i * n + j];
                    }
                }
            }
        }
        Op::Tanh(x) => {
            let y = node.value.data();
            if let Some(d) = slot(nodes, grads, *x) {
                for ((d, g), y) in d.iter_mut().zip(gd).zip(y) {
                    *d += g * (1.0 - y * y);
                }
            }
        }
        Op::Softmax { x, axis } => {
            let y = &node.value;
            let (outer, len, inner) = axis_strides(y.shape(), *axis);
            if let Some(d) = slot(nodes, grads, *x) {
                let yd = y.data();
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |j: usize| (o * len + j) * inner + i;
                        let dot: f64 = (0..len).map(|j| gd[idx(j)] * yd[idx(j)]).sum();
                        for j in 0..len {
                            d[idx(j)] += yd[idx(j)] * (gd[idx(j)] - dot);
                        }
                    }
                }
            }
        }
        Op::NegLog { x, index, floored } => {
            if *floored {
                return Ok(());
            }
            let p = val(*x).data()[*index];
            if let Some(d) = slot(nodes, grads, *x) {
                d[*index] -= gd[0] / p;
            }
        }
        Op::Sum(x) => {
            if let Some(d) = slot(nodes, grads, *x) {
                d.iter_mut().for_each(|d| *d += gd[0]);
            }
        }
        Op::Mean(x) => {
            if let Some(d) = slot(nodes, grads, *x) {
                let share = gd[0] / d.len() as f64;
                d.iter_mut().for_each(|d| *d += share);
            }
        }
        Op::Index { x, index } => {
            if let Some(d) = slot(nodes, grads, *x) {
                d[*index] += gd[0];
            }
        }
        Op::Row { x, row } => {
            if let Some(d) = slot(nodes, grads, *x) {
                let cols = gd.len();
                d[row * cols..(row + 1) * cols]
                    .iter_mut()
                    .zip(gd)
                    .for_each(|(d, g)| *d += g);
            }
        }
        Op::SliceCols { x, start } => {
            let (rows, width) = g.dims2()?;
            let cols = val(*x).dims2()?.1;
            if let Some(d) = slot(nodes, grads, *x) {
                for r in 0..rows {
                    for c in 0..width {
                        d[r * cols + start + c] += gd[r * width + c];
                    }
                }
            }
        }
        Op::ConcatCols(xs) => {
            let (rows, total) = g.dims2()?;
            let mut offset = 0;
            for &x in xs {
                let width = val(x).dims2()?.1;
                if let Some(d) = slot(nodes, grads, x) {
                    for r in 0..rows {
                        for c in 0..width {
                            d[r * width + c] += gd[r * total + offset + c];
                        }
                    }
                }
                offset += width;
            }
        }
        Op::StackRows(xs) => {
            let width = g.dims2()?.1;
            for (r, &x) in xs.iter().enumerate() {
                if let Some(d) = slot(nodes, grads, x) {
                    d.iter_mut()
                        .zip(&gd[r * width..(r + 1) * width])
                        .for_each(|(d, g)| *d += g);
                }
            }
        }
        Op::EmbeddingBag { table, counts } => {
            let width = gd.len();
            if let Some(d) = slot(nodes, grads, *table) {
                for &(token, count) in counts {
                    d[token * width..(token + 1) * width]
                        .iter_mut()
                        .zip(gd)
                        .for_each(|(d, g)| *d += count * g);
                }
            }
        }
    }
    Ok(())
}

/// Plain matrix product used by oracles and callers outside a tape.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.matmul(b)
}

/// Softmax along `axis` outside a tape.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    let tape = Tape::new();
    let v = tape.leaf(x, false);
    let out = tape.softmax(v, axis)?;
    let t = tape.value(out).clone();
    Ok(t)
}

/// `x · wᵀ + b` outside a tape.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let tape = Tape::new();
    let (vx, vw, vb) = (tape.leaf(x, false), tape.leaf(w, false), tape.leaf(b, false));
    let out = tape.linear(vx, vw, vb)?;
    let t = tape.value(out).clone();
    Ok(t)
}

/// `-ln(probs[target])` outside a tape. Returns the loss and whether the floor was hit.
pub fn cross_entropy(probs: &Tensor, target: usize) -> Result<(f64, bool)> {
    let tape = Tape::new();
    let p = tape.leaf(probs, false);
    let out = tape.cross_entropy(p, target)?;
    Ok((tape.scalar(out), tape.floor_hits() > 0))
}
