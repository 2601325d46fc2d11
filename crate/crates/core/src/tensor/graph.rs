use rand::Rng;

use super::{Tensor, TensorError};

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
    Transpose(Var),
    Affine(Var, Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Reshape(Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var, usize),
    LogSumExpSets(Var, Vec<Vec<(usize, f64)>>),
    GatherRows(Var, Vec<usize>),
    SliceCols(Var, usize),
    Dropout(Var, Vec<f64>),
    ConvMaxPool {
        input: Var,
        weight: Var,
        bias: Var,
        window: usize,
        argmax: Vec<usize>,
    },
    Rope(Var, i64),
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Define-by-run computation tape.
///
/// Nodes are appended in execution order, so parents always precede their
/// children. [`Graph::backward`] may run once per recording; a second call is
/// rejected until [`Graph::reset`] clears the tape.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    backward_done: bool,
}

fn shape_err(op: &'static str, left: &[usize], right: &[usize]) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}

fn invalid(op: &'static str, reason: impl Into<String>) -> TensorError {
    TensorError::Invalid {
        op,
        reason: reason.into(),
    }
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn rope_theta(pair: usize, dim: usize) -> f64 {
    10000f64.powf(-2.0 * pair as f64 / dim as f64)
}

/// Rotates consecutive pairs of every row; row `i` sits at position `i + offset`.
/// `sign = -1.0` applies the transpose rotation.
fn rope_raw(data: &[f64], rows: usize, dim: usize, offset: i64, sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        let pos = (r as i64 + offset) as f64;
        for k in 0..dim / 2 {
            let angle = sign * pos * rope_theta(k, dim);
            let (sin, cos) = angle.sin_cos();
            let x0 = data[r * dim + 2 * k];
            let x1 = data[r * dim + 2 * k + 1];
            out[r * dim + 2 * k] = x0 * cos - x1 * sin;
            out[r * dim + 2 * k + 1] = x0 * sin + x1 * cos;
        }
    }
    out
}

fn as_matrix(op: &'static str, t: &Tensor) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        other => Err(invalid(
            op,
            format!("expected a matrix, got shape {other:?}"),
        )),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops every recorded node so the tape can be reused for the next step.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.grads.clear();
        self.backward_done = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient accumulated by the last backward pass, if `v` received one.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = as_matrix("matmul", ta)?;
        let (k2, n) = as_matrix("matmul", tb)?;
        if k != k2 {
            return Err(shape_err("matmul", ta.shape(), tb.shape()));
        }
        let data = matmul_raw(ta.data(), tb.data(), m, k, n);
        Ok(self.push(Tensor::new(vec![m, n], data)?, Op::MatMul(a, b), &[a, b]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let t = self.value(a);
        let (m, n) = as_matrix("transpose", t)?;
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = t.data()[i * n + j];
            }
        }
        Ok(self.push(Tensor::new(vec![n, m], data)?, Op::Transpose(a), &[a]))
    }

    /// `x · w + b` with `b` broadcast over rows.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let (tx, tw, tb) = (self.value(x), self.value(w), self.value(b));
        let (m, k) = as_matrix("affine", tx)?;
        let (k2, n) = as_matrix("affine", tw)?;
        if k != k2 {
            return Err(shape_err("affine", tx.shape(), tw.shape()));
        }
        if tb.shape() != [n] {
            return Err(shape_err("affine", tw.shape(), tb.shape()));
        }
        let mut data = matmul_raw(tx.data(), tw.data(), m, k, n);
        for row in data.chunks_mut(n) {
            for (o, bv) in row.iter_mut().zip(tb.data()) {
                *o += bv;
            }
        }
        Ok(self.push(
            Tensor::new(vec![m, n], data)?,
            Op::Affine(x, w, b),
            &[x, w, b],
        ))
    }

    fn zip_same(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, ta.shape(), tb.shape()));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.push(t, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same("sub", a, b, |x, y| x - y)?;
        Ok(self.push(t, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.push(t, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let t = self.value(a);
        let data = t.data().iter().map(|v| v * factor).collect();
        let t = Tensor {
            shape: t.shape().to_vec(),
            data,
        };
        self.push(t, Op::Scale(a, factor), &[a])
    }

    /// Concatenates matrices along the last axis.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts
            .first()
            .ok_or_else(|| invalid("concat_cols", "no inputs"))?;
        let (rows, _) = as_matrix("concat_cols", self.value(*first))?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let t = self.value(*p);
            let (r, c) = as_matrix("concat_cols", t)?;
            if r != rows {
                return Err(shape_err(
                    "concat_cols",
                    self.value(*first).shape(),
                    t.shape(),
                ));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        Ok(self.push(
            Tensor::new(vec![rows, total], data)?,
            Op::ConcatCols(parts.to_vec()),
            parts,
        ))
    }

    /// Stacks matrices with equal column counts.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts
            .first()
            .ok_or_else(|| invalid("concat_rows", "no inputs"))?;
        let (_, cols) = as_matrix("concat_rows", self.value(*first))?;
        let mut rows = 0;
        let mut data = Vec::new();
        for p in parts {
            let t = self.value(*p);
            let (r, c) = as_matrix("concat_rows", t)?;
            if c != cols {
                return Err(shape_err(
                    "concat_rows",
                    self.value(*first).shape(),
                    t.shape(),
                ));
            }
            rows += r;
            data.extend_from_slice(t.data());
        }
        Ok(self.push(
            Tensor::new(vec![rows, cols], data)?,
            Op::ConcatRows(parts.to_vec()),
            parts,
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(a);
        let len: usize = shape.iter().product();
        if len != t.len() {
            return Err(shape_err("reshape", t.shape(), shape));
        }
        let t = Tensor {
            shape: shape.to_vec(),
            data: t.data().to_vec(),
        };
        Ok(self.push(t, Op::Reshape(a), &[a]))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(a);
        Tensor {
            shape: t.shape().to_vec(),
            data: t.data().iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let t = self.map(a, |v| v.max(0.0));
        self.push(t, Op::Relu(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = self.map(a, |v| 1.0 / (1.0 + (-v).exp()));
        self.push(t, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.map(a, f64::tanh);
        self.push(t, Op::Tanh(a), &[a])
    }

    /// Softmax of a matrix along `axis` (0 normalises columns, 1 rows), or of
    /// a vector along axis 0.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var, TensorError> {
        let t = self.value(a);
        let (rows, cols) = match t.shape() {
            [n] if axis == 0 => (1, *n),
            [r, c] if axis <= 1 => (*r, *c),
            other => {
                return Err(invalid(
                    "softmax",
                    format!("axis {axis} out of range for shape {other:?}"),
                ))
            }
        };
        let mut data = t.data().to_vec();
        let (lanes, lane_len, stride, step) = if t.shape().len() == 1 || axis == 1 {
            (rows, cols, cols, 1)
        } else {
            (cols, rows, 1, cols)
        };
        for lane in 0..lanes {
            let idx = |p: usize| lane * stride + p * step;
            let max = (0..lane_len)
                .map(|p| data[idx(p)])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for p in 0..lane_len {
                let e = (data[idx(p)] - max).exp();
                data[idx(p)] = e;
                total += e;
            }
            for p in 0..lane_len {
                data[idx(p)] /= total;
            }
        }
        let t = Tensor {
            shape: t.shape().to_vec(),
            data,
        };
        Ok(self.push(t, Op::Softmax(a, axis), &[a]))
    }

    /// For each set of `(flat index, coefficient)` pairs computes
    /// `log Σ exp(coefficient · x[index])`. Output has one entry per set.
    pub fn logsumexp_sets(
        &mut self,
        x: Var,
        sets: Vec<Vec<(usize, f64)>>,
    ) -> Result<Var, TensorError> {
        let t = self.value(x);
        let mut out = Vec::with_capacity(sets.len());
        for set in &sets {
            if set.is_empty() {
                return Err(invalid("logsumexp_sets", "empty entry set"));
            }
            if let Some((idx, _)) = set.iter().find(|(i, _)| *i >= t.len()) {
                return Err(invalid(
                    "logsumexp_sets",
                    format!("index {idx} outside tensor of length {}", t.len()),
                ));
            }
            let max = set
                .iter()
                .map(|(i, c)| c * t.data()[*i])
                .fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = set
                .iter()
                .map(|(i, c)| (c * t.data()[*i] - max).exp())
                .sum();
            out.push(max + total.ln());
        }
        Ok(self.push(Tensor::vector(out), Op::LogSumExpSets(x, sets), &[x]))
    }

    /// Embedding lookup: selects rows of `table`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        let (rows, cols) = as_matrix("gather_rows", t)?;
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            if id >= rows {
                return Err(invalid(
                    "gather_rows",
                    format!("row {id} out of range for table {:?}", t.shape()),
                ));
            }
            data.extend_from_slice(t.row(id));
        }
        Ok(self.push(
            Tensor::new(vec![ids.len(), cols], data)?,
            Op::GatherRows(table, ids.to_vec()),
            &[table],
        ))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let t = self.value(a);
        let (rows, cols) = as_matrix("slice_cols", t)?;
        if start + len > cols {
            return Err(invalid(
                "slice_cols",
                format!("columns {start}..{} outside width {cols}", start + len),
            ));
        }
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&t.row(r)[start..start + len]);
        }
        Ok(self.push(
            Tensor::new(vec![rows, len], data)?,
            Op::SliceCols(a, start),
            &[a],
        ))
    }

    /// Inverted dropout. With `rate == 0` the input is returned unchanged.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        rate: f64,
        rng: &mut R,
    ) -> Result<Var, TensorError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(invalid("dropout", format!("rate {rate} outside [0, 1)")));
        }
        if rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let len = self.value(a).len();
        let mask: Vec<f64> = (0..len)
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let t = self.value(a);
        let t = Tensor {
            shape: t.shape().to_vec(),
            data: t.data().iter().zip(&mask).map(|(v, m)| v * m).collect(),
        };
        Ok(self.push(t, Op::Dropout(a, mask), &[a]))
    }

    /// Same-padded 1-D convolution over the rows of `input` (`[len, channels]`)
    /// followed by max-pooling over positions. `weight` is
    /// `[window * channels, filters]`; the result is `[1, filters]`.
    pub fn conv1d_maxpool(
        &mut self,
        input: Var,
        weight: Var,
        bias: Var,
        window: usize,
    ) -> Result<Var, TensorError> {
        let (tx, tw, tb) = (self.value(input), self.value(weight), self.value(bias));
        let (len, channels) = as_matrix("conv1d_maxpool", tx)?;
        let (wk, filters) = as_matrix("conv1d_maxpool", tw)?;
        if window == 0 || wk != window * channels {
            return Err(shape_err("conv1d_maxpool", tx.shape(), tw.shape()));
        }
        if tb.shape() != [filters] {
            return Err(shape_err("conv1d_maxpool", tw.shape(), tb.shape()));
        }
        if len == 0 {
            return Err(invalid("conv1d_maxpool", "empty input sequence"));
        }
        let left = (window - 1) / 2;
        let mut best = vec![f64::NEG_INFINITY; filters];
        let mut argmax = vec![0; filters];
        for pos in 0..len {
            let mut acc = tb.data().to_vec();
            for o in 0..window {
                let src = pos as i64 + o as i64 - left as i64;
                if src < 0 || src >= len as i64 {
                    continue;
                }
                let xrow = tx.row(src as usize);
                for (c, xv) in xrow.iter().enumerate() {
                    let wrow = tw.row(o * channels + c);
                    for (a, wv) in acc.iter_mut().zip(wrow) {
                        *a += xv * wv;
                    }
                }
            }
            for f in 0..filters {
                if acc[f] > best[f] {
                    best[f] = acc[f];
                    argmax[f] = pos;
                }
            }
        }
        Ok(self.push(
            Tensor::new(vec![1, filters], best)?,
            Op::ConvMaxPool {
                input,
                weight,
                bias,
                window,
                argmax,
            },
            &[input, weight, bias],
        ))
    }

    /// Rotary position rotation of every row; row `i` is treated as position
    /// `i + offset`. The row width must be even.
    pub fn rope(&mut self, a: Var, offset: i64) -> Result<Var, TensorError> {
        let t = self.value(a);
        let (rows, dim) = as_matrix("rope", t)?;
        if dim % 2 != 0 {
            return Err(invalid("rope", format!("odd feature width {dim}")));
        }
        let data = rope_raw(t.data(), rows, dim, offset, 1.0);
        Ok(self.push(
            Tensor::new(vec![rows, dim], data)?,
            Op::Rope(a, offset),
            &[a],
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    /// Reverse pass from a single-element `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        if self.backward_done {
            return Err(TensorError::BackwardTwice);
        }
        let shape = self.value(loss).shape();
        if self.value(loss).len() != 1 {
            return Err(TensorError::NonScalarLoss(shape.to_vec()));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = self.grads[idx].take() else {
                continue;
            };
            if self.nodes[idx].requires_grad {
                propagate(&self.nodes, &mut self.grads, idx, &g);
            }
            self.grads[idx] = Some(g);
        }
        self.backward_done = true;
        Ok(())
    }
}

fn slot<'a>(nodes: &[Node], grads: &'a mut [Option<Vec<f64>>], v: Var) -> Option<&'a mut Vec<f64>> {
    let node = &nodes[v.0];
    if !node.requires_grad {
        return None;
    }
    Some(grads[v.0].get_or_insert_with(|| vec![0.0; node.value.len()]))
}

fn propagate(nodes: &[Node], grads: &mut [Option<Vec<f64>>], idx: usize, g: &[f64]) {
    let node = &nodes[idx];
    let out = &node.value;
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) | Op::Affine(a, b, _) => {
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            let (m, k) = (ta.shape()[0], ta.shape()[1]);
            let n = tb.shape()[1];
            if let Some(ga) = slot(nodes, grads, *a) {
                for i in 0..m {
                    for p in 0..k {
                        let brow = &tb.data()[p * n..(p + 1) * n];
                        let grow = &g[i * n..(i + 1) * n];
                        ga[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            if let Some(gb) = slot(nodes, grads, *b) {
                for i in 0..m {
                    for p in 0..k {
                        let av = ta.data()[i * k + p];
                        if av == 0.0 {
                            continue;
                        }
                        let grow = &g[i * n..(i + 1) * n];
                        for (o, gv) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                            *o += av * gv;
                        }
                    }
                }
            }
            if let Op::Affine(_, _, bias) = &node.op {
                if let Some(gbias) = slot(nodes, grads, *bias) {
                    for row in g.chunks(n) {
                        for (o, gv) in gbias.iter_mut().zip(row) {
                            *o += gv;
                        }
                    }
                }
            }
        }
        Op::Transpose(a) => {
            let (m, n) = (out.shape()[1], out.shape()[0]);
            if let Some(ga) = slot(nodes, grads, *a) {
                for i in 0..m {
                    for j in 0..n {
                        ga[i * n + j] += g[j * m + i];
                    }
                }
            }
        }
        Op::Add(a, b) => {
            for v in [a, b] {
                if let Some(gv) = slot(nodes, grads, *v) {
                    gv.iter_mut().zip(g).for_each(|(o, x)| *o += x);
                }
            }
        }
        Op::Sub(a, b) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                ga.iter_mut().zip(g).for_each(|(o, x)| *o += x);
            }
            if let Some(gb) = slot(nodes, grads, *b) {
                gb.iter_mut().zip(g).for_each(|(o, x)| *o -= x);
            }
        }
        Op::Mul(a, b) => {
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            if let Some(ga) = slot(nodes, grads, *a) {
                for ((o, x), y) in ga.iter_mut().zip(g).zip(tb.data()) {
                    *o += x * y;
                }
            }
            if let Some(gb) = slot(nodes, grads, *b) {
                for ((o, x), y) in gb.iter_mut().zip(g).zip(ta.data()) {
                    *o += x * y;
                }
            }
        }
        Op::Scale(a, factor) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                ga.iter_mut().zip(g).for_each(|(o, x)| *o += x * factor);
            }
        }
        Op::ConcatCols(parts) => {
            let rows = out.shape()[0];
            let total = out.shape()[1];
            let mut offset = 0;
            for p in parts {
                let width = nodes[p.0].value.shape()[1];
                if let Some(gp) = slot(nodes, grads, *p) {
                    for r in 0..rows {
                        let src = &g[r * total + offset..r * total + offset + width];
                        for (o, x) in gp[r * width..(r + 1) * width].iter_mut().zip(src) {
                            *o += x;
                        }
                    }
                }
                offset += width;
            }
        }
        Op::ConcatRows(parts) => {
            let mut offset = 0;
            for p in parts {
                let len = nodes[p.0].value.len();
                if let Some(gp) = slot(nodes, grads, *p) {
                    for (o, x) in gp.iter_mut().zip(&g[offset..offset + len]) {
                        *o += x;
                    }
                }
                offset += len;
            }
        }
        Op::Reshape(a) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                ga.iter_mut().zip(g).for_each(|(o, x)| *o += x);
            }
        }
        Op::Relu(a) => {
            let input = nodes[a.0].value.data();
            if let Some(ga) = slot(nodes, grads, *a) {
                for ((o, x), v) in ga.iter_mut().zip(g).zip(input) {
                    if *v > 0.0 {
                        *o += x;
                    }
                }
            }
        }
        Op::Sigmoid(a) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                for ((o, x), y) in ga.iter_mut().zip(g).zip(out.data()) {
                    *o += x * y * (1.0 - y);
                }
            }
        }
        Op::Tanh(a) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                for ((o, x), y) in ga.iter_mut().zip(g).zip(out.data()) {
                    *o += x * (1.0 - y * y);
                }
            }
        }
        Op::Softmax(a, axis) => {
            let y = out.data();
            let (lanes, lane_len, stride, step) = match out.shape() {
                [n] => (1, *n, *n, 1),
                [r, c] if *axis == 1 => (*r, *c, *c, 1),
                [r, c] => (*c, *r, 1, *c),
                _ => unreachable!("softmax recorded on unsupported rank"),
            };
            if let Some(ga) = slot(nodes, grads, *a) {
                for lane in 0..lanes {
                    let idx = |p: usize| lane * stride + p * step;
                    let dot: f64 = (0..lane_len).map(|p| g[idx(p)] * y[idx(p)]).sum();
                    for p in 0..lane_len {
                        ga[idx(p)] += y[idx(p)] * (g[idx(p)] - dot);
                    }
                }
            }
        }
        Op::LogSumExpSets(x, sets) => {
            let input = nodes[x.0].value.data();
            if let Some(gx) = slot(nodes, grads, *x) {
                for (k, set) in sets.iter().enumerate() {
                    let lse = out.data()[k];
                    for (i, c) in set {
                        gx[*i] += g[k] * c * (c * input[*i] - lse).exp();
                    }
                }
            }
        }
        Op::GatherRows(table, ids) => {
            let cols = out.shape()[1];
            if let Some(gt) = slot(nodes, grads, *table) {
                for (r, id) in ids.iter().enumerate() {
                    for (o, x) in gt[id * cols..(id + 1) * cols]
                        .iter_mut()
                        .zip(&g[r * cols..(r + 1) * cols])
                    {
                        *o += x;
                    }
                }
            }
        }
        Op::SliceCols(a, start) => {
            let (rows, len) = (out.shape()[0], out.shape()[1]);
            let width = nodes[a.0].value.shape()[1];
            if let Some(ga) = slot(nodes, grads, *a) {
                for r in 0..rows {
                    for c in 0..len {
                        ga[r * width + start + c] += g[r * len + c];
                    }
                }
            }
        }
        Op::Dropout(a, mask) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                for ((o, x), m) in ga.iter_mut().zip(g).zip(mask) {
                    *o += x * m;
                }
            }
        }
        Op::ConvMaxPool {
            input,
            weight,
            bias,
            window,
            argmax,
        } => {
            let tx = &nodes[input.0].value;
            let tw = &nodes[weight.0].value;
            let (len, channels) = (tx.shape()[0], tx.shape()[1]);
            let filters = tw.shape()[1];
            let left = (window - 1) / 2;
            if let Some(gb) = slot(nodes, grads, *bias) {
                gb.iter_mut().zip(g).for_each(|(o, x)| *o += x);
            }
            let taps = |f: usize| {
                let pos = argmax[f];
                (0..*window).filter_map(move |o| {
                    let src = pos as i64 + o as i64 - left as i64;
                    (src >= 0 && src < len as i64).then_some((o, src as usize))
                })
            };
            if let Some(gw) = slot(nodes, grads, *weight) {
                for f in 0..filters {
                    for (o, src) in taps(f) {
                        for c in 0..channels {
                            gw[(o * channels + c) * filters + f] += g[f] * tx.get(src, c);
                        }
                    }
                }
            }
            if let Some(gx) = slot(nodes, grads, *input) {
                for f in 0..filters {
                    for (o, src) in taps(f) {
                        for c in 0..channels {
                            gx[src * channels + c] += g[f] * tw.get(o * channels + c, f);
                        }
                    }
                }
            }
        }
        Op::Rope(a, offset) => {
            let (rows, dim) = (out.shape()[0], out.shape()[1]);
            if let Some(ga) = slot(nodes, grads, *a) {
                let back = rope_raw(g, rows, dim, *offset, -1.0);
                ga.iter_mut().zip(&back).for_each(|(o, x)| *o += x);
            }
        }
        Op::Sum(a) => {
            if let Some(ga) = slot(nodes, grads, *a) {
                ga.iter_mut().for_each(|o| *o += g[0]);
            }
        }
    }
}
