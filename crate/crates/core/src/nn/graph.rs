//! Reverse-mode tape over [`Tensor`] values.
//!
//! A [`Graph`] records every op applied during one forward pass. Parameter
//! values are copied onto the tape, so the graph never borrows the store and
//! a single [`Graph::backward`] call yields [`Gradients`] keyed by
//! [`ParamId`]. Nodes that do not depend on a trainable parameter are
//! skipped during the backward sweep.

use super::lstm::{self, LstmCache, LstmWeights};
use super::{Gradients, ParamId, ParamStore, Tensor};
use crate::{Error, Result};

/// Floor used inside the log of every likelihood loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Gather {
        param: ParamId,
        rows: Vec<usize>,
        param_len: usize,
    },
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    Abs(Var),
    Tanh(Var),
    ConcatCols(Vec<Var>),
    BroadcastRows(Var),
    Reshape(Var),
    SoftmaxRows(Var),
    SumRows(Var),
    MaxRows(Var, Vec<usize>),
    Nll(Var, Vec<usize>),
    Lstm {
        x: Var,
        w_ih: Var,
        w_hh: Var,
        bias: Var,
        cache: LstmCache,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn check_finite(t: &Tensor, op: &str) -> Result<()> {
    t.ensure_finite(op)
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let rg = store.is_trainable(id);
        self.push(store.value(id).clone(), Op::Param(id), rg)
    }

    /// Selects rows of a matrix parameter (embedding lookup).
    pub fn gather(&mut self, store: &ParamStore, id: ParamId, rows: &[usize]) -> Result<Var> {
        let table = store.value(id);
        let cols = table.cols();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            if r >= table.rows() {
                return Err(Error::Index(format!("row {r} out of {} in {}", table.rows(), store.name(id))));
            }
            data.extend_from_slice(table.row(r));
        }
        let value = Tensor::matrix(rows.len(), cols, data)?;
        let op = Op::Gather {
            param: id,
            rows: rows.to_vec(),
            param_len: table.len(),
        };
        Ok(self.push(value, op, store.is_trainable(id)))
    }

    /// `a (n x k) * b (k x m)`
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (n, k, m) = (av.rows(), av.cols(), bv.cols());
        if bv.rows() != k {
            return Err(Error::dim(format!("matmul {n}x{k} by {}x{m}", bv.rows())));
        }
        let mut out = vec![0.0; n * m];
        let (ad, bd) = (av.data(), bv.data());
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a_ip = ad[i * k + p];
                if a_ip == 0.0 {
                    continue;
                }
                let brow = &bd[p * m..(p + 1) * m];
                orow.iter_mut().zip(brow).for_each(|(o, b)| *o += a_ip * b);
            }
        }
        let value = Tensor::matrix(n, m, out)?;
        check_finite(&value, "matmul")?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// Adds a `1 x m` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (xv, rv) = (self.value(x), self.value(row));
        if rv.len() != xv.cols() {
            return Err(Error::dim(format!("bias width {} vs {}", rv.len(), xv.cols())));
        }
        let mut value = Tensor::matrix(xv.rows(), xv.cols(), xv.data().to_vec())?;
        for r in 0..xv.rows() {
            value.row_mut(r).iter_mut().zip(rv.data()).for_each(|(a, b)| *a += b);
        }
        check_finite(&value, "add_row")?;
        let rg = self.rg(&[x, row]);
        Ok(self.push(value, Op::AddRow(x, row), rg))
    }

    /// `x W + b`, row-wise.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    fn same_shape(&self, a: Var, b: Var, op: &str) -> Result<()> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() || av.cols() != bv.cols() {
            return Err(Error::dim(format!(
                "{op}: {}x{} vs {}x{}",
                av.rows(),
                av.cols(),
                bv.rows(),
                bv.cols()
            )));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| f(*x, *y)).collect();
        let value = Tensor::matrix(av.rows(), av.cols(), data)?;
        check_finite(&value, "elementwise")?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, op, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// Multiplies every row of `x` element-wise by the `1 x m` row `r`.
    pub fn mul_row(&mut self, x: Var, r: Var) -> Result<Var> {
        let (xv, rv) = (self.value(x), self.value(r));
        if rv.len() != xv.cols() {
            return Err(Error::dim(format!("mul_row width {} vs {}", rv.len(), xv.cols())));
        }
        let mut value = Tensor::matrix(xv.rows(), xv.cols(), xv.data().to_vec())?;
        for i in 0..xv.rows() {
            value.row_mut(i).iter_mut().zip(rv.data()).for_each(|(a, b)| *a *= b);
        }
        check_finite(&value, "mul_row")?;
        let rg = self.rg(&[x, r]);
        Ok(self.push(value, Op::MulRow(x, r), rg))
    }

    /// Scales row `i` of `x` by the scalar `s[i]` (`s` is `n x 1`).
    pub fn mul_col(&mut self, x: Var, s: Var) -> Result<Var> {
        let (xv, sv) = (self.value(x), self.value(s));
        if sv.len() != xv.rows() {
            return Err(Error::dim(format!("mul_col length {} vs {} rows", sv.len(), xv.rows())));
        }
        let mut value = Tensor::matrix(xv.rows(), xv.cols(), xv.data().to_vec())?;
        for i in 0..xv.rows() {
            let k = sv.data()[i];
            value.row_mut(i).iter_mut().for_each(|a| *a *= k);
        }
        check_finite(&value, "mul_col")?;
        let rg = self.rg(&[x, s]);
        Ok(self.push(value, Op::MulCol(x, s), rg))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Result<Var> {
        let xv = self.value(x);
        let data = xv.data().iter().map(|v| v * k).collect();
        let value = Tensor::matrix(xv.rows(), xv.cols(), data)?;
        check_finite(&value, "scale")?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Scale(x, k), rg))
    }

    pub fn abs(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let value = Tensor::matrix(xv.rows(), xv.cols(), xv.data().iter().map(|v| v.abs()).collect())?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Abs(x), rg))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let value = Tensor::matrix(xv.rows(), xv.cols(), xv.data().iter().map(|v| v.tanh()).collect())?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Tanh(x), rg))
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::dim("concat of nothing"))?;
        let n = self.value(*first).rows();
        if parts.iter().any(|p| self.value(*p).rows() != n) {
            return Err(Error::dim("concat_cols row count mismatch"));
        }
        let width: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(n * width);
        for r in 0..n {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let value = Tensor::matrix(n, width, data)?;
        let rg = self.rg(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Repeats a single row `n` times.
    pub fn broadcast_rows(&mut self, row: Var, n: usize) -> Result<Var> {
        let rv = self.value(row);
        if rv.rows() != 1 {
            return Err(Error::dim("broadcast_rows expects a single row"));
        }
        let data = (0..n).flat_map(|_| rv.data().iter().copied()).collect();
        let value = Tensor::matrix(n, rv.cols(), data)?;
        let rg = self.rg(&[row]);
        Ok(self.push(value, Op::BroadcastRows(row), rg))
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let value = Tensor::matrix(rows, cols, self.value(x).data().to_vec())?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Reshape(x), rg))
    }

    /// Softmax of every row, max-shifted.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.cols() == 0 {
            return Err(Error::dim("softmax over an empty row"));
        }
        let mut value = Tensor::matrix(xv.rows(), xv.cols(), xv.data().to_vec())?;
        for r in 0..xv.rows() {
            softmax_in_place(value.row_mut(r));
        }
        check_finite(&value, "softmax")?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::SoftmaxRows(x), rg))
    }

    /// Sums the rows into a single `1 x m` row.
    pub fn sum_rows(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let mut out = vec![0.0; xv.cols()];
        for r in 0..xv.rows() {
            out.iter_mut().zip(xv.row(r)).for_each(|(a, b)| *a += b);
        }
        let rg = self.rg(&[x]);
        Ok(self.push(Tensor::row_vector(out), Op::SumRows(x), rg))
    }

    /// Element-wise max over rows; ties route gradient to the first row.
    pub fn max_rows(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.rows() == 0 {
            return Err(Error::EmptySequence("max over zero rows".into()));
        }
        let mut out = xv.row(0).to_vec();
        let mut arg = vec![0usize; xv.cols()];
        for r in 1..xv.rows() {
            for (c, v) in xv.row(r).iter().enumerate() {
                if *v > out[c] {
                    out[c] = *v;
                    arg[c] = r;
                }
            }
        }
        let rg = self.rg(&[x]);
        Ok(self.push(Tensor::row_vector(out), Op::MaxRows(x, arg), rg))
    }

    /// Sum over rows of `-ln(max(p[r][gold[r]], PROB_FLOOR))`.
    pub fn nll(&mut self, probs: Var, gold: &[usize]) -> Result<Var> {
        let pv = self.value(probs);
        if gold.len() != pv.rows() {
            return Err(Error::dim(format!("{} gold labels for {} rows", gold.len(), pv.rows())));
        }
        let mut loss = 0.0;
        for (r, &g) in gold.iter().enumerate() {
            if g >= pv.cols() {
                return Err(Error::Index(format!("gold class {g} out of {}", pv.cols())));
            }
            loss -= pv.at(r, g).max(PROB_FLOOR).ln();
        }
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite loss".into()));
        }
        let rg = self.rg(&[probs]);
        Ok(self.push(Tensor::scalar(loss), Op::Nll(probs, gold.to_vec()), rg))
    }

    /// One LSTM direction over the rows of `x`; output `T x H`.
    pub fn lstm(&mut self, store: &ParamStore, x: Var, weights: &LstmWeights, reverse: bool) -> Result<Var> {
        let w_ih = self.param(store, weights.w_ih);
        let w_hh = self.param(store, weights.w_hh);
        let bias = self.param(store, weights.bias);
        let (value, cache) = lstm::forward(
            self.value(x),
            self.value(w_ih),
            self.value(w_hh),
            self.value(bias),
            reverse,
        )?;
        check_finite(&value, "lstm")?;
        let rg = self.rg(&[x, w_ih, w_hh, bias]);
        Ok(self.push(
            value,
            Op::Lstm {
                x,
                w_ih,
                w_hh,
                bias,
                cache,
            },
            rg,
        ))
    }

    /// Forward and backward LSTM over `x`, concatenated per step: `T x 2H`.
    pub fn bilstm(&mut self, store: &ParamStore, x: Var, fwd: &LstmWeights, bwd: &LstmWeights) -> Result<Var> {
        let f = self.lstm(store, x, fwd, false)?;
        let b = self.lstm(store, x, bwd, true)?;
        self.concat_cols(&[f, b])
    }

    /// Gradients of the scalar `loss` with respect to every trainable
    /// parameter reached from it.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::dim("backward from a non-scalar"));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::default();

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let val = &node.value;
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => out.add(*id, &g),
                Op::Gather { param, rows, param_len } => {
                    let cols = val.cols();
                    let mut full = vec![0.0; *param_len];
                    for (i, &r) in rows.iter().enumerate() {
                        let dst = &mut full[r * cols..(r + 1) * cols];
                        dst.iter_mut().zip(&g[i * cols..(i + 1) * cols]).for_each(|(a, b)| *a += b);
                    }
                    out.add(*param, &full);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (n, k, m) = (av.rows(), av.cols(), bv.cols());
                    if self.nodes[a.0].requires_grad {
                        // dA = dC B^T
                        let mut da = vec![0.0; n * k];
                        let bd = bv.data();
                        for i in 0..n {
                            let grow = &g[i * m..(i + 1) * m];
                            for p in 0..k {
                                let brow = &bd[p * m..(p + 1) * m];
                                da[i * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                            }
                        }
                        accumulate(&mut grads, *a, &da);
                    }
                    if self.nodes[b.0].requires_grad {
                        // dB = A^T dC
                        let mut db = vec![0.0; k * m];
                        let ad = av.data();
                        for i in 0..n {
                            let grow = &g[i * m..(i + 1) * m];
                            for p in 0..k {
                                let a_ip = ad[i * k + p];
                                if a_ip == 0.0 {
                                    continue;
                                }
                                let drow = &mut db[p * m..(p + 1) * m];
                                drow.iter_mut().zip(grow).for_each(|(d, x)| *d += a_ip * x);
                            }
                        }
                        accumulate(&mut grads, *b, &db);
                    }
                }
                Op::AddRow(x, row) => {
                    accumulate(&mut grads, *x, &g);
                    if self.nodes[row.0].requires_grad {
                        let m = val.cols();
                        let mut dr = vec![0.0; m];
                        for chunk in g.chunks(m) {
                            dr.iter_mut().zip(chunk).for_each(|(a, b)| *a += b);
                        }
                        accumulate(&mut grads, *row, &dr);
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    if self.nodes[b.0].requires_grad {
                        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                        accumulate(&mut grads, *b, &neg);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    if self.nodes[a.0].requires_grad {
                        let da: Vec<f64> = g.iter().zip(bv).map(|(x, y)| x * y).collect();
                        accumulate(&mut grads, *a, &da);
                    }
                    if self.nodes[b.0].requires_grad {
                        let db: Vec<f64> = g.iter().zip(av).map(|(x, y)| x * y).collect();
                        accumulate(&mut grads, *b, &db);
                    }
                }
                Op::MulRow(x, r) => {
                    let (xv, rv) = (self.value(*x), self.value(*r));
                    let m = xv.cols();
                    if self.nodes[x.0].requires_grad {
                        let mut dx = g.clone();
                        for chunk in dx.chunks_mut(m) {
                            chunk.iter_mut().zip(rv.data()).for_each(|(a, b)| *a *= b);
                        }
                        accumulate(&mut grads, *x, &dx);
                    }
                    if self.nodes[r.0].requires_grad {
                        let mut dr = vec![0.0; m];
                        for (gc, xc) in g.chunks(m).zip(xv.data().chunks(m)) {
                            for c in 0..m {
                                dr[c] += gc[c] * xc[c];
                            }
                        }
                        accumulate(&mut grads, *r, &dr);
                    }
                }
                Op::MulCol(x, s) => {
                    let (xv, sv) = (self.value(*x), self.value(*s));
                    let m = xv.cols();
                    if self.nodes[x.0].requires_grad {
                        let mut dx = g.clone();
                        for (i, chunk) in dx.chunks_mut(m).enumerate() {
                            let k = sv.data()[i];
                            chunk.iter_mut().for_each(|a| *a *= k);
                        }
                        accumulate(&mut grads, *x, &dx);
                    }
                    if self.nodes[s.0].requires_grad {
                        let ds: Vec<f64> = g
                            .chunks(m)
                            .zip(xv.data().chunks(m))
                            .map(|(gc, xc)| gc.iter().zip(xc).map(|(a, b)| a * b).sum())
                            .collect();
                        accumulate(&mut grads, *s, &ds);
                    }
                }
                Op::Scale(x, k) => {
                    let dx: Vec<f64> = g.iter().map(|v| v * k).collect();
                    accumulate(&mut grads, *x, &dx);
                }
                Op::Abs(x) => {
                    let xv = self.value(*x).data();
                    let dx: Vec<f64> = g
                        .iter()
                        .zip(xv)
                        .map(|(d, v)| if *v > 0.0 { *d } else if *v < 0.0 { -d } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *x, &dx);
                }
                Op::Tanh(x) => {
                    let dx: Vec<f64> = g.iter().zip(val.data()).map(|(d, y)| d * (1.0 - y * y)).collect();
                    accumulate(&mut grads, *x, &dx);
                }
                Op::ConcatCols(parts) => {
                    let n = val.rows();
                    let width = val.cols();
                    let mut offset = 0;
                    for p in parts {
                        let pc = self.value(*p).cols();
                        if self.nodes[p.0].requires_grad {
                            let mut dp = Vec::with_capacity(n * pc);
                            for r in 0..n {
                                dp.extend_from_slice(&g[r * width + offset..r * width + offset + pc]);
                            }
                            accumulate(&mut grads, *p, &dp);
                        }
                        offset += pc;
                    }
                }
                Op::BroadcastRows(row) => {
                    let m = val.cols();
                    let mut dr = vec![0.0; m];
                    for chunk in g.chunks(m) {
                        dr.iter_mut().zip(chunk).for_each(|(a, b)| *a += b);
                    }
                    accumulate(&mut grads, *row, &dr);
                }
                Op::Reshape(x) => accumulate(&mut grads, *x, &g),
                Op::SoftmaxRows(x) => {
                    let m = val.cols();
                    let mut dx = vec![0.0; g.len()];
                    for ((dxr, gr), yr) in dx.chunks_mut(m).zip(g.chunks(m)).zip(val.data().chunks(m)) {
                        let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                        for c in 0..m {
                            dxr[c] = yr[c] * (gr[c] - dot);
                        }
                    }
                    accumulate(&mut grads, *x, &dx);
                }
                Op::SumRows(x) => {
                    let xv = self.value(*x);
                    let dx: Vec<f64> = (0..xv.rows()).flat_map(|_| g.iter().copied()).collect();
                    accumulate(&mut grads, *x, &dx);
                }
                Op::MaxRows(x, arg) => {
                    let xv = self.value(*x);
                    let m = xv.cols();
                    let mut dx = vec![0.0; xv.len()];
                    for (c, &r) in arg.iter().enumerate() {
                        dx[r * m + c] = g[c];
                    }
                    accumulate(&mut grads, *x, &dx);
                }
                Op::Nll(probs, gold) => {
                    let pv = self.value(*probs);
                    let m = pv.cols();
                    let mut dp = vec![0.0; pv.len()];
                    for (r, &gl) in gold.iter().enumerate() {
                        let p = pv.at(r, gl);
                        if p > PROB_FLOOR {
                            dp[r * m + gl] = -g[0] / p;
                        }
                    }
                    accumulate(&mut grads, *probs, &dp);
                }
                Op::Lstm {
                    x,
                    w_ih,
                    w_hh,
                    bias,
                    cache,
                } => {
                    let need_dx = self.nodes[x.0].requires_grad;
                    let need_w = self.rg(&[*w_ih, *w_hh, *bias]);
                    let lg = lstm::backward(
                        self.value(*x),
                        self.value(*w_ih),
                        self.value(*w_hh),
                        cache,
                        &g,
                        need_dx,
                        need_w,
                    );
                    if need_dx {
                        accumulate(&mut grads, *x, &lg.dx);
                    }
                    if need_w {
                        accumulate(&mut grads, *w_ih, &lg.dw_ih);
                        accumulate(&mut grads, *w_hh, &lg.dw_hh);
                        accumulate(&mut grads, *bias, &lg.db);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
    match &mut grads[v.0] {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g.to_vec()),
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
