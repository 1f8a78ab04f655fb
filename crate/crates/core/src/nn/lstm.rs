//! LSTM cell kernels.
//!
//! Gate order is `[input, forget, cell, output]` everywhere: rows
//! `0..H` of the stacked matrices belong to the input gate, `H..2H` to the
//! forget gate, `2H..3H` to the cell candidate and `3H..4H` to the output
//! gate. Checkpoints rely on this layout.

use rand::Rng;

use super::params::glorot_uniform;
use super::{ParamId, ParamStore, Tensor};
use crate::{Error, Result};

pub const FORGET_BIAS: f64 = 1.0;

/// Parameter handles for one LSTM direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmWeights {
    /// `4H x D`
    pub w_ih: ParamId,
    /// `4H x H`
    pub w_hh: ParamId,
    /// `4H`
    pub bias: ParamId,
}

impl LstmWeights {
    /// Registers `{prefix}.W_ih`, `{prefix}.W_hh` and `{prefix}.b`.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        trainable: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let w_ih = glorot_uniform(rng, 4 * hidden, input);
        let w_hh = glorot_uniform(rng, 4 * hidden, hidden);
        let mut b = vec![0.0; 4 * hidden];
        b[hidden..2 * hidden].fill(FORGET_BIAS);
        Ok(LstmWeights {
            w_ih: store.insert(format!("{prefix}.W_ih"), w_ih, trainable)?,
            w_hh: store.insert(format!("{prefix}.W_hh"), w_hh, trainable)?,
            bias: store.insert(format!("{prefix}.b"), Tensor::new(vec![4 * hidden], b)?, trainable)?,
        })
    }

    /// Looks up an existing `{prefix}.*` triple.
    pub fn find(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |suffix: &str| {
            store
                .id(&format!("{prefix}.{suffix}"))
                .ok_or_else(|| Error::Config(format!("missing parameter {prefix}.{suffix}")))
        };
        Ok(LstmWeights {
            w_ih: get("W_ih")?,
            w_hh: get("W_hh")?,
            bias: get("b")?,
        })
    }

    pub fn hidden(&self, store: &ParamStore) -> usize {
        store.value(self.w_hh).cols()
    }

    pub fn input(&self, store: &ParamStore) -> usize {
        store.value(self.w_ih).cols()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-step activations kept for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct LstmCache {
    /// Processing order of the time steps (reversed for the backward direction).
    order: Vec<usize>,
    /// Activated gates per processed step, `4H` each.
    gates: Vec<Vec<f64>>,
    /// Cell state per processed step.
    cells: Vec<Vec<f64>>,
    /// Hidden state per processed step.
    hiddens: Vec<Vec<f64>>,
}

pub(crate) fn validate(x: &Tensor, w_ih: &Tensor, w_hh: &Tensor, b: &Tensor) -> Result<usize> {
    let h = w_hh.cols();
    if w_hh.rows() != 4 * h || w_ih.rows() != 4 * h || b.len() != 4 * h {
        return Err(Error::dim("inconsistent LSTM weight shapes"));
    }
    if x.cols() != w_ih.cols() {
        return Err(Error::dim(format!(
            "LSTM input width {} but W_ih expects {}",
            x.cols(),
            w_ih.cols()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::EmptySequence("LSTM over zero steps".into()));
    }
    Ok(h)
}

/// Runs one direction over all rows of `x`; returns the `T x H` hidden
/// states in original time order.
pub(crate) fn forward(
    x: &Tensor,
    w_ih: &Tensor,
    w_hh: &Tensor,
    b: &Tensor,
    reverse: bool,
) -> Result<(Tensor, LstmCache)> {
    let h = validate(x, w_ih, w_hh, b)?;
    let t_len = x.rows();
    let d = x.cols();
    let order: Vec<usize> = if reverse {
        (0..t_len).rev().collect()
    } else {
        (0..t_len).collect()
    };
    let mut out = Tensor::zeros(&[t_len, h]);
    let mut cache = LstmCache {
        order: order.clone(),
        gates: Vec::with_capacity(t_len),
        cells: Vec::with_capacity(t_len),
        hiddens: Vec::with_capacity(t_len),
    };
    let wi = w_ih.data();
    let wh = w_hh.data();
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    let mut z = vec![0.0; 4 * h];
    for &t in &order {
        let xt = x.row(t);
        for k in 0..4 * h {
            let wi_row = &wi[k * d..(k + 1) * d];
            let wh_row = &wh[k * h..(k + 1) * h];
            let mut acc = b.data()[k];
            acc += wi_row.iter().zip(xt).map(|(a, c)| a * c).sum::<f64>();
            acc += wh_row.iter().zip(&h_prev).map(|(a, c)| a * c).sum::<f64>();
            z[k] = acc;
        }
        let mut gates = vec![0.0; 4 * h];
        let mut c = vec![0.0; h];
        let mut hs = vec![0.0; h];
        for j in 0..h {
            let i_g = sigmoid(z[j]);
            let f_g = sigmoid(z[h + j]);
            let g_g = z[2 * h + j].tanh();
            let o_g = sigmoid(z[3 * h + j]);
            gates[j] = i_g;
            gates[h + j] = f_g;
            gates[2 * h + j] = g_g;
            gates[3 * h + j] = o_g;
            c[j] = f_g * c_prev[j] + i_g * g_g;
            hs[j] = o_g * c[j].tanh();
        }
        out.row_mut(t).copy_from_slice(&hs);
        h_prev.clone_from(&hs);
        c_prev.clone_from(&c);
        cache.gates.push(gates);
        cache.cells.push(c);
        cache.hiddens.push(hs);
    }
    Ok((out, cache))
}

pub(crate) struct LstmGrads {
    pub dx: Vec<f64>,
    pub dw_ih: Vec<f64>,
    pub dw_hh: Vec<f64>,
    pub db: Vec<f64>,
}

/// Backpropagation through time for one direction.
pub(crate) fn backward(
    x: &Tensor,
    w_ih: &Tensor,
    w_hh: &Tensor,
    cache: &LstmCache,
    dout: &[f64],
    need_dx: bool,
    need_w: bool,
) -> LstmGrads {
    let h = w_hh.cols();
    let d = x.cols();
    let wi = w_ih.data();
    let wh = w_hh.data();
    let mut g = LstmGrads {
        dx: if need_dx { vec![0.0; x.len()] } else { Vec::new() },
        dw_ih: if need_w { vec![0.0; w_ih.len()] } else { Vec::new() },
        dw_hh: if need_w { vec![0.0; w_hh.len()] } else { Vec::new() },
        db: if need_w { vec![0.0; 4 * h] } else { Vec::new() },
    };
    let zeros = vec![0.0; h];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for step in (0..cache.order.len()).rev() {
        let t = cache.order[step];
        let gates = &cache.gates[step];
        let c = &cache.cells[step];
        let (c_prev, h_prev) = if step == 0 {
            (&zeros, &zeros)
        } else {
            (&cache.cells[step - 1], &cache.hiddens[step - 1])
        };
        for j in 0..h {
            let dh = dout[t * h + j] + dh_next[j];
            let (i_g, f_g, g_g, o_g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = c[j].tanh();
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o_g * (1.0 - tc * tc);
            let d_i = dc * g_g;
            let d_g = dc * i_g;
            let d_f = dc * c_prev[j];
            dc_next[j] = dc * f_g;
            dz[j] = d_i * i_g * (1.0 - i_g);
            dz[h + j] = d_f * f_g * (1.0 - f_g);
            dz[2 * h + j] = d_g * (1.0 - g_g * g_g);
            dz[3 * h + j] = d_o * o_g * (1.0 - o_g);
        }
        dh_next.fill(0.0);
        let xt = x.row(t);
        for k in 0..4 * h {
            let dzk = dz[k];
            if dzk == 0.0 {
                continue;
            }
            let wh_row = &wh[k * h..(k + 1) * h];
            dh_next.iter_mut().zip(wh_row).for_each(|(a, w)| *a += dzk * w);
            if need_dx {
                let wi_row = &wi[k * d..(k + 1) * d];
                let dxt = &mut g.dx[t * d..(t + 1) * d];
                dxt.iter_mut().zip(wi_row).for_each(|(a, w)| *a += dzk * w);
            }
            if need_w {
                g.db[k] += dzk;
                let dwi = &mut g.dw_ih[k * d..(k + 1) * d];
                dwi.iter_mut().zip(xt).for_each(|(a, v)| *a += dzk * v);
                let dwh = &mut g.dw_hh[k * h..(k + 1) * h];
                dwh.iter_mut().zip(h_prev).for_each(|(a, v)| *a += dzk * v);
            }
        }
    }
    g
}
