//! Plain forward versions of the core ops, for callers that do not need a
//! tape.

use super::graph::{softmax_in_place, PROB_FLOOR};
use super::lstm::{self, LstmWeights};
use super::{Graph, ParamStore, Tensor};
use crate::{Error, Result};

/// `out[t] = x[t] W + b`.
pub fn affine(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let (x, w, b) = (g.constant(x.clone()), g.constant(w.clone()), g.constant(b.clone()));
    let out = g.affine(x, w, b)?;
    Ok(g.value(out).clone())
}

/// Max-shifted softmax of a vector.
pub fn softmax(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::dim("softmax of an empty vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("softmax input not finite".into()));
    }
    let mut out = x.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// `-ln(max(probs[gold], 1e-12))`.
pub fn cross_entropy(probs: &[f64], gold: usize) -> Result<f64> {
    let p = probs
        .get(gold)
        .ok_or_else(|| Error::Index(format!("gold class {gold} out of {}", probs.len())))?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Bi-directional LSTM with zero initial states; output `T x 2H`.
pub fn bilstm_encode(x: &Tensor, store: &ParamStore, fwd: &LstmWeights, bwd: &LstmWeights) -> Result<Tensor> {
    if x.rows() == 0 {
        return Err(Error::EmptySequence("bilstm over zero steps".into()));
    }
    let run = |w: &LstmWeights, reverse| {
        lstm::forward(x, store.value(w.w_ih), store.value(w.w_hh), store.value(w.bias), reverse).map(|(h, _)| h)
    };
    let f = run(fwd, false)?;
    let b = run(bwd, true)?;
    let rows: Vec<Vec<f64>> = (0..x.rows())
        .map(|t| f.row(t).iter().chain(b.row(t)).copied().collect())
        .collect();
    Tensor::from_rows(&rows)
}
