use std::collections::VecDeque;

use crate::nn::{affine, softmax, Tensor};
use crate::{Error, Result};

/// Start/end distributions over document tokens plus the decoded span.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanPrediction {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub span: (usize, usize),
    pub score: f64,
}

/// Per-token affine projection of a skill output into adapter space.
pub fn adapt(skill_output: &Tensor, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    affine(skill_output, a, b)
}

/// `sum_k softmax(e_q W)_k * e_q[k]`: attention-weighted question vector.
pub fn question_summary(e_q: &Tensor, w_qw: &Tensor) -> Result<Tensor> {
    if e_q.rows() == 0 {
        return Err(Error::Contract("empty question".into()));
    }
    if w_qw.rows() != e_q.cols() || w_qw.cols() != 1 {
        return Err(Error::dim(format!(
            "question weights {:?} do not fit width {}",
            w_qw.shape(),
            e_q.cols()
        )));
    }
    let scores: Vec<f64> = (0..e_q.rows())
        .map(|k| e_q.row(k).iter().zip(w_qw.data()).map(|(x, w)| x * w).sum())
        .collect();
    Ok(weighted_sum(e_q, &softmax(&scores)?))
}

/// `sum_k weights[k] * rows[k]`.
pub fn weighted_sum(rows: &Tensor, weights: &[f64]) -> Tensor {
    let mut out = vec![0.0; rows.cols()];
    for (k, a) in weights.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(rows.row(k)) {
            *o += a * x;
        }
    }
    Tensor::row_vector(out)
}

/// `concat(e, r, e * r)` for one document token.
pub fn interact(e: &[f64], r_q: &[f64]) -> Result<Vec<f64>> {
    if e.len() != r_q.len() {
        return Err(Error::dim(format!("interaction widths {} and {}", e.len(), r_q.len())));
    }
    let mut out = Vec::with_capacity(3 * e.len());
    out.extend_from_slice(e);
    out.extend_from_slice(r_q);
    out.extend(e.iter().zip(r_q).map(|(a, b)| a * b));
    Ok(out)
}

/// Best span `(i, j)` maximizing `start[i] * end[j]` with
/// `i <= j < i + max_span_len`, in one pass keeping the window maximum of
/// `start` in a monotone deque. Ties go to the smallest `i`, then `j`.
pub fn dp_decode(start: &[f64], end: &[f64], max_span_len: usize) -> Result<(usize, usize, f64)> {
    if start.is_empty() || start.len() != end.len() {
        return Err(Error::dim(format!(
            "start/end lengths {} and {}",
            start.len(),
            end.len()
        )));
    }
    if max_span_len == 0 {
        return Err(Error::Config("max_span_len must be at least 1".into()));
    }
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut best: Option<(usize, usize, f64)> = None;
    for j in 0..start.len() {
        // Strict comparison keeps the earlier index at the front on ties.
        while window.back().is_some_and(|&k| start[k] < start[j]) {
            window.pop_back();
        }
        window.push_back(j);
        let lo = (j + 1).saturating_sub(max_span_len);
        while window.front().is_some_and(|&k| k < lo) {
            window.pop_front();
        }
        // A zero end probability makes every start in the window tie.
        let i = if end[j] == 0.0 { lo } else { window[0] };
        let score = start[i] * end[j];
        let better = match best {
            None => true,
            Some((bi, bj, bs)) => score > bs || (score == bs && (i, j) < (bi, bj)),
        };
        if better {
            best = Some((i, j, score));
        }
    }
    Ok(best.expect("non-empty input"))
}
