use super::{EmbeddingMatrix, Vocabulary};
use crate::nn::Tensor;
use crate::{Error, Result};

/// 1.0 where the lowercased document token equals any lowercased question
/// token.
pub fn exact_match<S: AsRef<str>, Q: AsRef<str>>(doc: &[S], question: &[Q]) -> Vec<f64> {
    let q: std::collections::HashSet<String> = question.iter().map(|t| t.as_ref().to_lowercase()).collect();
    doc.iter()
        .map(|t| if q.contains(&t.as_ref().to_lowercase()) { 1.0 } else { 0.0 })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Per document token, the largest cosine similarity between its vector and
/// any question token's vector. Identical rows score exactly 1.
pub fn maxsim(doc: &[usize], question: &[usize], emb: &EmbeddingMatrix) -> Result<Vec<f64>> {
    if question.is_empty() {
        return Err(Error::Contract("maxsim needs a non-empty question".into()));
    }
    Ok(doc
        .iter()
        .map(|&d| {
            question
                .iter()
                .map(|&q| if q == d { 1.0 } else { cosine(emb.vector(d), emb.vector(q)) })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Token indices plus the two per-token feature columns `(maxsim, em)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenFeatures {
    pub doc_ids: Vec<usize>,
    pub question_ids: Vec<usize>,
    /// `T x 2`
    pub doc_features: Tensor,
    /// `m x 2`, all ones.
    pub question_features: Tensor,
}

pub fn token_features<S: AsRef<str>, Q: AsRef<str>>(
    doc: &[S],
    question: &[Q],
    vocab: &Vocabulary,
    emb: &EmbeddingMatrix,
) -> Result<TokenFeatures> {
    let doc_ids = vocab.lookup_all(doc);
    let question_ids = vocab.lookup_all(question);
    let sims = maxsim(&doc_ids, &question_ids, emb)?;
    let em = exact_match(doc, question);
    let data = sims.iter().zip(&em).flat_map(|(s, e)| [*s, *e]).collect();
    Ok(TokenFeatures {
        doc_features: Tensor::matrix(doc_ids.len(), 2, data)?,
        question_features: Tensor::filled(&[question_ids.len(), 2], 1.0),
        doc_ids,
        question_ids,
    })
}

/// Input rows `concat(word vector, maxsim, em)` for document and question.
pub fn build_input<S: AsRef<str>, Q: AsRef<str>>(
    doc: &[S],
    question: &[Q],
    vocab: &Vocabulary,
    emb: &EmbeddingMatrix,
) -> Result<(Tensor, Tensor)> {
    let f = token_features(doc, question, vocab, emb)?;
    let rows = |ids: &[usize], feats: &Tensor| -> Result<Tensor> {
        let r: Vec<Vec<f64>> = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| emb.vector(id).iter().chain(feats.row(i)).copied().collect())
            .collect();
        Tensor::matrix(ids.len(), emb.dim() + 2, r.concat())
    };
    Ok((rows(&f.doc_ids, &f.doc_features)?, rows(&f.question_ids, &f.question_features)?))
}
