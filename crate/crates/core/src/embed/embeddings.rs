use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::Vocabulary;
use crate::nn::Tensor;
use crate::{Error, Result};

/// Bound of the uniform draw for tokens missing from the vector file.
pub const OOV_RANGE: f64 = 0.1;

/// `V x d` word vectors aligned with a [`Vocabulary`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub matrix: Tensor,
    pub trainable: bool,
}

/// Deterministic per-token vector: the RNG is keyed by `(seed, token)`, so
/// the value does not depend on vocabulary order.
fn seeded_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(token.as_bytes());
    let d = h.finalize();
    let mut rng = ChaCha8Rng::from_seed(d[..32].try_into().expect("32 bytes"));
    (0..dim).map(|_| rng.gen_range(-OOV_RANGE..OOV_RANGE)).collect()
}

impl EmbeddingMatrix {
    /// Every row a seeded random vector.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let data = vocab.tokens().iter().flat_map(|t| seeded_vector(t, dim, seed)).collect();
        EmbeddingMatrix {
            matrix: Tensor::matrix(vocab.len(), dim, data).expect("sized by construction"),
            trainable: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        self.matrix.row(index)
    }
}

/// Reads `token v1 ... vd` lines. Vocabulary tokens found in the file get
/// its vector; the rest get a seeded uniform(-0.1, 0.1) vector. Returns the
/// matrix and how many vocabulary rows came from the file.
pub fn load_embeddings(path: &Path, vocab: &Vocabulary, seed: u64) -> Result<(EmbeddingMatrix, usize)> {
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    read_embeddings(reader, vocab, seed)
}

pub fn read_embeddings<R: BufRead>(reader: R, vocab: &Vocabulary, seed: u64) -> Result<(EmbeddingMatrix, usize)> {
    let mut dim: Option<usize> = None;
    let mut found: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|_| Error::format(i + 1, format!("bad float {p:?}"))))
            .collect::<Result<_>>()?;
        match dim {
            None if values.is_empty() => return Err(Error::format(i + 1, "token without vector")),
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::format(i + 1, format!("vector width {} but earlier lines have {d}", values.len())))
            }
            _ => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(i + 1, "non-finite vector entry"));
        }
        if let Some(idx) = vocab.get(token) {
            if idx != vocab.unk() && found[idx].is_none() {
                found[idx] = Some(values);
            }
        }
    }
    let dim = dim.ok_or_else(|| Error::format(0, "empty embedding file"))?;
    let coverage = found.iter().filter(|f| f.is_some()).count();
    let mut data = Vec::with_capacity(vocab.len() * dim);
    for (i, row) in found.into_iter().enumerate() {
        match row {
            Some(v) => data.extend(v),
            None => data.extend(seeded_vector(vocab.token(i), dim, seed)),
        }
    }
    let matrix = Tensor::matrix(vocab.len(), dim, data)?;
    Ok((
        EmbeddingMatrix {
            matrix,
            trainable: false,
        },
        coverage,
    ))
}

/// Writes the matrix in the same text format.
pub fn write_embeddings<W: std::io::Write>(mut w: W, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<()> {
    for (i, tok) in vocab.tokens().iter().enumerate().skip(1) {
        let vals: Vec<String> = emb.vector(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{tok} {}", vals.join(" "))?;
    }
    Ok(())
}
