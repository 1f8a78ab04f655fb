//! Vocabulary, word vectors and the exact-match / maxsim input features.

mod embeddings;
mod features;
mod vocab;

pub use embeddings::{load_embeddings, read_embeddings, write_embeddings, EmbeddingMatrix, OOV_RANGE};
pub use features::{build_input, exact_match, maxsim, token_features, TokenFeatures};
pub use vocab::{Vocabulary, UNK};
