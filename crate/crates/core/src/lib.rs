//! Skill transfer for reading comprehension.
//!
//! Bi-LSTM encoders are trained on lower-level language tasks (named entity
//! recognition, question type classification, textual entailment and
//! paraphrase classification), saved as checkpoints, and plugged into a
//! span-prediction reading comprehension model through adapter projections.
//!
//! The crate is organised bottom-up:
//!
//! * [`nn`]: float64 tensors, a small reverse-mode tape, fused LSTM cells,
//!   Adam and a finite-difference gradient checker.
//! * [`embed`]: vocabulary, word vectors and the exact-match / maxsim
//!   token features.
//! * [`data`]: tokenizer, corpus readers, fraction sampling and a synthetic
//!   corpus generator.
//! * [`skills`]: the three skill model families and encoder checkpoints.
//! * [`rc`]: the reading comprehension ensemble and span decoding.
//! * [`harness`]: evaluation metrics and experiment orchestration.

pub mod data;
pub mod embed;
mod error;
pub mod harness;
pub mod nn;
pub mod rc;
pub mod skills;

pub use error::{Error, Result};
