use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::models::{SkillExample, SkillModel};
use crate::data::{LabelSet, LabeledPair, LabeledSentence, LabeledSequence};
use crate::embed::{EmbeddingMatrix, Vocabulary};
use crate::nn::{Adam, Graph};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkillTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub clip_norm: Option<f64>,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
    /// Stop after this many updates in total, if set.
    pub max_steps: Option<usize>,
}

impl Default for SkillTrainConfig {
    fn default() -> Self {
        SkillTrainConfig {
            epochs: 5,
            lr: 1e-3,
            clip_norm: Some(5.0),
            seed: 0,
            max_steps: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    pub mean_loss: f64,
    /// Training accuracy measured after the epoch.
    pub accuracy: f64,
}

pub fn sequence_examples(seqs: &[LabeledSequence], vocab: &Vocabulary, labels: &LabelSet) -> Result<Vec<SkillExample>> {
    seqs.iter()
        .map(|s| {
            Ok(SkillExample::Sequence {
                ids: vocab.lookup_all(&s.tokens),
                tags: s.tags.iter().map(|t| labels.index(t)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn sentence_examples(sents: &[LabeledSentence], vocab: &Vocabulary, labels: &LabelSet) -> Result<Vec<SkillExample>> {
    sents
        .iter()
        .map(|s| {
            Ok(SkillExample::Sentence {
                ids: vocab.lookup_all(&s.tokens),
                label: labels.index(&s.label)?,
            })
        })
        .collect()
}

pub fn pair_examples(pairs: &[LabeledPair], vocab: &Vocabulary, labels: &LabelSet) -> Result<Vec<SkillExample>> {
    pairs
        .iter()
        .map(|p| {
            Ok(SkillExample::Pair {
                premise: vocab.lookup_all(&p.premise),
                hypothesis: vocab.lookup_all(&p.hypothesis),
                label: labels.index(&p.label)?,
            })
        })
        .collect()
}

/// Fraction of correct prediction units over `data`.
pub fn evaluate_skill<M: SkillModel + ?Sized>(model: &M, data: &[SkillExample], emb: &EmbeddingMatrix) -> Result<f64> {
    let (mut correct, mut total) = (0, 0);
    for ex in data {
        let (c, t) = model.score(emb, ex)?;
        correct += c;
        total += t;
    }
    if total == 0 {
        return Err(Error::Data("nothing to evaluate".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Single-example Adam updates over shuffled epochs. Identical seeds and
/// data give bit-identical weights.
pub fn train_skill<M: SkillModel + ?Sized>(
    model: &mut M,
    data: &[SkillExample],
    emb: &EmbeddingMatrix,
    cfg: &SkillTrainConfig,
) -> Result<Vec<EpochLog>> {
    if data.is_empty() {
        return Err(Error::Data(format!("no training examples for {}", model.task())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    adam.clip_norm = cfg.clip_norm;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut seen = 0;
        for &i in &order {
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                break;
            }
            let mut g = Graph::new();
            let loss = model.loss(&mut g, emb, &data[i])?;
            let value = g.scalar(loss);
            if !value.is_finite() {
                return Err(Error::Numeric(format!("{} loss became {value} at step {steps}", model.task())));
            }
            let grads = g.backward(loss)?;
            let store = model.store_mut();
            store.accumulate(&grads)?;
            adam.step(store)?;
            total += value;
            seen += 1;
            steps += 1;
        }
        if seen == 0 {
            break;
        }
        let accuracy = evaluate_skill(model, data, emb)?;
        let entry = EpochLog {
            epoch,
            steps,
            mean_loss: total / seen as f64,
            accuracy,
        };
        log::info!(
            "{} epoch {epoch}: loss {:.4} accuracy {:.4}",
            model.task(),
            entry.mean_loss,
            entry.accuracy
        );
        log.push(entry);
    }
    Ok(log)
}
