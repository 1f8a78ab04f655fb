use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::score_predictions;
use crate::data::RcExample;
use crate::embed::{EmbeddingMatrix, Vocabulary};
use crate::nn::{Adam, Graph};
use crate::rc::{RcInput, RcModel};
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "step,split,em,f1,loss,config_id,wall_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct RcTrainConfig {
    pub steps: usize,
    pub eval_every: usize,
    pub lr: f64,
    pub clip_norm: Option<f64>,
    /// Drives the example order.
    pub seed: u64,
    pub config_id: String,
    /// Stop early once dev F1 reaches this value.
    pub stop_at_f1: Option<f64>,
}

impl Default for RcTrainConfig {
    fn default() -> Self {
        RcTrainConfig {
            steps: 2000,
            eval_every: 100,
            lr: 1e-3,
            clip_norm: Some(5.0),
            seed: 0,
            config_id: "run".into(),
            stop_at_f1: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub split: String,
    pub em: f64,
    pub f1: f64,
    /// Mean training loss since the previous row.
    pub loss: f64,
    pub config_id: String,
    pub wall_ms: u64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{},{}",
            self.step, self.split, self.em, self.f1, self.loss, self.config_id, self.wall_ms
        )
    }

    /// Same row ignoring wall time (for reproducibility comparisons).
    pub fn same_values(&self, other: &MetricsRow) -> bool {
        MetricsRow { wall_ms: 0, ..self.clone() } == MetricsRow { wall_ms: 0, ..other.clone() }
    }
}

pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[MetricsRow]) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// First step whose dev F1 reaches `threshold`.
pub fn steps_to_f1(rows: &[MetricsRow], threshold: f64) -> Option<usize> {
    rows.iter().find(|r| r.split == "dev" && r.f1 >= threshold).map(|r| r.step)
}

/// Evaluation questions with their network inputs.
#[derive(Clone, Debug)]
pub struct DevSet {
    pub examples: Vec<RcExample>,
    pub inputs: Vec<RcInput>,
}

impl DevSet {
    pub fn new(examples: Vec<RcExample>, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<Self> {
        let inputs = RcInput::from_examples(&examples, vocab, emb)?;
        Ok(DevSet { examples, inputs })
    }

    pub fn golds(&self) -> Vec<(String, Vec<String>)> {
        self.examples.iter().map(|e| (e.id.clone(), e.answers.clone())).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub em: f64,
    pub f1: f64,
    pub predictions: BTreeMap<String, String>,
}

/// Decodes every dev question and scores the answer strings.
pub fn evaluate_rc(model: &RcModel, dev: &DevSet) -> Result<Evaluation> {
    let mut predictions = BTreeMap::new();
    for (ex, input) in dev.examples.iter().zip(&dev.inputs) {
        let p = model.predict_span(input)?;
        predictions.insert(ex.id.clone(), ex.span_text(p.span.0, p.span.1));
    }
    let map: HashMap<String, String> = predictions.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let (em, f1) = score_predictions(&map, &dev.golds())?;
    Ok(Evaluation { em, f1, predictions })
}

/// Single-example Adam training over shuffled passes, evaluating on `dev`
/// every `eval_every` steps and after the last step.
pub fn train_rc(model: &mut RcModel, train: &[RcInput], dev: &DevSet, cfg: &RcTrainConfig) -> Result<Vec<MetricsRow>> {
    if train.is_empty() {
        return Err(Error::Data("no training questions".into()));
    }
    if cfg.eval_every == 0 {
        return Err(Error::Config("eval_every must be positive".into()));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    adam.clip_norm = cfg.clip_norm;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let mut rows = Vec::new();
    let (mut loss_sum, mut loss_n) = (0.0, 0usize);
    for step in 1..=cfg.steps {
        if cursor == order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let input = &train[order[cursor]];
        cursor += 1;
        let mut g = Graph::new();
        let loss = model.loss_with(&model.store, &mut g, input)?;
        let value = g.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("loss became {value} at step {step}")));
        }
        let grads = g.backward(loss)?;
        model.store.accumulate(&grads)?;
        adam.step(&mut model.store)?;
        loss_sum += value;
        loss_n += 1;
        if step % cfg.eval_every == 0 || step == cfg.steps {
            let eval = evaluate_rc(model, dev)?;
            let row = MetricsRow {
                step,
                split: "dev".into(),
                em: eval.em,
                f1: eval.f1,
                loss: loss_sum / loss_n as f64,
                config_id: cfg.config_id.clone(),
                wall_ms: started.elapsed().as_millis() as u64,
            };
            log::info!("{} step {step}: loss {:.4} em {:.4} f1 {:.4}", cfg.config_id, row.loss, row.em, row.f1);
            rows.push(row);
            (loss_sum, loss_n) = (0.0, 0);
            if cfg.stop_at_f1.is_some_and(|t| eval.f1 >= t) {
                break;
            }
        }
    }
    Ok(rows)
}
