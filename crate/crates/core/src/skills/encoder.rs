use rand::Rng;

use super::TaskId;
use crate::nn::{glorot_uniform, BiLstm, Graph, ParamId, ParamStore, Tensor, Var};
use crate::{Error, Result};

/// Label projection `c W + b` from context vectors to label space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Projection {
    pub w: ParamId,
    pub b: ParamId,
}

impl Projection {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        output: usize,
        trainable: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Projection {
            w: store.insert(format!("{prefix}.W"), glorot_uniform(rng, input, output), trainable)?,
            b: store.insert(format!("{prefix}.b"), Tensor::zeros(&[output]), trainable)?,
        })
    }

    pub fn find(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |s: &str| {
            store
                .id(&format!("{prefix}.{s}"))
                .ok_or_else(|| Error::Config(format!("missing parameter {prefix}.{s}")))
        };
        Ok(Projection { w: get("W")?, b: get("b")? })
    }

    pub fn apply(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        let w = g.param(store, self.w);
        let b = g.param(store, self.b);
        g.affine(x, w, b)
    }

    pub fn output_dim(&self, store: &ParamStore) -> usize {
        store.value(self.w).cols()
    }
}

/// The transferable part of a skill model: a Bi-LSTM context encoder plus,
/// for token-labelling tasks, its label projection.
///
/// Parameters live under `{prefix}.fwd.*`, `{prefix}.bwd.*` and
/// `{prefix}.proj.*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkillEncoder {
    pub task: TaskId,
    pub prefix: String,
    pub bilstm: BiLstm,
    pub projection: Option<Projection>,
}

impl SkillEncoder {
    /// `labels` is required for NER and QTC and ignored otherwise.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        task: TaskId,
        input: usize,
        hidden: usize,
        labels: usize,
        trainable: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let bilstm = BiLstm::init(store, prefix, input, hidden, trainable, rng)?;
        let projection = if task.has_label_output() {
            if labels == 0 {
                return Err(Error::Config(format!("{task} encoder needs a label count")));
            }
            Some(Projection::init(store, &format!("{prefix}.proj"), 2 * hidden, labels, trainable, rng)?)
        } else {
            None
        };
        Ok(SkillEncoder {
            task,
            prefix: prefix.to_string(),
            bilstm,
            projection,
        })
    }

    pub fn find(store: &ParamStore, prefix: &str, task: TaskId) -> Result<Self> {
        let projection = if task.has_label_output() {
            Some(Projection::find(store, &format!("{prefix}.proj"))?)
        } else {
            None
        };
        Ok(SkillEncoder {
            task,
            prefix: prefix.to_string(),
            bilstm: BiLstm::find(store, prefix)?,
            projection,
        })
    }

    pub fn input_dim(&self, store: &ParamStore) -> usize {
        self.bilstm.fwd.input(store)
    }

    pub fn hidden(&self, store: &ParamStore) -> usize {
        self.bilstm.fwd.hidden(store)
    }

    pub fn labels(&self, store: &ParamStore) -> usize {
        self.projection.map_or(0, |p| p.output_dim(store))
    }

    /// Width of [`SkillEncoder::transfer`]: `2H`, plus `L` for label tasks.
    pub fn output_dim(&self, store: &ParamStore) -> usize {
        self.bilstm.output_dim(store) + self.labels(store)
    }

    pub fn params(&self) -> Vec<ParamId> {
        let mut p = self.bilstm.params().to_vec();
        if let Some(proj) = self.projection {
            p.extend([proj.w, proj.b]);
        }
        p
    }

    /// Context vectors `T x 2H`.
    pub fn context(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        let width = g.value(x).cols();
        let expected = self.input_dim(store);
        if width != expected {
            return Err(Error::dim(format!("{} encoder expects width {expected}, got {width}", self.task)));
        }
        self.bilstm.encode(g, store, x)
    }

    /// Per-token label logits `T x L`.
    pub fn label_logits(&self, g: &mut Graph, store: &ParamStore, context: Var) -> Result<Var> {
        let proj = self
            .projection
            .ok_or_else(|| Error::Config(format!("{} encoder has no label projection", self.task)))?;
        proj.apply(g, store, context)
    }

    /// Representation handed to the reading comprehension model:
    /// `concat(c, softmax(c W + b))` for NER/QTC, `c` otherwise.
    pub fn transfer(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        let c = self.context(g, store, x)?;
        if self.projection.is_none() {
            return Ok(c);
        }
        let logits = self.label_logits(g, store, c)?;
        let soft = g.softmax_rows(logits)?;
        g.concat_cols(&[c, soft])
    }
}
