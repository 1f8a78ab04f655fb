use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::EncoderCheckpoint;
use super::encoder::{Projection, SkillEncoder};
use super::{SupervisionMode, TaskId};
use crate::data::LabelSet;
use crate::embed::EmbeddingMatrix;
use crate::nn::{Graph, ParamStore, Tensor, Var};
use crate::{Error, Result};

/// Prefix of the transferable encoder inside every skill model's store.
pub const ENCODER_PREFIX: &str = "enc";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkillDims {
    /// Word vector width.
    pub input: usize,
    /// Hidden units per LSTM direction.
    pub hidden: usize,
    /// Hidden width of the relation classifier head.
    pub head_hidden: usize,
}

impl Default for SkillDims {
    /// 100-d inputs, 128 per direction (256 concatenated), head of 256.
    fn default() -> Self {
        SkillDims {
            input: 100,
            hidden: 128,
            head_hidden: 256,
        }
    }
}

/// One training record, already mapped to vocabulary and label indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SkillExample {
    Sequence { ids: Vec<usize>, tags: Vec<usize> },
    Sentence { ids: Vec<usize>, label: usize },
    Pair { premise: Vec<usize>, hypothesis: Vec<usize>, label: usize },
}

impl SkillExample {
    fn gold_labels(&self) -> Vec<usize> {
        match self {
            SkillExample::Sequence { tags, .. } => tags.clone(),
            SkillExample::Sentence { label, .. } | SkillExample::Pair { label, .. } => vec![*label],
        }
    }
}

/// Word-vector rows for a token id sequence.
pub fn embed_rows(emb: &EmbeddingMatrix, ids: &[usize]) -> Result<Tensor> {
    if ids.is_empty() {
        return Err(Error::Contract("empty token sequence".into()));
    }
    let mut data = Vec::with_capacity(ids.len() * emb.dim());
    for &i in ids {
        if i >= emb.rows() {
            return Err(Error::Index(format!("token id {i} outside embedding matrix")));
        }
        data.extend_from_slice(emb.vector(i));
    }
    Tensor::matrix(ids.len(), emb.dim(), data)
}

/// Common surface of the three skill model families.
pub trait SkillModel {
    fn task(&self) -> TaskId;
    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
    fn encoder(&self) -> &SkillEncoder;
    fn labels(&self) -> &LabelSet;
    fn vocab_hash(&self) -> u64;

    /// Scalar training loss for one example, reading weights from `store`
    /// (which must share this model's layout).
    fn loss_with(&self, store: &ParamStore, g: &mut Graph, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<Var>;

    fn loss(&self, g: &mut Graph, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<Var> {
        self.loss_with(self.store(), g, emb, ex)
    }

    /// `(correct, total)` prediction units (tokens for NER, examples otherwise).
    fn score(&self, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<(usize, usize)>;

    /// Extra key/value pairs written into the checkpoint.
    fn metadata(&self) -> Vec<(String, String)> {
        Vec::new()
    }

    /// Encoder (and label projection) weights for transfer.
    fn checkpoint(&self) -> EncoderCheckpoint {
        let store = self.store();
        let enc = self.encoder();
        EncoderCheckpoint::from_store(
            self.task(),
            store,
            &format!("{}.", enc.prefix),
            [enc.input_dim(store), enc.hidden(store), enc.labels(store)],
            self.vocab_hash(),
            self.metadata(),
        )
    }
}

fn check_labels(ex: &SkillExample, n: usize) -> Result<()> {
    match ex.gold_labels().into_iter().find(|l| *l >= n) {
        Some(l) => Err(Error::Data(format!("label index {l} outside the {n} declared labels"))),
        None => Ok(()),
    }
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best })
        .0
}

/// Bi-LSTM with a per-token label projection and softmax.
#[derive(Clone, Debug)]
pub struct SequenceLabeler {
    pub store: ParamStore,
    pub encoder: SkillEncoder,
    pub labels: LabelSet,
    pub vocab_hash: u64,
}

impl SequenceLabeler {
    pub fn new(dims: SkillDims, labels: LabelSet, vocab_hash: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder = SkillEncoder::init(
            &mut store,
            ENCODER_PREFIX,
            TaskId::Ner,
            dims.input,
            dims.hidden,
            labels.len(),
            true,
            &mut rng,
        )?;
        Ok(SequenceLabeler {
            store,
            encoder,
            labels,
            vocab_hash,
        })
    }

    fn probs(&self, store: &ParamStore, g: &mut Graph, x: Var) -> Result<Var> {
        let c = self.encoder.context(g, store, x)?;
        let logits = self.encoder.label_logits(g, store, c)?;
        g.softmax_rows(logits)
    }

    /// Per-token label distributions `T x L`.
    pub fn seq_label_forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let p = self.probs(&self.store, &mut g, xv)?;
        Ok(g.value(p).clone())
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        let p = self.seq_label_forward(x)?;
        Ok((0..p.rows()).map(|r| argmax(p.row(r))).collect())
    }
}

impl SkillModel for SequenceLabeler {
    fn task(&self) -> TaskId {
        TaskId::Ner
    }
    fn store(&self) -> &ParamStore {
        &self.store
    }
    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn encoder(&self) -> &SkillEncoder {
        &self.encoder
    }
    fn labels(&self) -> &LabelSet {
        &self.labels
    }
    fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    fn loss_with(&self, store: &ParamStore, g: &mut Graph, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<Var> {
        let SkillExample::Sequence { ids, tags } = ex else {
            return Err(Error::Data("sequence labeler needs tagged sequences".into()));
        };
        if ids.len() != tags.len() {
            return Err(Error::Data("token/tag count mismatch".into()));
        }
        check_labels(ex, self.labels.len())?;
        let x = g.constant(embed_rows(emb, ids)?);
        let p = self.probs(store, g, x)?;
        let nll = g.nll(p, tags)?;
        g.scale(nll, 1.0 / ids.len() as f64)
    }

    fn score(&self, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<(usize, usize)> {
        let SkillExample::Sequence { ids, tags } = ex else {
            return Err(Error::Data("sequence labeler needs tagged sequences".into()));
        };
        let pred = self.predict(&embed_rows(emb, ids)?)?;
        Ok((pred.iter().zip(tags).filter(|(a, b)| a == b).count(), tags.len()))
    }
}

/// Question type classifier over a Bi-LSTM, either summing per-token label
/// logits (token supervision) or max-pooling context vectors first.
#[derive(Clone, Debug)]
pub struct TokenSupervisedClassifier {
    pub store: ParamStore,
    pub encoder: SkillEncoder,
    pub labels: LabelSet,
    pub mode: SupervisionMode,
    /// Adds a per-token cross-entropy term against the sentence label.
    pub per_token_loss: bool,
    pub vocab_hash: u64,
}

impl TokenSupervisedClassifier {
    pub fn new(dims: SkillDims, labels: LabelSet, mode: SupervisionMode, vocab_hash: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder = SkillEncoder::init(
            &mut store,
            ENCODER_PREFIX,
            TaskId::Qtc,
            dims.input,
            dims.hidden,
            labels.len(),
            true,
            &mut rng,
        )?;
        Ok(TokenSupervisedClassifier {
            store,
            encoder,
            labels,
            mode,
            per_token_loss: false,
            vocab_hash,
        })
    }

    fn token_sum_probs(&self, store: &ParamStore, g: &mut Graph, x: Var) -> Result<(Var, Var)> {
        let c = self.encoder.context(g, store, x)?;
        let logits = self.encoder.label_logits(g, store, c)?;
        let summed = g.sum_rows(logits)?;
        Ok((g.softmax_rows(summed)?, logits))
    }

    fn pooled_probs(&self, store: &ParamStore, g: &mut Graph, x: Var) -> Result<(Var, Var)> {
        let c = self.encoder.context(g, store, x)?;
        let pooled = g.max_rows(c)?;
        let logits = self.encoder.label_logits(g, store, pooled)?;
        let token_logits = self.encoder.label_logits(g, store, c)?;
        Ok((g.softmax_rows(logits)?, token_logits))
    }

    fn run(&self, x: &Tensor, mode: SupervisionMode) -> Result<Vec<f64>> {
        if x.rows() == 0 {
            return Err(Error::Contract("empty sentence".into()));
        }
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let (p, _) = match mode {
            SupervisionMode::Token => self.token_sum_probs(&self.store, &mut g, xv)?,
            SupervisionMode::Sentence => self.pooled_probs(&self.store, &mut g, xv)?,
        };
        Ok(g.value(p).data().to_vec())
    }

    /// `softmax(sum_t (c_t W + b))`.
    pub fn token_supervised_classify(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.run(x, SupervisionMode::Token)
    }

    /// `softmax(max_t(c_t) W + b)`.
    pub fn sentence_pooled_classify(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.run(x, SupervisionMode::Sentence)
    }

    /// Distribution under the model's own mode.
    pub fn classify(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.run(x, self.mode)
    }
}

impl SkillModel for TokenSupervisedClassifier {
    fn task(&self) -> TaskId {
        TaskId::Qtc
    }
    fn store(&self) -> &ParamStore {
        &self.store
    }
    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn encoder(&self) -> &SkillEncoder {
        &self.encoder
    }
    fn labels(&self) -> &LabelSet {
        &self.labels
    }
    fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![("mode".into(), self.mode.as_str().into())]
    }

    fn loss_with(&self, store: &ParamStore, g: &mut Graph, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<Var> {
        let SkillExample::Sentence { ids, label } = ex else {
            return Err(Error::Data("text classifier needs labeled sentences".into()));
        };
        check_labels(ex, self.labels.len())?;
        let x = g.constant(embed_rows(emb, ids)?);
        let (p, token_logits) = match self.mode {
            SupervisionMode::Token => self.token_sum_probs(store, g, x)?,
            SupervisionMode::Sentence => self.pooled_probs(store, g, x)?,
        };
        let loss = g.nll(p, &[*label])?;
        if !self.per_token_loss {
            return Ok(loss);
        }
        let tp = g.softmax_rows(token_logits)?;
        let tok = g.nll(tp, &vec![*label; ids.len()])?;
        let tok = g.scale(tok, 1.0 / ids.len() as f64)?;
        g.add(loss, tok)
    }

    fn score(&self, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<(usize, usize)> {
        let SkillExample::Sentence { ids, label } = ex else {
            return Err(Error::Data("text classifier needs labeled sentences".into()));
        };
        let p = self.classify(&embed_rows(emb, ids)?)?;
        Ok((usize::from(argmax(&p) == *label), 1))
    }
}

/// Shared Bi-LSTM over both arguments, max-pooled to `u`, `v`, combined as
/// `[u; v; |u - v|; u * v]` and classified by a one-hidden-layer tanh head.
#[derive(Clone, Debug)]
pub struct RelationClassifier {
    pub task: TaskId,
    pub store: ParamStore,
    pub encoder: SkillEncoder,
    pub hidden_layer: Projection,
    pub output_layer: Projection,
    pub labels: LabelSet,
    pub vocab_hash: u64,
}

impl RelationClassifier {
    pub fn new(task: TaskId, dims: SkillDims, labels: LabelSet, vocab_hash: u64, seed: u64) -> Result<Self> {
        if !matches!(task, TaskId::Te | TaskId::Ppdb) {
            return Err(Error::Config(format!("{task} is not a relation task")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder = SkillEncoder::init(&mut store, ENCODER_PREFIX, task, dims.input, dims.hidden, 0, true, &mut rng)?;
        let hidden_layer = Projection::init(&mut store, "head.hidden", 8 * dims.hidden, dims.head_hidden, true, &mut rng)?;
        let output_layer = Projection::init(&mut store, "head.out", dims.head_hidden, labels.len(), true, &mut rng)?;
        Ok(RelationClassifier {
            task,
            store,
            encoder,
            hidden_layer,
            output_layer,
            labels,
            vocab_hash,
        })
    }

    fn features(&self, store: &ParamStore, g: &mut Graph, premise: Var, hypothesis: Var) -> Result<Var> {
        let cu = self.encoder.context(g, store, premise)?;
        let cv = self.encoder.context(g, store, hypothesis)?;
        let u = g.max_rows(cu)?;
        let v = g.max_rows(cv)?;
        let diff = g.sub(u, v)?;
        let abs = g.abs(diff)?;
        let prod = g.mul(u, v)?;
        g.concat_cols(&[u, v, abs, prod])
    }

    fn probs(&self, store: &ParamStore, g: &mut Graph, premise: Var, hypothesis: Var) -> Result<Var> {
        let f = self.features(store, g, premise, hypothesis)?;
        let h = self.hidden_layer.apply(g, store, f)?;
        let h = g.tanh(h)?;
        let logits = self.output_layer.apply(g, store, h)?;
        g.softmax_rows(logits)
    }

    fn check(premise: &Tensor, hypothesis: &Tensor) -> Result<()> {
        if premise.rows() == 0 || hypothesis.rows() == 0 {
            return Err(Error::Contract("relation arguments must be non-empty".into()));
        }
        Ok(())
    }

    /// `[u; v; |u - v|; u * v]`, width `4 * 2H`.
    pub fn head_input(&self, premise: &Tensor, hypothesis: &Tensor) -> Result<Tensor> {
        Self::check(premise, hypothesis)?;
        let mut g = Graph::new();
        let (p, h) = (g.constant(premise.clone()), g.constant(hypothesis.clone()));
        let f = self.features(&self.store, &mut g, p, h)?;
        Ok(g.value(f).clone())
    }

    pub fn relation_classify(&self, premise: &Tensor, hypothesis: &Tensor) -> Result<Vec<f64>> {
        Self::check(premise, hypothesis)?;
        let mut g = Graph::new();
        let (p, h) = (g.constant(premise.clone()), g.constant(hypothesis.clone()));
        let out = self.probs(&self.store, &mut g, p, h)?;
        Ok(g.value(out).data().to_vec())
    }
}

impl SkillModel for RelationClassifier {
    fn task(&self) -> TaskId {
        self.task
    }
    fn store(&self) -> &ParamStore {
        &self.store
    }
    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn encoder(&self) -> &SkillEncoder {
        &self.encoder
    }
    fn labels(&self) -> &LabelSet {
        &self.labels
    }
    fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    fn loss_with(&self, store: &ParamStore, g: &mut Graph, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<Var> {
        let SkillExample::Pair { premise, hypothesis, label } = ex else {
            return Err(Error::Data("relation classifier needs sentence pairs".into()));
        };
        check_labels(ex, self.labels.len())?;
        let p = g.constant(embed_rows(emb, premise)?);
        let h = g.constant(embed_rows(emb, hypothesis)?);
        let probs = self.probs(store, g, p, h)?;
        g.nll(probs, &[*label])
    }

    fn score(&self, emb: &EmbeddingMatrix, ex: &SkillExample) -> Result<(usize, usize)> {
        let SkillExample::Pair { premise, hypothesis, label } = ex else {
            return Err(Error::Data("relation classifier needs sentence pairs".into()));
        };
        let p = self.relation_classify(&embed_rows(emb, premise)?, &embed_rows(emb, hypothesis)?)?;
        Ok((usize::from(argmax(&p) == *label), 1))
    }
}
