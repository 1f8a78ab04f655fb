use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::ops::{dp_decode, SpanPrediction};
use crate::data::RcExample;
use crate::embed::{build_input, EmbeddingMatrix, Vocabulary};
use crate::nn::{glorot_uniform, BiLstm, Graph, ParamId, ParamStore, Tensor, Var};
use crate::skills::{EncoderCheckpoint, Projection, SkillEncoder, TaskId};
use crate::{Error, Result};

pub const DEFAULT_MAX_SPAN_LEN: usize = 15;

/// Where an attached skill encoder's weights come from.
#[derive(Clone, Debug, PartialEq)]
pub enum SkillSource {
    Checkpoint(PathBuf),
    /// Already-loaded checkpoint (avoids re-reading files across runs).
    Loaded(Box<EncoderCheckpoint>),
    /// Fresh initialization with the given shapes.
    Random { hidden: usize, labels: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkillSpec {
    pub task: TaskId,
    pub source: SkillSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RcConfig {
    pub skills: Vec<SkillSpec>,
    pub fine_tune_skills: bool,
    /// Word vector width; the RC encoder sees two extra feature columns.
    pub input_dim: usize,
    /// Hidden units per direction of the RC encoder and both span Bi-LSTMs.
    pub hidden: usize,
    /// Adapter output width per skill.
    pub adapt: usize,
    pub max_span_len: usize,
    pub seed: u64,
    /// When set, checkpoints built for another vocabulary are rejected.
    pub vocab_hash: Option<u64>,
}

impl RcConfig {
    /// 100-d word vectors, 128 per direction (256 output), adapters of 100.
    pub fn new(skills: Vec<SkillSpec>) -> Self {
        RcConfig {
            skills,
            fine_tune_skills: false,
            input_dim: 100,
            hidden: 128,
            adapt: 100,
            max_span_len: DEFAULT_MAX_SPAN_LEN,
            seed: 0,
            vocab_hash: None,
        }
    }

    /// `2H + adapt * |skills|`.
    pub fn ensemble_width(&self) -> usize {
        2 * self.hidden + self.adapt * self.skills.len()
    }
}

/// Seeds each component from `(seed, name)` so that one component's
/// initialization never depends on which other components exist.
pub(crate) fn component_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    ChaCha8Rng::from_seed(h.finalize()[..32].try_into().expect("32 bytes"))
}

/// An example ready for the network: feature-augmented rows for the RC
/// encoder, plain word rows for skill encoders, and the gold span.
#[derive(Clone, Debug, PartialEq)]
pub struct RcInput {
    pub id: String,
    pub doc: Tensor,
    pub question: Tensor,
    pub doc_words: Tensor,
    pub question_words: Tensor,
    pub span: (usize, usize),
}

fn word_columns(x: &Tensor, d: usize) -> Result<Tensor> {
    let data = (0..x.rows()).flat_map(|r| x.row(r)[..d].to_vec()).collect();
    Tensor::matrix(x.rows(), d, data)
}

impl RcInput {
    pub fn new(ex: &RcExample, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<Self> {
        if ex.doc.is_empty() {
            return Err(Error::Contract(format!("example {} has an empty document", ex.id)));
        }
        let (doc, question) = build_input(&ex.doc_words(), &ex.question, vocab, emb)?;
        Ok(RcInput {
            id: ex.id.clone(),
            doc_words: word_columns(&doc, emb.dim())?,
            question_words: word_columns(&question, emb.dim())?,
            doc,
            question,
            span: ex.span,
        })
    }

    pub fn from_examples(examples: &[RcExample], vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<Vec<Self>> {
        examples.iter().map(|e| RcInput::new(e, vocab, emb)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttachedSkill {
    pub task: TaskId,
    pub encoder: SkillEncoder,
    pub adapter: Projection,
}

/// Tape handles of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct RcForward {
    pub e_d: Var,
    pub e_q: Var,
    pub r_q: Var,
    /// `1 x T`
    pub start: Var,
    /// `1 x T`
    pub end: Var,
}

#[derive(Clone, Debug)]
pub struct RcModel {
    pub config: RcConfig,
    pub store: ParamStore,
    pub encoder: BiLstm,
    pub skills: Vec<AttachedSkill>,
    pub w_qw: ParamId,
    pub start_lstm: BiLstm,
    pub start_out: Projection,
    pub end_lstm: BiLstm,
    pub end_out: Projection,
}

fn skill_prefix(task: TaskId) -> String {
    format!("skill.{task}")
}

fn load_source(spec: &SkillSpec, config: &RcConfig) -> Result<Option<EncoderCheckpoint>> {
    let ck = match &spec.source {
        SkillSource::Random { .. } => return Ok(None),
        SkillSource::Checkpoint(path) => EncoderCheckpoint::load(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read {} checkpoint {}: {io}", spec.task, path.display())),
            other => other,
        })?,
        SkillSource::Loaded(ck) => (**ck).clone(),
    };
    if ck.task != spec.task {
        return Err(Error::Config(format!("checkpoint holds {}, attached as {}", ck.task, spec.task)));
    }
    if ck.dims[0] != config.input_dim {
        return Err(Error::Config(format!(
            "{} checkpoint expects input width {}, model uses {}",
            spec.task, ck.dims[0], config.input_dim
        )));
    }
    if let Some(h) = config.vocab_hash {
        if h != ck.vocab_hash {
            return Err(Error::Config(format!("{} checkpoint was built for another vocabulary", spec.task)));
        }
    }
    Ok(Some(ck))
}

impl RcModel {
    pub fn new(config: RcConfig) -> Result<Self> {
        if config.max_span_len == 0 {
            return Err(Error::Config("max_span_len must be at least 1".into()));
        }
        let mut specs = config.skills.clone();
        specs.sort_by_key(|s| s.task);
        if specs.windows(2).any(|w| w[0].task == w[1].task) {
            return Err(Error::Config("a skill is attached twice".into()));
        }
        if let Some(s) = specs.iter().find(|s| s.task == TaskId::Rc) {
            return Err(Error::Config(format!("{} is not a skill", s.task)));
        }
        let mut store = ParamStore::new();
        let seed = config.seed;
        let h = config.hidden;
        let encoder = BiLstm::init(&mut store, "rc.enc", config.input_dim + 2, h, true, &mut component_rng(seed, "rc.enc"))?;

        let mut skills = Vec::with_capacity(specs.len());
        for spec in &specs {
            let prefix = skill_prefix(spec.task);
            let ck = load_source(spec, &config)?;
            let (hidden, labels) = match (&ck, &spec.source) {
                (Some(ck), _) => (ck.dims[1], ck.dims[2]),
                (None, SkillSource::Random { hidden, labels }) => (*hidden, *labels),
                (None, _) => unreachable!("only random sources skip loading"),
            };
            let mut rng = component_rng(seed, &prefix);
            let encoder = SkillEncoder::init(
                &mut store,
                &prefix,
                spec.task,
                config.input_dim,
                hidden,
                labels,
                config.fine_tune_skills,
                &mut rng,
            )?;
            if let Some(ck) = &ck {
                let known = |n: &str| store.id(&format!("{prefix}.{n}")).is_some();
                if ck.tensors.len() != encoder.params().len() || !ck.tensors.iter().all(|(n, _)| known(n)) {
                    return Err(Error::Config(format!("{} checkpoint tensors do not match the encoder", spec.task)));
                }
                ck.install(&mut store, &format!("{prefix}."), config.fine_tune_skills)
                    .map_err(|e| Error::Config(format!("{} checkpoint does not fit: {e}", spec.task)))?;
            }
            let adapter_name = format!("adapter.{}", spec.task);
            let skill_width = encoder.output_dim(&store);
            let adapter = Projection::init(
                &mut store,
                &adapter_name,
                skill_width,
                config.adapt,
                true,
                &mut component_rng(seed, &adapter_name),
            )?;
            skills.push(AttachedSkill {
                task: spec.task,
                encoder,
                adapter,
            });
        }

        let width = config.ensemble_width();
        let w_qw = store.insert(
            "rc.qw",
            glorot_uniform(&mut component_rng(seed, "rc.qw"), width, 1),
            true,
        )?;
        let start_lstm = BiLstm::init(&mut store, "rc.start", 3 * width, h, true, &mut component_rng(seed, "rc.start"))?;
        let start_out = Projection::init(&mut store, "rc.start_out", 2 * h, 1, true, &mut component_rng(seed, "rc.start_out"))?;
        let end_lstm = BiLstm::init(&mut store, "rc.end", 4 * width + 1, h, true, &mut component_rng(seed, "rc.end"))?;
        let end_out = Projection::init(&mut store, "rc.end_out", 2 * h, 1, true, &mut component_rng(seed, "rc.end_out"))?;
        Ok(RcModel {
            config: RcConfig { skills: specs, ..config },
            store,
            encoder,
            skills,
            w_qw,
            start_lstm,
            start_out,
            end_lstm,
            end_out,
        })
    }

    pub fn ensemble_width(&self) -> usize {
        self.config.ensemble_width()
    }

    /// Ids of skill encoder parameters (everything frozen when fine-tuning is off).
    pub fn skill_params(&self) -> Vec<ParamId> {
        self.skills.iter().flat_map(|s| s.encoder.params()).collect()
    }

    pub fn adapter_params(&self) -> Vec<ParamId> {
        self.skills.iter().flat_map(|s| [s.adapter.w, s.adapter.b]).collect()
    }

    fn encode_side(&self, store: &ParamStore, g: &mut Graph, full: &Tensor, words: &Tensor) -> Result<Var> {
        let x = g.constant(full.clone());
        let mut parts = vec![self.encoder.encode(g, store, x)?];
        if !self.skills.is_empty() {
            let w = g.constant(words.clone());
            for s in &self.skills {
                let out = s.encoder.transfer(g, store, w)?;
                parts.push(s.adapter.apply(g, store, out)?);
            }
        }
        g.concat_cols(&parts)
    }

    /// Ensemble token vectors for document and question, blocks ordered
    /// `[rc, ner, qtc, te, ppdb]` (attached ones only).
    pub fn ensemble_encode(&self, store: &ParamStore, g: &mut Graph, input: &RcInput) -> Result<(Var, Var)> {
        if input.question.rows() == 0 {
            return Err(Error::Contract(format!("example {} has an empty question", input.id)));
        }
        let e_d = self.encode_side(store, g, &input.doc, &input.doc_words)?;
        let e_q = self.encode_side(store, g, &input.question, &input.question_words)?;
        Ok((e_d, e_q))
    }

    pub fn forward_with(&self, store: &ParamStore, g: &mut Graph, input: &RcInput) -> Result<RcForward> {
        let t = input.doc.rows();
        if t == 0 {
            return Err(Error::Contract("empty document".into()));
        }
        let (e_d, e_q) = self.ensemble_encode(store, g, input)?;

        let w_qw = g.param(store, self.w_qw);
        let scores = g.matmul(e_q, w_qw)?;
        let m = g.value(scores).rows();
        let scores = g.reshape(scores, 1, m)?;
        let attn = g.softmax_rows(scores)?;
        let r_q = g.matmul(attn, e_q)?;

        let r_b = g.broadcast_rows(r_q, t)?;
        let prod = g.mul_row(e_d, r_q)?;
        let r = g.concat_cols(&[e_d, r_b, prod])?;

        let hs = self.start_lstm.encode(g, store, r)?;
        let s_logit = self.start_out.apply(g, store, hs)?;
        let s_logit = g.reshape(s_logit, 1, t)?;
        let start = g.softmax_rows(s_logit)?;

        let s_col = g.reshape(start, t, 1)?;
        let weighted = g.mul_col(e_d, s_col)?;
        let end_in = g.concat_cols(&[r, s_col, weighted])?;
        let he = self.end_lstm.encode(g, store, end_in)?;
        let e_logit = self.end_out.apply(g, store, he)?;
        let e_logit = g.reshape(e_logit, 1, t)?;
        let end = g.softmax_rows(e_logit)?;
        Ok(RcForward { e_d, e_q, r_q, start, end })
    }

    /// `-log start[s] - log end[e]` for the gold span.
    pub fn loss_with(&self, store: &ParamStore, g: &mut Graph, input: &RcInput) -> Result<Var> {
        let (s, e) = input.span;
        let t = input.doc.rows();
        if s > e || e >= t {
            return Err(Error::Data(format!("gold span ({s}, {e}) invalid for {t} tokens in {}", input.id)));
        }
        let f = self.forward_with(store, g, input)?;
        let ls = g.nll(f.start, &[s])?;
        let le = g.nll(f.end, &[e])?;
        g.add(ls, le)
    }

    pub fn rc_forward_loss(&self, input: &RcInput) -> Result<f64> {
        let mut g = Graph::new();
        let l = self.loss_with(&self.store, &mut g, input)?;
        Ok(g.scalar(l))
    }

    pub fn predict_span(&self, input: &RcInput) -> Result<SpanPrediction> {
        let mut g = Graph::new();
        let f = self.forward_with(&self.store, &mut g, input)?;
        let start = g.value(f.start).data().to_vec();
        let end = g.value(f.end).data().to_vec();
        let (i, j, score) = dp_decode(&start, &end, self.config.max_span_len)?;
        Ok(SpanPrediction {
            start,
            end,
            span: (i, j),
            score,
        })
    }

    /// Whole-model checkpoint (task id `rc`). Shapes of attached skills are
    /// kept in the metadata so the model can be rebuilt without the
    /// original skill files.
    pub fn checkpoint(&self) -> EncoderCheckpoint {
        let mut metadata = vec![
            ("fine_tune_skills".to_string(), self.config.fine_tune_skills.to_string()),
            ("max_span_len".to_string(), self.config.max_span_len.to_string()),
            ("seed".to_string(), self.config.seed.to_string()),
        ];
        for s in &self.skills {
            metadata.push((
                skill_prefix(s.task),
                format!("{},{}", s.encoder.hidden(&self.store), s.encoder.labels(&self.store)),
            ));
        }
        EncoderCheckpoint::from_store(
            TaskId::Rc,
            &self.store,
            "",
            [self.config.input_dim, self.config.hidden, self.config.adapt],
            self.config.vocab_hash.unwrap_or(0),
            metadata,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.checkpoint().save(path)
    }

    pub fn from_checkpoint(ck: &EncoderCheckpoint) -> Result<Self> {
        ck.expect(TaskId::Rc, None)?;
        let meta = |k: &str| ck.meta(k).ok_or_else(|| Error::Checkpoint(format!("missing metadata {k}")));
        let parse = |k: &str| -> Result<u64> {
            meta(k)?.parse().map_err(|_| Error::Checkpoint(format!("bad metadata {k}")))
        };
        let mut skills = Vec::new();
        for task in TaskId::SKILLS {
            if let Some(v) = ck.meta(&skill_prefix(task)) {
                let (h, l) = v
                    .split_once(',')
                    .and_then(|(h, l)| Some((h.parse().ok()?, l.parse().ok()?)))
                    .ok_or_else(|| Error::Checkpoint(format!("bad skill shape {v}")))?;
                skills.push(SkillSpec {
                    task,
                    source: SkillSource::Random { hidden: h, labels: l },
                });
            }
        }
        let config = RcConfig {
            skills,
            fine_tune_skills: meta("fine_tune_skills")? == "true",
            input_dim: ck.dims[0],
            hidden: ck.dims[1],
            adapt: ck.dims[2],
            max_span_len: parse("max_span_len")? as usize,
            seed: parse("seed")?,
            vocab_hash: (ck.vocab_hash != 0).then_some(ck.vocab_hash),
        };
        let mut model = RcModel::new(config)?;
        if ck.tensors.len() != model.store.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} tensors, model needs {}",
                ck.tensors.len(),
                model.store.len()
            )));
        }
        for (name, t) in &ck.tensors {
            let id = model
                .store
                .id(name)
                .ok_or_else(|| Error::Checkpoint(format!("unknown tensor {name}")))?;
            model.store.set_value(id, t.clone())?;
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&EncoderCheckpoint::load(path)?)
    }
}
