use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use super::manifest::{bytes_sha256, file_sha256, Manifest};
use super::train::{evaluate_rc, train_rc, DevSet, Evaluation, MetricsRow, RcTrainConfig, METRICS_HEADER};
use crate::data::{
    sample_squad, LabelSet, LabeledPair, LabeledSentence, LabeledSequence, SizeSpec, SquadFile, SyntheticSuite,
    PPDB_LABELS, TE_LABELS,
};
use crate::embed::{load_embeddings, EmbeddingMatrix, Vocabulary};
use crate::rc::{RcConfig, RcInput, RcModel, SkillSource, SkillSpec};
use crate::skills::{
    pair_examples, sentence_examples, sequence_examples, train_skill, EncoderCheckpoint, EpochLog, RelationClassifier,
    SequenceLabeler, SkillDims, SkillModel, SkillTrainConfig, SupervisionMode, TaskId, TokenSupervisedClassifier,
};
use crate::{Error, Result};

/// Training data for one skill.
#[derive(Clone, Copy, Debug)]
pub enum SkillCorpus<'a> {
    Ner(&'a [LabeledSequence]),
    Qtc(&'a [LabeledSentence], SupervisionMode),
    Te(&'a [LabeledPair]),
    Ppdb(&'a [LabeledPair]),
}

impl SkillCorpus<'_> {
    pub fn task(&self) -> TaskId {
        match self {
            SkillCorpus::Ner(_) => TaskId::Ner,
            SkillCorpus::Qtc(..) => TaskId::Qtc,
            SkillCorpus::Te(_) => TaskId::Te,
            SkillCorpus::Ppdb(_) => TaskId::Ppdb,
        }
    }
}

/// Outcome of training one skill model.
#[derive(Clone, Debug)]
pub struct TrainedSkill {
    pub checkpoint: EncoderCheckpoint,
    pub log: Vec<EpochLog>,
}

fn fit<M: SkillModel>(
    mut model: M,
    data: &[crate::skills::SkillExample],
    emb: &EmbeddingMatrix,
    cfg: &SkillTrainConfig,
) -> Result<TrainedSkill> {
    let log = train_skill(&mut model, data, emb, cfg)?;
    Ok(TrainedSkill {
        checkpoint: model.checkpoint(),
        log,
    })
}

/// Trains one skill model and returns its transferable checkpoint. Label
/// inventories come from the data for NER and QTC and are fixed for TE and
/// PPDB.
pub fn train_skill_corpus(
    corpus: SkillCorpus<'_>,
    vocab: &Vocabulary,
    emb: &EmbeddingMatrix,
    dims: SkillDims,
    cfg: &SkillTrainConfig,
) -> Result<TrainedSkill> {
    let hash = vocab.hash();
    let seed = cfg.seed;
    match corpus {
        SkillCorpus::Ner(seqs) => {
            let labels = LabelSet::bio(seqs.iter().flat_map(|s| s.tags.iter().map(String::as_str)))?;
            let data = sequence_examples(seqs, vocab, &labels)?;
            fit(SequenceLabeler::new(dims, labels, hash, seed)?, &data, emb, cfg)
        }
        SkillCorpus::Qtc(sents, mode) => {
            let labels = LabelSet::observed(sents.iter().map(|s| s.label.as_str()))?;
            let data = sentence_examples(sents, vocab, &labels)?;
            fit(TokenSupervisedClassifier::new(dims, labels, mode, hash, seed)?, &data, emb, cfg)
        }
        SkillCorpus::Te(pairs) | SkillCorpus::Ppdb(pairs) => {
            let task = corpus.task();
            let names: &[&str] = if task == TaskId::Te { &TE_LABELS } else { &PPDB_LABELS };
            let labels = LabelSet::new(names.iter().copied())?;
            let data = pair_examples(pairs, vocab, &labels)?;
            fit(RelationClassifier::new(task, dims, labels, hash, seed)?, &data, emb, cfg)
        }
    }
}

/// A generated suite with its vocabulary and (seeded random) word vectors.
#[derive(Clone, Debug)]
pub struct SyntheticWorld {
    pub suite: SyntheticSuite,
    pub vocab: Vocabulary,
    pub emb: EmbeddingMatrix,
}

impl SyntheticWorld {
    pub fn new(seed: u64, size: &SizeSpec, embed_dim: usize, embed_seed: u64) -> Result<Self> {
        let suite = crate::data::gen_synthetic_suite(seed, size)?;
        let vocab = Vocabulary::from_tokens(suite.vocabulary.iter());
        let emb = EmbeddingMatrix::random(&vocab, embed_dim, embed_seed);
        Ok(SyntheticWorld { suite, vocab, emb })
    }

    pub fn corpus(&self, task: TaskId, mode: SupervisionMode) -> Result<SkillCorpus<'_>> {
        Ok(match task {
            TaskId::Ner => SkillCorpus::Ner(&self.suite.ner),
            TaskId::Qtc => SkillCorpus::Qtc(&self.suite.qtc, mode),
            TaskId::Te => SkillCorpus::Te(&self.suite.te),
            TaskId::Ppdb => SkillCorpus::Ppdb(&self.suite.ppdb),
            TaskId::Rc => return Err(Error::Config("rc is not a skill task".into())),
        })
    }

    /// Trains all four skills concurrently (QTC in `mode`).
    pub fn train_skills(
        &self,
        dims: SkillDims,
        cfg: &SkillTrainConfig,
        mode: SupervisionMode,
    ) -> Result<BTreeMap<TaskId, TrainedSkill>> {
        let results: Vec<(TaskId, Result<TrainedSkill>)> = std::thread::scope(|s| {
            let handles: Vec<_> = TaskId::SKILLS
                .iter()
                .map(|&task| {
                    s.spawn(move || {
                        let run = self
                            .corpus(task, mode)
                            .and_then(|c| train_skill_corpus(c, &self.vocab, &self.emb, dims, cfg));
                        (task, run)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("skill thread panicked")).collect()
        });
        results.into_iter().map(|(t, r)| r.map(|v| (t, v))).collect()
    }

    /// Training inputs and dev set for the RC task.
    pub fn rc_data(&self) -> Result<(Vec<RcInput>, DevSet)> {
        rc_data(&self.suite.rc_train, &self.suite.rc_dev, &self.vocab, &self.emb)
    }
}

pub fn rc_data(train: &SquadFile, dev: &SquadFile, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<(Vec<RcInput>, DevSet)> {
    let (train_ex, dropped) = train.examples();
    if dropped > 0 {
        log::warn!("dropped {dropped} training questions whose answers do not align to tokens");
    }
    let (dev_ex, _) = dev.examples();
    Ok((RcInput::from_examples(&train_ex, vocab, emb)?, DevSet::new(dev_ex, vocab, emb)?))
}

/// Row labels and attached skills, in table order.
pub const TABLE_SETUPS: [(&str, &[TaskId]); 10] = [
    ("no skills", &[]),
    ("only PPDB", &[TaskId::Ppdb]),
    ("only TE", &[TaskId::Te]),
    ("only NER", &[TaskId::Ner]),
    ("only QC", &[TaskId::Qtc]),
    ("all skills", &[TaskId::Ner, TaskId::Qtc, TaskId::Te, TaskId::Ppdb]),
    ("all - QC", &[TaskId::Ner, TaskId::Te, TaskId::Ppdb]),
    ("all - NER", &[TaskId::Qtc, TaskId::Te, TaskId::Ppdb]),
    ("all - TE", &[TaskId::Ner, TaskId::Qtc, TaskId::Ppdb]),
    ("all - PPDB", &[TaskId::Ner, TaskId::Qtc, TaskId::Te]),
];

/// `base` with its skills replaced by pretrained checkpoints for `tasks`.
pub fn with_skills(
    base: &RcConfig,
    tasks: &[TaskId],
    checkpoints: &BTreeMap<TaskId, EncoderCheckpoint>,
    fine_tune: bool,
) -> Result<RcConfig> {
    let skills = tasks
        .iter()
        .map(|t| {
            let ck = checkpoints
                .get(t)
                .ok_or_else(|| Error::Config(format!("no checkpoint for skill {t}")))?;
            Ok(SkillSpec {
                task: *t,
                source: SkillSource::Loaded(Box::new(ck.clone())),
            })
        })
        .collect::<Result<_>>()?;
    Ok(RcConfig {
        skills,
        fine_tune_skills: fine_tune,
        ..base.clone()
    })
}

/// `base` with freshly initialized skills shaped like `checkpoints`.
pub fn with_random_skills(
    base: &RcConfig,
    tasks: &[TaskId],
    checkpoints: &BTreeMap<TaskId, EncoderCheckpoint>,
    fine_tune: bool,
) -> Result<RcConfig> {
    let mut cfg = with_skills(base, tasks, checkpoints, fine_tune)?;
    for s in &mut cfg.skills {
        let dims = checkpoints[&s.task].dims;
        s.source = SkillSource::Random {
            hidden: dims[1],
            labels: dims[2],
        };
    }
    Ok(cfg)
}

/// Result of one RC run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub config_id: String,
    pub width: usize,
    pub rows: Vec<MetricsRow>,
    pub model: RcModel,
}

impl RunResult {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }
}

pub fn run_rc(config: RcConfig, train: &[RcInput], dev: &DevSet, cfg: &RcTrainConfig) -> Result<RunResult> {
    let mut model = RcModel::new(config)?;
    let rows = train_rc(&mut model, train, dev, cfg)?;
    Ok(RunResult {
        config_id: cfg.config_id.clone(),
        width: model.ensemble_width(),
        rows,
        model,
    })
}

/// Runs independent jobs on up to `threads` workers, keeping input order.
pub fn run_parallel<T, F>(jobs: Vec<F>, threads: usize) -> Vec<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let threads = threads.max(1);
    let mut out: Vec<Option<T>> = (0..jobs.len()).map(|_| None).collect();
    let queue = std::sync::Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    let results = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let job = queue.lock().expect("queue lock").pop();
                let Some((i, f)) = job else { break };
                let r = f();
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.expect("every job ran")).collect()
}

pub fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub setup: String,
    pub fine_tune: bool,
    pub width: usize,
    pub f1: f64,
    pub em: f64,
    pub rows: Vec<MetricsRow>,
}

impl AblationRow {
    pub fn regime(&self) -> &'static str {
        if self.fine_tune {
            "fine-tune"
        } else {
            "no fine-tune"
        }
    }
}

/// Every table setup under fine-tuning and frozen skills: 20 runs in table
/// order, each setup followed by its two regimes.
pub fn run_ablation_suite(
    base: &RcConfig,
    checkpoints: &BTreeMap<TaskId, EncoderCheckpoint>,
    train: &[RcInput],
    dev: &DevSet,
    cfg: &RcTrainConfig,
    threads: usize,
) -> Result<Vec<AblationRow>> {
    let mut jobs = Vec::new();
    for (label, tasks) in TABLE_SETUPS {
        for fine_tune in [true, false] {
            let config = with_skills(base, tasks, checkpoints, fine_tune)?;
            let run_cfg = RcTrainConfig {
                config_id: format!("{}{}", label.replace(' ', ""), if fine_tune { "+ft" } else { "" }),
                ..cfg.clone()
            };
            jobs.push(move || {
                run_rc(config, train, dev, &run_cfg).map(|r| {
                    let last = r.last().cloned();
                    AblationRow {
                        setup: label.to_string(),
                        fine_tune,
                        width: r.width,
                        f1: last.as_ref().map_or(0.0, |l| l.f1),
                        em: last.as_ref().map_or(0.0, |l| l.em),
                        rows: r.rows,
                    }
                })
            });
        }
    }
    run_parallel(jobs, threads).into_iter().collect()
}

pub fn write_ablation_table<W: Write>(mut w: W, rows: &[AblationRow]) -> Result<()> {
    writeln!(w, "setup,regime,width,f1,em")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.6},{:.6}", r.setup, r.regime(), r.width, r.f1, r.em)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisionComparison {
    pub token: Vec<MetricsRow>,
    pub sentence: Vec<MetricsRow>,
    /// Mean dev F1 over rows within the first quarter of the budget.
    pub early_token_f1: f64,
    pub early_sentence_f1: f64,
}

impl SupervisionComparison {
    pub fn token_leads_early(&self) -> bool {
        self.early_token_f1 >= self.early_sentence_f1
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mode,{METRICS_HEADER}")?;
        for (mode, rows) in [("token", &self.token), ("sentence", &self.sentence)] {
            for r in rows {
                writeln!(w, "{mode},{}", r.csv_line())?;
            }
        }
        Ok(())
    }
}

/// Mean dev F1 of rows with `step <= budget / 4` (the first row if none).
pub fn early_mean_f1(rows: &[MetricsRow], budget: usize) -> f64 {
    let cutoff = budget / 4;
    let early: Vec<f64> = rows.iter().filter(|r| r.step <= cutoff).map(|r| r.f1).collect();
    match (early.is_empty(), rows.first()) {
        (false, _) => early.iter().sum::<f64>() / early.len() as f64,
        (true, Some(r)) => r.f1,
        (true, None) => 0.0,
    }
}

/// Trains RC twice with only a frozen QTC skill, once from each checkpoint.
pub fn compare_supervision(
    base: &RcConfig,
    token_ck: &EncoderCheckpoint,
    sentence_ck: &EncoderCheckpoint,
    train: &[RcInput],
    dev: &DevSet,
    cfg: &RcTrainConfig,
) -> Result<SupervisionComparison> {
    let arms = [(SupervisionMode::Token, token_ck), (SupervisionMode::Sentence, sentence_ck)];
    let mut jobs = Vec::new();
    for (mode, ck) in arms {
        ck.expect(TaskId::Qtc, None)?;
        if ck.meta("mode") != Some(mode.as_str()) {
            return Err(Error::Config(format!(
                "expected a {} checkpoint, found mode {:?}",
                mode.as_str(),
                ck.meta("mode")
            )));
        }
        let mut cks = BTreeMap::new();
        cks.insert(TaskId::Qtc, ck.clone());
        let config = with_skills(base, &[TaskId::Qtc], &cks, false)?;
        let run_cfg = RcTrainConfig {
            config_id: format!("qtc-{}", mode.as_str()),
            stop_at_f1: None,
            ..cfg.clone()
        };
        jobs.push(move || run_rc(config, train, dev, &run_cfg).map(|r| r.rows));
    }
    let mut results = run_parallel(jobs, 2).into_iter();
    let token = results.next().expect("two arms")?;
    let sentence = results.next().expect("two arms")?;
    Ok(SupervisionComparison {
        early_token_f1: early_mean_f1(&token, cfg.steps),
        early_sentence_f1: early_mean_f1(&sentence, cfg.steps),
        token,
        sentence,
    })
}

/// Where RC data and word vectors come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    Synthetic { seed: u64, size: SizeSpec },
    Files {
        train: PathBuf,
        dev: PathBuf,
        /// Pretrained vectors; seeded random vectors when absent.
        embeddings: Option<PathBuf>,
    },
}

/// Everything needed to reproduce one RC run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub rc: RcConfig,
    pub train: RcTrainConfig,
    pub data: DataSpec,
    /// Percentage of training paragraphs kept.
    pub pct: f64,
    pub sample_seed: u64,
    pub embed_seed: u64,
}

fn source_str(s: &SkillSource) -> String {
    match s {
        SkillSource::Checkpoint(p) => format!("checkpoint:{}", p.display()),
        SkillSource::Loaded(ck) => format!("loaded:{}", bytes_sha256(&ck.to_bytes())),
        SkillSource::Random { hidden, labels } => format!("random:{hidden},{labels}"),
    }
}

fn parse_source(s: &str) -> Result<SkillSource> {
    if let Some(p) = s.strip_prefix("checkpoint:") {
        return Ok(SkillSource::Checkpoint(PathBuf::from(p)));
    }
    if let Some(rest) = s.strip_prefix("random:") {
        if let Some((h, l)) = rest.split_once(',') {
            if let (Ok(hidden), Ok(labels)) = (h.parse(), l.parse()) {
                return Ok(SkillSource::Random { hidden, labels });
            }
        }
    }
    Err(Error::Config(format!("skill source {s:?} cannot be rebuilt from a manifest")))
}

impl ExperimentConfig {
    pub fn to_manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        let rc = &self.rc;
        let names: Vec<&str> = rc.skills.iter().map(|s| s.task.as_str()).collect();
        m.set("rc.skills", names.join(","))
            .set("rc.fine_tune_skills", rc.fine_tune_skills)
            .set("rc.input_dim", rc.input_dim)
            .set("rc.hidden", rc.hidden)
            .set("rc.adapt", rc.adapt)
            .set("rc.max_span_len", rc.max_span_len)
            .set("rc.seed", rc.seed);
        for s in &rc.skills {
            m.set(format!("skill.{}", s.task), source_str(&s.source));
            if let SkillSource::Checkpoint(p) = &s.source {
                if let Ok(h) = file_sha256(p) {
                    m.set(format!("skill.{}.sha256", s.task), h);
                }
            }
        }
        let t = &self.train;
        m.set("train.steps", t.steps)
            .set("train.eval_every", t.eval_every)
            .set("train.lr", t.lr)
            .set("train.clip_norm", t.clip_norm.map_or("none".to_string(), |c| c.to_string()))
            .set("train.seed", t.seed)
            .set("train.config_id", &t.config_id)
            .set("train.stop_at_f1", t.stop_at_f1.map_or("none".to_string(), |c| c.to_string()))
            .set("data.pct", self.pct)
            .set("data.sample_seed", self.sample_seed)
            .set("embed.seed", self.embed_seed);
        match &self.data {
            DataSpec::Synthetic { seed, size } => {
                m.set("data.kind", "synthetic")
                    .set("data.seed", seed)
                    .set("data.vocab", size.vocab)
                    .set("data.sentences_per_task", size.sentences_per_task)
                    .set("data.paragraphs", size.paragraphs)
                    .set("data.dev_paragraphs", size.dev_paragraphs)
                    .set("data.questions_per_paragraph", size.questions_per_paragraph);
            }
            DataSpec::Files { train, dev, embeddings } => {
                m.set("data.kind", "files")
                    .set("data.train", train.display())
                    .set("data.dev", dev.display());
                for (k, p) in [("data.train.sha256", train), ("data.dev.sha256", dev)] {
                    if let Ok(h) = file_sha256(p) {
                        m.set(k, h);
                    }
                }
                if let Some(e) = embeddings {
                    m.set("data.embeddings", e.display());
                }
            }
        }
        m
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let opt = |k: &str| -> Result<Option<f64>> {
            match m.require(k)? {
                "none" => Ok(None),
                v => v.parse().map(Some).map_err(|_| Error::Config(format!("bad value for {k}"))),
            }
        };
        let names = m.require("rc.skills")?;
        let mut skills = Vec::new();
        for name in names.split(',').filter(|s| !s.is_empty()) {
            let task: TaskId = name.parse()?;
            skills.push(SkillSpec {
                task,
                source: parse_source(m.require(&format!("skill.{task}"))?)?,
            });
        }
        let rc = RcConfig {
            skills,
            fine_tune_skills: m.parse("rc.fine_tune_skills")?,
            input_dim: m.parse("rc.input_dim")?,
            hidden: m.parse("rc.hidden")?,
            adapt: m.parse("rc.adapt")?,
            max_span_len: m.parse("rc.max_span_len")?,
            seed: m.parse("rc.seed")?,
            vocab_hash: None,
        };
        let train = RcTrainConfig {
            steps: m.parse("train.steps")?,
            eval_every: m.parse("train.eval_every")?,
            lr: m.parse("train.lr")?,
            clip_norm: opt("train.clip_norm")?,
            seed: m.parse("train.seed")?,
            config_id: m.require("train.config_id")?.to_string(),
            stop_at_f1: opt("train.stop_at_f1")?,
        };
        let data = match m.require("data.kind")? {
            "synthetic" => DataSpec::Synthetic {
                seed: m.parse("data.seed")?,
                size: SizeSpec {
                    vocab: m.parse("data.vocab")?,
                    sentences_per_task: m.parse("data.sentences_per_task")?,
                    paragraphs: m.parse("data.paragraphs")?,
                    dev_paragraphs: m.parse("data.dev_paragraphs")?,
                    questions_per_paragraph: m.parse("data.questions_per_paragraph")?,
                },
            },
            "files" => DataSpec::Files {
                train: m.require("data.train")?.into(),
                dev: m.require("data.dev")?.into(),
                embeddings: m.get("data.embeddings").map(PathBuf::from),
            },
            other => return Err(Error::Config(format!("unknown data kind {other}"))),
        };
        Ok(ExperimentConfig {
            rc,
            train,
            data,
            pct: m.parse("data.pct")?,
            sample_seed: m.parse("data.sample_seed")?,
            embed_seed: m.parse("embed.seed")?,
        })
    }
}

/// Resolved vocabulary, vectors and RC splits of an experiment.
pub struct PreparedData {
    pub vocab: Vocabulary,
    pub emb: EmbeddingMatrix,
    pub train_file: SquadFile,
    pub train: Vec<RcInput>,
    pub dev: DevSet,
    /// Share of vocabulary covered by the pretrained vector file, if any.
    pub coverage: Option<usize>,
}

fn squad_vocab(files: &[&SquadFile]) -> Vocabulary {
    let mut v = Vocabulary::new();
    for f in files {
        let (examples, _) = f.examples();
        for e in &examples {
            for w in e.doc_words() {
                v.add(w);
            }
            for w in &e.question {
                v.add(w);
            }
        }
    }
    v
}

impl ExperimentConfig {
    pub fn prepare(&self) -> Result<PreparedData> {
        let (train_full, dev_file, vocab, emb, coverage) = match &self.data {
            DataSpec::Synthetic { seed, size } => {
                let suite = crate::data::gen_synthetic_suite(*seed, size)?;
                let vocab = Vocabulary::from_tokens(suite.vocabulary.iter());
                let emb = EmbeddingMatrix::random(&vocab, self.rc.input_dim, self.embed_seed);
                (suite.rc_train, suite.rc_dev, vocab, emb, None)
            }
            DataSpec::Files { train, dev, embeddings } => {
                let train = SquadFile::read(train)?;
                let dev = SquadFile::read(dev)?;
                let vocab = squad_vocab(&[&train, &dev]);
                let (emb, coverage) = match embeddings {
                    Some(p) => {
                        let (e, c) = load_embeddings(p, &vocab, self.embed_seed)?;
                        (e, Some(c))
                    }
                    None => (EmbeddingMatrix::random(&vocab, self.rc.input_dim, self.embed_seed), None),
                };
                (train, dev, vocab, emb, coverage)
            }
        };
        if emb.dim() != self.rc.input_dim {
            return Err(Error::Config(format!(
                "word vectors have width {}, model expects {}",
                emb.dim(),
                self.rc.input_dim
            )));
        }
        let train_file = if self.pct >= 100.0 {
            train_full
        } else {
            sample_squad(&train_full, self.pct, self.sample_seed)?
        };
        let (train, dev) = rc_data(&train_file, &dev_file, &vocab, &emb)?;
        Ok(PreparedData {
            vocab,
            emb,
            train_file,
            train,
            dev,
            coverage,
        })
    }

    /// Prepares data, trains, and evaluates the final model once more to
    /// collect predictions.
    pub fn run(&self) -> Result<(RunResult, Evaluation)> {
        let data = self.prepare()?;
        let result = run_rc(self.rc.clone(), &data.train, &data.dev, &self.train)?;
        let eval = evaluate_rc(&result.model, &data.dev)?;
        Ok((result, eval))
    }
}
