use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skill_transfer::data::{
    gen_synthetic_suite, read_conll_ner, read_pairs, read_trec_qc, sample_squad, LabelSet, SizeSpec, SquadFile,
    PPDB_LABELS, TE_LABELS,
};
use skill_transfer::embed::{load_embeddings, EmbeddingMatrix, Vocabulary};
use skill_transfer::harness::{
    available_threads, file_sha256, run_ablation_suite, score_predictions, write_ablation_table, write_metrics_csv,
    DataSpec, ExperimentConfig, Manifest, RcTrainConfig, SkillCorpus,
};
use skill_transfer::rc::{RcConfig, SkillSource, SkillSpec, DEFAULT_MAX_SPAN_LEN};
use skill_transfer::skills::{EncoderCheckpoint, SkillDims, SkillTrainConfig, SupervisionMode, TaskId};

/// Skill-transfer reading comprehension: train skill encoders, attach them
/// to a span-extraction model, and evaluate.
#[derive(Parser, Debug)]
#[command(name = "skill-transfer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic suite (skill corpora plus RC train/dev files).
    GenSynthetic(GenArgs),
    /// Train one skill model and save its encoder checkpoint.
    TrainSkill(TrainSkillArgs),
    /// Train the reading comprehension model.
    TrainRc(TrainRcArgs),
    /// Run every skill setup under fine-tuning and frozen skills.
    Ablate(AblateArgs),
    /// Score a predictions file against a SQuAD-format dev file.
    Eval(EvalArgs),
    /// Keep a seeded percentage of a SQuAD file's paragraphs.
    SampleFraction(SampleArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the small test-sized preset.
    #[arg(long)]
    tiny: bool,
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    sentences: Option<usize>,
    #[arg(long)]
    paragraphs: Option<usize>,
    #[arg(long)]
    dev_paragraphs: Option<usize>,
    #[arg(long)]
    questions: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct EmbedArgs {
    /// Word vectors in text format (`word v1 ... vd`); seeded random vectors otherwise.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Word vector width when no file is given.
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    embed_seed: u64,
}

#[derive(Args, Debug)]
struct TrainSkillArgs {
    #[arg(long, value_parser = parse_task)]
    task: TaskId,
    #[arg(long, value_parser = parse_mode, default_value = "token")]
    mode: SupervisionMode,
    /// Training corpus in the task's format.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    embed: EmbedArgs,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 256)]
    head_hidden: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add per-token loss terms for QTC.
    #[arg(long)]
    per_token_loss: bool,
}

#[derive(Args, Debug, Clone)]
struct RcArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[command(flatten)]
    embed: EmbedArgs,
    /// Directory holding `<task>.ckpt` skill checkpoints.
    #[arg(long, default_value = ".")]
    skill_dir: PathBuf,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 100)]
    adapt: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SPAN_LEN)]
    max_span_len: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 100)]
    eval_every: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Percentage of training paragraphs to keep.
    #[arg(long, default_value_t = 100.0)]
    pct: f64,
    #[arg(long, default_value_t = 0)]
    sample_seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainRcArgs {
    #[command(flatten)]
    rc: RcArgs,
    /// Comma-separated skills to attach (ner, qtc, te, ppdb).
    #[arg(long, value_delimiter = ',', value_parser = parse_task)]
    skills: Vec<TaskId>,
    /// Keep skill encoders fixed (the default).
    #[arg(long, conflicts_with = "fine_tune")]
    freeze: bool,
    /// Update skill encoders during RC training.
    #[arg(long)]
    fine_tune: bool,
    /// Replace the attached skills with freshly initialized encoders of the same shapes.
    #[arg(long)]
    random_skills: bool,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    rc: RcArgs,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// SQuAD-format file with gold answers.
    #[arg(long)]
    data: PathBuf,
    /// JSON object mapping question id to predicted answer.
    #[arg(long)]
    predictions: PathBuf,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    pct: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_task(s: &str) -> std::result::Result<TaskId, String> {
    match s.parse::<TaskId>() {
        Ok(TaskId::Rc) | Err(_) => Err(format!("expected one of ner, qtc, te, ppdb; got {s}")),
        Ok(t) => Ok(t),
    }
}

fn parse_mode(s: &str) -> std::result::Result<SupervisionMode, String> {
    s.parse().map_err(|_| format!("expected token or sentence; got {s}"))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    out.with_file_name(name)
}

fn word_vectors(args: &EmbedArgs, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
    match &args.embeddings {
        Some(p) => {
            let (emb, covered) =
                load_embeddings(p, vocab, args.embed_seed).with_context(|| format!("reading {}", p.display()))?;
            log::info!("{covered} of {} vocabulary entries found in {}", vocab.len(), p.display());
            Ok(emb)
        }
        None => Ok(EmbeddingMatrix::random(vocab, args.dim, args.embed_seed)),
    }
}

fn embed_manifest(m: &mut Manifest, args: &EmbedArgs, dim: usize) -> Result<()> {
    m.set("embed.dim", dim).set("embed.seed", args.embed_seed);
    if let Some(p) = &args.embeddings {
        m.set("embed.file", p.display()).set("embed.sha256", file_sha256(p)?);
    }
    Ok(())
}

fn gen_synthetic(a: GenArgs) -> Result<()> {
    let mut size = if a.tiny { SizeSpec::tiny() } else { SizeSpec::default() };
    size.vocab = a.vocab.unwrap_or(size.vocab);
    size.sentences_per_task = a.sentences.unwrap_or(size.sentences_per_task);
    size.paragraphs = a.paragraphs.unwrap_or(size.paragraphs);
    size.dev_paragraphs = a.dev_paragraphs.unwrap_or(size.dev_paragraphs);
    size.questions_per_paragraph = a.questions.unwrap_or(size.questions_per_paragraph);
    let suite = gen_synthetic_suite(a.seed, &size)?;
    suite.write_dir(&a.out)?;
    let mut m = Manifest::new();
    m.set("command", "gen-synthetic")
        .set("seed", a.seed)
        .set("vocab", size.vocab)
        .set("sentences_per_task", size.sentences_per_task)
        .set("paragraphs", size.paragraphs)
        .set("dev_paragraphs", size.dev_paragraphs)
        .set("questions_per_paragraph", size.questions_per_paragraph);
    m.write(&a.out.join("manifest.txt"))?;
    println!(
        "wrote synthetic suite to {} ({} train / {} dev questions)",
        a.out.display(),
        suite.rc_train.num_questions(),
        suite.rc_dev.num_questions()
    );
    Ok(())
}

fn train_skill_cmd(a: TrainSkillArgs) -> Result<()> {
    let read = || format!("reading {}", a.data.display());
    let (tokens, corpus_holder): (Vec<String>, Corpus) = match a.task {
        TaskId::Ner => {
            let (seqs, repairs) = read_conll_ner(&a.data).with_context(read)?;
            if repairs > 0 {
                log::warn!("repaired {repairs} BIO tags");
            }
            (seqs.iter().flat_map(|s| s.tokens.clone()).collect(), Corpus::Ner(seqs))
        }
        TaskId::Qtc => {
            let sents = read_trec_qc(&a.data).with_context(read)?;
            (sents.iter().flat_map(|s| s.tokens.clone()).collect(), Corpus::Qtc(sents))
        }
        TaskId::Te | TaskId::Ppdb => {
            let names: &[&str] = if a.task == TaskId::Te { &TE_LABELS } else { &PPDB_LABELS };
            let pairs = read_pairs(&a.data, &LabelSet::new(names.iter().copied())?).with_context(read)?;
            let toks = pairs.iter().flat_map(|p| p.premise.iter().chain(&p.hypothesis).cloned()).collect();
            (toks, Corpus::Pairs(pairs))
        }
        TaskId::Rc => bail!("rc is not a skill task"),
    };
    let vocab = Vocabulary::from_tokens(tokens.iter());
    let emb = word_vectors(&a.embed, &vocab)?;
    let corpus = match &corpus_holder {
        Corpus::Ner(s) => SkillCorpus::Ner(s),
        Corpus::Qtc(s) => SkillCorpus::Qtc(s, a.mode),
        Corpus::Pairs(p) if a.task == TaskId::Te => SkillCorpus::Te(p),
        Corpus::Pairs(p) => SkillCorpus::Ppdb(p),
    };
    let dims = SkillDims {
        input: emb.dim(),
        hidden: a.hidden,
        head_hidden: a.head_hidden,
    };
    let cfg = SkillTrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        seed: a.seed,
        ..Default::default()
    };
    let trained = if a.per_token_loss && a.task == TaskId::Qtc {
        train_qtc_per_token(&corpus_holder, a.mode, &vocab, &emb, dims, &cfg)?
    } else {
        skill_transfer::harness::train_skill_corpus(corpus, &vocab, &emb, dims, &cfg)?
    };
    trained.checkpoint.save(&a.out)?;
    let last = trained.log.last();
    let mut m = Manifest::new();
    m.set("command", "train-skill")
        .set("task", a.task)
        .set("mode", a.mode.as_str())
        .set("per_token_loss", a.per_token_loss)
        .set("data", a.data.display())
        .set("data.sha256", file_sha256(&a.data)?)
        .set("hidden", a.hidden)
        .set("head_hidden", a.head_hidden)
        .set("epochs", a.epochs)
        .set("lr", a.lr)
        .set("seed", a.seed)
        .set("vocab.hash", vocab.hash())
        .set("final.loss", last.map_or(f64::NAN, |l| l.mean_loss))
        .set("final.accuracy", last.map_or(f64::NAN, |l| l.accuracy));
    embed_manifest(&mut m, &a.embed, emb.dim())?;
    m.write(&manifest_path(&a.out))?;
    for l in &trained.log {
        println!("epoch {} loss {:.4} accuracy {:.4}", l.epoch, l.mean_loss, l.accuracy);
    }
    println!("saved {} checkpoint to {}", a.task, a.out.display());
    Ok(())
}

enum Corpus {
    Ner(Vec<skill_transfer::data::LabeledSequence>),
    Qtc(Vec<skill_transfer::data::LabeledSentence>),
    Pairs(Vec<skill_transfer::data::LabeledPair>),
}

fn train_qtc_per_token(
    corpus: &Corpus,
    mode: SupervisionMode,
    vocab: &Vocabulary,
    emb: &EmbeddingMatrix,
    dims: SkillDims,
    cfg: &SkillTrainConfig,
) -> Result<skill_transfer::harness::TrainedSkill> {
    use skill_transfer::skills::{sentence_examples, train_skill, SkillModel, TokenSupervisedClassifier};
    let Corpus::Qtc(sents) = corpus else { bail!("per-token loss applies to qtc only") };
    let labels = LabelSet::observed(sents.iter().map(|s| s.label.as_str()))?;
    let data = sentence_examples(sents, vocab, &labels)?;
    let mut model = TokenSupervisedClassifier::new(dims, labels, mode, vocab.hash(), cfg.seed)?;
    model.per_token_loss = true;
    let log = train_skill(&mut model, &data, emb, cfg)?;
    Ok(skill_transfer::harness::TrainedSkill {
        checkpoint: model.checkpoint(),
        log,
    })
}

fn experiment(a: &RcArgs, rc: RcConfig, config_id: &str) -> ExperimentConfig {
    ExperimentConfig {
        rc,
        train: RcTrainConfig {
            steps: a.steps,
            eval_every: a.eval_every,
            lr: a.lr,
            seed: a.seed,
            config_id: config_id.to_string(),
            ..Default::default()
        },
        data: DataSpec::Files {
            train: a.train.clone(),
            dev: a.dev.clone(),
            embeddings: a.embed.embeddings.clone(),
        },
        pct: a.pct,
        sample_seed: a.sample_seed,
        embed_seed: a.embed.embed_seed,
    }
}

fn embedding_width(a: &EmbedArgs) -> Result<usize> {
    let Some(p) = &a.embeddings else { return Ok(a.dim) };
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).context("empty embeddings file")?;
    Ok(first.split_whitespace().count() - 1)
}

fn base_config(a: &RcArgs) -> Result<RcConfig> {
    Ok(RcConfig {
        skills: Vec::new(),
        fine_tune_skills: false,
        input_dim: embedding_width(&a.embed)?,
        hidden: a.hidden,
        adapt: a.adapt,
        max_span_len: a.max_span_len,
        seed: a.seed,
        vocab_hash: None,
    })
}

fn skill_path(dir: &Path, task: TaskId) -> PathBuf {
    dir.join(format!("{task}.ckpt"))
}

fn write_predictions(path: &Path, value: &BTreeMap<String, String>) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

fn train_rc_cmd(a: TrainRcArgs) -> Result<()> {
    let mut rc = base_config(&a.rc)?;
    rc.fine_tune_skills = a.fine_tune;
    for &task in &a.skills {
        let path = skill_path(&a.rc.skill_dir, task);
        let source = if a.random_skills {
            let ck = EncoderCheckpoint::load(&path).with_context(|| format!("reading {}", path.display()))?;
            SkillSource::Random {
                hidden: ck.dims[1],
                labels: ck.dims[2],
            }
        } else {
            SkillSource::Checkpoint(path)
        };
        rc.skills.push(SkillSpec { task, source });
    }
    let names: Vec<&str> = a.skills.iter().map(|t| t.as_str()).collect();
    let id = if names.is_empty() { "no-skills".to_string() } else { names.join("+") };
    let exp = experiment(&a.rc, rc, &id);
    std::fs::create_dir_all(&a.rc.out)?;
    let mut manifest = exp.to_manifest();
    manifest.set("command", "train-rc");
    embed_manifest(&mut manifest, &a.rc.embed, exp.rc.input_dim)?;
    manifest.write(&a.rc.out.join("manifest.txt"))?;

    let (result, eval) = exp.run()?;
    write_metrics_csv(BufWriter::new(File::create(a.rc.out.join("metrics.csv"))?), &result.rows)?;
    result.model.save(&a.rc.out.join("model.ckpt"))?;
    write_predictions(&a.rc.out.join("predictions.json"), &eval.predictions)?;
    println!(
        "{id}: width {} dev em {:.4} f1 {:.4} after {} steps",
        result.width,
        eval.em,
        eval.f1,
        result.rows.last().map_or(0, |r| r.step)
    );
    Ok(())
}

fn ablate_cmd(a: AblateArgs) -> Result<()> {
    let base = base_config(&a.rc)?;
    let mut checkpoints = BTreeMap::new();
    for task in TaskId::SKILLS {
        let path = skill_path(&a.rc.skill_dir, task);
        let ck = EncoderCheckpoint::load_expecting(&path, task, None)
            .with_context(|| format!("reading {}", path.display()))?;
        checkpoints.insert(task, ck);
    }
    let exp = experiment(&a.rc, base.clone(), "ablation");
    let data = exp.prepare()?;
    std::fs::create_dir_all(&a.rc.out)?;
    let mut manifest = exp.to_manifest();
    manifest.set("command", "ablate");
    for task in TaskId::SKILLS {
        manifest.set(format!("skill.{task}.sha256"), file_sha256(&skill_path(&a.rc.skill_dir, task))?);
    }
    embed_manifest(&mut manifest, &a.rc.embed, base.input_dim)?;
    manifest.write(&a.rc.out.join("manifest.txt"))?;

    let threads = a.threads.unwrap_or_else(available_threads);
    let rows = run_ablation_suite(&base, &checkpoints, &data.train, &data.dev, &exp.train, threads)?;
    write_ablation_table(BufWriter::new(File::create(a.rc.out.join("ablation.csv"))?), &rows)?;
    let all: Vec<_> = rows.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_metrics_csv(BufWriter::new(File::create(a.rc.out.join("metrics.csv"))?), &all)?;
    for r in &rows {
        println!("{:<12} {:<13} width {:>4}  f1 {:.4}  em {:.4}", r.setup, r.regime(), r.width, r.f1, r.em);
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let squad = SquadFile::read(&a.data)?;
    let golds: Vec<(String, Vec<String>)> = squad
        .data
        .iter()
        .flat_map(|art| &art.paragraphs)
        .flat_map(|p| &p.qas)
        .map(|q| (q.id.clone(), q.answers.iter().map(|x| x.text.clone()).collect()))
        .collect();
    let text = std::fs::read_to_string(&a.predictions)
        .with_context(|| format!("reading {}", a.predictions.display()))?;
    let predictions: HashMap<String, String> = serde_json::from_str(&text).context("predictions must map ids to strings")?;
    let (em, f1) = score_predictions(&predictions, &golds)?;
    println!("em={em:.6} f1={f1:.6} questions={}", golds.len());
    Ok(())
}

fn sample_cmd(a: SampleArgs) -> Result<()> {
    let squad = SquadFile::read(&a.input)?;
    let sampled = sample_squad(&squad, a.pct, a.seed)?;
    sampled.write(BufWriter::new(File::create(&a.output)?))?;
    let mut m = Manifest::new();
    m.set("command", "sample-fraction")
        .set("input", a.input.display())
        .set("input.sha256", file_sha256(&a.input)?)
        .set("pct", a.pct)
        .set("seed", a.seed)
        .set("paragraphs", sampled.num_paragraphs())
        .set("questions", sampled.num_questions());
    m.write(&manifest_path(&a.output))?;
    println!(
        "kept {} of {} paragraphs ({} questions)",
        sampled.num_paragraphs(),
        squad.num_paragraphs(),
        sampled.num_questions()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::TrainSkill(a) => train_skill_cmd(a),
        Command::TrainRc(a) => train_rc_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::SampleFraction(a) => sample_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
