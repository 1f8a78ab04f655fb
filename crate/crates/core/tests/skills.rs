use skill_transfer::data::{gen_synthetic_suite, LabelSet, SizeSpec, PPDB_LABELS, QTC_LABELS, TE_LABELS};
use skill_transfer::embed::{EmbeddingMatrix, Vocabulary};
use skill_transfer::nn::{gradient_check, sample_coordinates, Graph, ParamStore, Tensor};
use skill_transfer::skills::*;
use skill_transfer::Error;

fn dims() -> SkillDims {
    SkillDims { input: 8, hidden: 6, head_hidden: 10 }
}

fn rows(t: usize, d: usize, seed: u64) -> Tensor {
    let data = (0..t * d).map(|i| (((i as u64 * 2654435761 + seed * 97) % 1000) as f64 / 500.0) - 1.0).collect();
    Tensor::matrix(t, d, data).unwrap()
}

fn setup() -> (Vocabulary, EmbeddingMatrix, skill_transfer::data::SyntheticSuite) {
    let suite = gen_synthetic_suite(3, &SizeSpec::tiny()).unwrap();
    let vocab = Vocabulary::from_tokens(suite.vocabulary.iter());
    let emb = EmbeddingMatrix::random(&vocab, 8, 11);
    (vocab, emb, suite)
}

#[test]
fn sequence_labeler_rows_are_distributions() {
    let labels = LabelSet::bio(["B-PER", "I-PER", "B-LOC"]).unwrap();
    let m = SequenceLabeler::new(dims(), labels, 0, 1).unwrap();
    let p = m.seq_label_forward(&rows(5, 8, 1)).unwrap();
    assert_eq!(p.shape(), &[5, m.labels.len()]);
    for r in 0..5 {
        let s: f64 = p.row(r).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_token_modes_agree() {
    let labels = LabelSet::new(QTC_LABELS).unwrap();
    let m = TokenSupervisedClassifier::new(dims(), labels, SupervisionMode::Token, 0, 2).unwrap();
    let x = rows(1, 8, 3);
    let a = m.token_supervised_classify(&x).unwrap();
    let b = m.sentence_pooled_classify(&x).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn token_mode_sums_per_token_logits() {
    // Oracle: run the labeler-style projection by hand on the encoder output.
    let labels = LabelSet::new(QTC_LABELS).unwrap();
    let m = TokenSupervisedClassifier::new(dims(), labels, SupervisionMode::Token, 0, 4).unwrap();
    let x = rows(4, 8, 5);
    let enc = m.encoder.bilstm;
    let c = skill_transfer::nn::bilstm_encode(&x, &m.store, &enc.fwd, &enc.bwd).unwrap();
    let proj = m.encoder.projection.unwrap();
    let logits = skill_transfer::nn::affine(&c, m.store.value(proj.w), m.store.value(proj.b)).unwrap();
    let mut summed = vec![0.0; logits.cols()];
    for r in 0..logits.rows() {
        for (s, v) in summed.iter_mut().zip(logits.row(r)) {
            *s += v;
        }
    }
    let expected = skill_transfer::nn::softmax(&summed).unwrap();
    let got = m.classify(&x).unwrap();
    for (u, v) in got.iter().zip(&expected) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn relation_head_input_structure() {
    let labels = LabelSet::new(TE_LABELS).unwrap();
    let m = RelationClassifier::new(TaskId::Te, dims(), labels, 0, 5).unwrap();
    let p = rows(3, 8, 6);
    let f = m.head_input(&p, &p).unwrap();
    let h = 2 * dims().hidden;
    assert_eq!(f.cols(), 4 * h);
    let d = f.data();
    assert_eq!(&d[..h], &d[h..2 * h]);
    assert!(d[2 * h..3 * h].iter().all(|v| *v == 0.0));
    for k in 0..h {
        assert!((d[3 * h + k] - d[k] * d[k]).abs() < 1e-15);
    }
    let probs = m.relation_classify(&p, &rows(2, 8, 7)).unwrap();
    assert_eq!(probs.len(), 3);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn relation_rejects_empty_argument() {
    let labels = LabelSet::new(PPDB_LABELS).unwrap();
    let m = RelationClassifier::new(TaskId::Ppdb, dims(), labels, 0, 5).unwrap();
    let empty = Tensor::new(vec![0, 8], vec![]).unwrap();
    assert!(matches!(m.relation_classify(&empty, &rows(2, 8, 1)), Err(Error::Contract(_))));
}

fn check_model<M: SkillModel>(model: &M, emb: &EmbeddingMatrix, ex: &SkillExample) {
    let forward = |store: &ParamStore| {
        let mut g = Graph::new();
        let loss = model.loss_with(store, &mut g, emb, ex)?;
        let grads = g.backward(loss)?;
        Ok((g.scalar(loss), grads))
    };
    let samples = sample_coordinates(model.store(), 120, 9);
    assert!(samples.len() >= 100);
    let err = gradient_check(model.store(), forward, &samples, 1e-5).unwrap();
    assert!(err < 1e-4, "{} max relative error {err}", model.task());
}

#[test]
fn gradients_match_finite_differences() {
    let (vocab, emb, _) = setup();
    let ids = vocab.lookup_all(&["Alice", "visited", "the", "city"]);
    let ner = SequenceLabeler::new(dims(), LabelSet::bio(["B-PER", "B-LOC"]).unwrap(), 0, 1).unwrap();
    check_model(&ner, &emb, &SkillExample::Sequence { ids: ids.clone(), tags: vec![1, 0, 0, 2] });
    for mode in [SupervisionMode::Token, SupervisionMode::Sentence] {
        let mut qtc = TokenSupervisedClassifier::new(dims(), LabelSet::new(QTC_LABELS).unwrap(), mode, 0, 2).unwrap();
        qtc.per_token_loss = mode == SupervisionMode::Token;
        check_model(&qtc, &emb, &SkillExample::Sentence { ids: ids.clone(), label: 3 });
    }
    let te = RelationClassifier::new(TaskId::Te, dims(), LabelSet::new(TE_LABELS).unwrap(), 0, 3).unwrap();
    check_model(&te, &emb, &SkillExample::Pair { premise: ids.clone(), hypothesis: ids[1..].to_vec(), label: 2 });
}

#[test]
fn training_reduces_loss_and_is_deterministic() {
    let (vocab, emb, suite) = setup();
    let labels = LabelSet::new(QTC_LABELS).unwrap();
    let data = sentence_examples(&suite.qtc, &vocab, &labels).unwrap();
    let cfg = SkillTrainConfig { epochs: 3, lr: 5e-3, seed: 4, ..Default::default() };
    let run = || {
        let mut m = TokenSupervisedClassifier::new(dims(), labels.clone(), SupervisionMode::Token, vocab.hash(), 7).unwrap();
        let log = train_skill(&mut m, &data, &emb, &cfg).unwrap();
        (m, log)
    };
    let (a, log) = run();
    let (b, _) = run();
    assert!(log.last().unwrap().mean_loss < log[0].mean_loss);
    for id in a.store.ids() {
        assert_eq!(a.store.digest(id), b.store.digest(id));
    }
}

#[test]
fn empty_dataset_is_data_error() {
    let (_, emb, _) = setup();
    let mut m = SequenceLabeler::new(dims(), LabelSet::bio(["B-PER"]).unwrap(), 0, 1).unwrap();
    assert!(matches!(train_skill(&mut m, &[], &emb, &SkillTrainConfig::default()), Err(Error::Data(_))));
}

#[test]
fn out_of_range_label_is_data_error() {
    let (_, emb, _) = setup();
    let mut m = SequenceLabeler::new(dims(), LabelSet::bio(["B-PER"]).unwrap(), 0, 1).unwrap();
    let bad = [SkillExample::Sequence { ids: vec![1, 2], tags: vec![0, 9] }];
    assert!(matches!(train_skill(&mut m, &bad, &emb, &SkillTrainConfig::default()), Err(Error::Data(_))));
    let labels = LabelSet::new(TE_LABELS).unwrap();
    let pair = skill_transfer::data::LabeledPair {
        premise: vec!["a".into()],
        hypothesis: vec!["b".into()],
        label: "maybe".into(),
    };
    assert!(pair_examples(&[pair], &Vocabulary::new(), &labels).is_err());
}

#[test]
fn checkpoint_round_trip_preserves_transfer_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ner.ckpt");
    let m = SequenceLabeler::new(dims(), LabelSet::bio(["B-PER", "B-LOC"]).unwrap(), 42, 5).unwrap();
    m.checkpoint().save(&path).unwrap();
    let ck = EncoderCheckpoint::load_expecting(&path, TaskId::Ner, Some([8, 6, 5])).unwrap();
    assert_eq!(ck.vocab_hash, 42);

    let mut store = ParamStore::new();
    ck.install(&mut store, "ner.", false).unwrap();
    let enc = SkillEncoder::find(&store, "ner", TaskId::Ner).unwrap();
    let x = rows(4, 8, 2);
    let out = |s: &ParamStore, e: &SkillEncoder| {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let v = e.transfer(&mut g, s, xv).unwrap();
        g.value(v).clone()
    };
    let a = out(&m.store, &m.encoder);
    let b = out(&store, &enc);
    assert_eq!(a.shape(), &[4, 12 + 5]);
    assert_eq!(a.data(), b.data());
    assert!(matches!(
        EncoderCheckpoint::load_expecting(&path, TaskId::Qtc, None),
        Err(Error::Checkpoint(_))
    ));
}

#[test]
fn qtc_checkpoint_records_mode() {
    let m = TokenSupervisedClassifier::new(dims(), LabelSet::new(QTC_LABELS).unwrap(), SupervisionMode::Sentence, 0, 1)
        .unwrap();
    let ck = EncoderCheckpoint::from_bytes(&m.checkpoint().to_bytes()).unwrap();
    assert_eq!(ck.meta("mode"), Some("sentence"));
    assert_eq!(ck.dims, [8, 6, 6]);
}
