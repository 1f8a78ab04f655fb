use std::collections::BTreeMap;

use proptest::prelude::*;
use skill_transfer::nn::{gradient_check, sample_coordinates, Graph, Tensor};
use skill_transfer::rc::*;
use skill_transfer::skills::{EncoderCheckpoint, SequenceLabeler, SkillDims, SkillModel, TaskId};
use skill_transfer::data::LabelSet;
use skill_transfer::Error;

const D: usize = 6;

fn toy_config(skills: &[(TaskId, usize)]) -> RcConfig {
    RcConfig {
        skills: skills
            .iter()
            .map(|&(task, labels)| SkillSpec {
                task,
                source: SkillSource::Random { hidden: 5, labels },
            })
            .collect(),
        fine_tune_skills: true,
        input_dim: D,
        hidden: 8,
        adapt: 4,
        max_span_len: 15,
        seed: 3,
        vocab_hash: None,
    }
}

fn toy_input(t: usize, m: usize, span: (usize, usize)) -> RcInput {
    let val = |i: usize, salt: usize| ((i * 7919 + salt * 104729) % 2000) as f64 / 1000.0 - 1.0;
    let rows = |n: usize, salt: usize| {
        let words = Tensor::matrix(n, D, (0..n * D).map(|i| val(i, salt)).collect()).unwrap();
        let mut full = Vec::new();
        for r in 0..n {
            full.extend_from_slice(words.row(r));
            full.extend([val(r, salt + 5).abs(), (r % 2) as f64]);
        }
        (Tensor::matrix(n, D + 2, full).unwrap(), words)
    };
    let (doc, doc_words) = rows(t, 1);
    let (question, question_words) = rows(m, 2);
    RcInput {
        id: "q".into(),
        doc,
        question,
        doc_words,
        question_words,
        span,
    }
}

#[test]
fn full_model_gradient_check() {
    let model = RcModel::new(toy_config(&[(TaskId::Ner, 3), (TaskId::Te, 0)])).unwrap();
    let input = toy_input(5, 3, (1, 3));
    let forward = |store: &skill_transfer::nn::ParamStore| {
        let mut g = Graph::new();
        let l = model.loss_with(store, &mut g, &input)?;
        let grads = g.backward(l)?;
        Ok((g.scalar(l), grads))
    };
    let samples = sample_coordinates(&model.store, 200, 1);
    assert!(samples.len() >= 100);
    let err = gradient_check(&model.store, forward, &samples, 1e-5).unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn ensemble_width_for_every_subset() {
    for mask in 0..16u32 {
        let skills: Vec<(TaskId, usize)> = TaskId::SKILLS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| (*t, if t.has_label_output() { 4 } else { 0 }))
            .collect();
        let model = RcModel::new(toy_config(&skills)).unwrap();
        let mut g = Graph::new();
        let (e_d, e_q) = model.ensemble_encode(&model.store, &mut g, &toy_input(4, 2, (0, 0))).unwrap();
        let expected = 16 + 4 * skills.len();
        assert_eq!(model.ensemble_width(), expected);
        assert_eq!(g.value(e_d).cols(), expected);
        assert_eq!(g.value(e_q).cols(), expected);
    }
}

#[test]
fn attaching_skills_keeps_rc_block() {
    let input = toy_input(4, 3, (0, 1));
    let rc_block = |cfg: RcConfig| {
        let model = RcModel::new(cfg).unwrap();
        let mut g = Graph::new();
        let (e_d, _) = model.ensemble_encode(&model.store, &mut g, &input).unwrap();
        let v = g.value(e_d);
        (0..v.rows()).flat_map(|r| v.row(r)[..16].to_vec()).collect::<Vec<f64>>()
    };
    let bare = rc_block(toy_config(&[]));
    let with = rc_block(toy_config(&[(TaskId::Qtc, 6), (TaskId::Ppdb, 0)]));
    assert_eq!(bare, with);
}

#[test]
fn blocks_follow_fixed_skill_order() {
    let model = RcModel::new(toy_config(&[(TaskId::Ppdb, 0), (TaskId::Ner, 2), (TaskId::Te, 0)])).unwrap();
    let order: Vec<TaskId> = model.skills.iter().map(|s| s.task).collect();
    assert_eq!(order, [TaskId::Ner, TaskId::Te, TaskId::Ppdb]);
}

#[test]
fn zero_heads_give_uniform_loss() {
    let mut model = RcModel::new(toy_config(&[(TaskId::Ner, 3)])).unwrap();
    for p in [model.start_out.w, model.start_out.b, model.end_out.w, model.end_out.b] {
        let shape = model.store.value(p).shape().to_vec();
        model.store.set_value(p, Tensor::zeros(&shape)).unwrap();
    }
    let t = 7;
    let loss = model.rc_forward_loss(&toy_input(t, 2, (2, 4))).unwrap();
    assert!((loss - 2.0 * (t as f64).ln()).abs() < 1e-12);
}

#[test]
fn single_token_document() {
    let model = RcModel::new(toy_config(&[])).unwrap();
    let p = model.predict_span(&toy_input(1, 2, (0, 0))).unwrap();
    assert_eq!(p.start, vec![1.0]);
    assert_eq!(p.end, vec![1.0]);
    assert_eq!(p.span, (0, 0));
}

#[test]
fn predictions_are_distributions_within_length_cap() {
    let mut cfg = toy_config(&[(TaskId::Te, 0)]);
    cfg.max_span_len = 2;
    let model = RcModel::new(cfg).unwrap();
    let p = model.predict_span(&toy_input(9, 3, (0, 0))).unwrap();
    for d in [&p.start, &p.end] {
        assert_eq!(d.len(), 9);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let (i, j) = p.span;
    assert!(i <= j && j - i < 2);
    assert_eq!(p.score, p.start[i] * p.end[j]);
}

#[test]
fn invalid_gold_spans_are_data_errors() {
    let model = RcModel::new(toy_config(&[])).unwrap();
    assert!(matches!(model.rc_forward_loss(&toy_input(4, 2, (2, 1))), Err(Error::Data(_))));
    assert!(matches!(model.rc_forward_loss(&toy_input(4, 2, (1, 4))), Err(Error::Data(_))));
}

#[test]
fn empty_question_is_contract_error() {
    let model = RcModel::new(toy_config(&[])).unwrap();
    let mut input = toy_input(3, 1, (0, 0));
    input.question = Tensor::new(vec![0, D + 2], vec![]).unwrap();
    input.question_words = Tensor::new(vec![0, D], vec![]).unwrap();
    assert!(matches!(model.predict_span(&input), Err(Error::Contract(_))));
}

#[test]
fn skill_checkpoints_load_into_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelSet::bio(["B-PER", "B-LOC"]).unwrap();
    let ner = SequenceLabeler::new(SkillDims { input: D, hidden: 5, head_hidden: 4 }, labels, 9, 4).unwrap();
    let path = dir.path().join("ner.ckpt");
    ner.checkpoint().save(&path).unwrap();

    let mut cfg = toy_config(&[]);
    cfg.skills.push(SkillSpec {
        task: TaskId::Ner,
        source: SkillSource::Checkpoint(path.clone()),
    });
    cfg.fine_tune_skills = false;
    let model = RcModel::new(cfg.clone()).unwrap();
    let skill = &model.skills[0];
    for (a, b) in skill.encoder.params().iter().zip(ner.encoder.params()) {
        assert_eq!(model.store.value(*a), ner.store.value(b));
        assert!(!model.store.is_trainable(*a));
    }
    assert!(model.store.is_trainable(skill.adapter.w));

    cfg.skills[0].task = TaskId::Qtc;
    assert!(matches!(RcModel::new(cfg.clone()), Err(Error::Config(_))));
    cfg.skills[0].task = TaskId::Ner;
    cfg.input_dim = D + 1;
    assert!(matches!(RcModel::new(cfg.clone()), Err(Error::Config(_))));
    cfg.input_dim = D;
    cfg.vocab_hash = Some(10);
    assert!(matches!(RcModel::new(cfg.clone()), Err(Error::Config(_))));
    cfg.vocab_hash = None;
    cfg.skills[0].source = SkillSource::Checkpoint(dir.path().join("missing.ckpt"));
    assert!(matches!(RcModel::new(cfg), Err(Error::Config(_))));
}

#[test]
fn rc_checkpoint_round_trip() {
    let model = RcModel::new(toy_config(&[(TaskId::Qtc, 6), (TaskId::Te, 0)])).unwrap();
    let bytes = model.checkpoint().to_bytes();
    let back = RcModel::from_checkpoint(&EncoderCheckpoint::from_bytes(&bytes).unwrap()).unwrap();
    assert_eq!(back.checkpoint().to_bytes(), bytes);
    let input = toy_input(6, 3, (1, 2));
    assert_eq!(model.predict_span(&input).unwrap(), back.predict_span(&input).unwrap());
    let mut corrupt = bytes.clone();
    corrupt[1] ^= 0xff;
    assert!(matches!(EncoderCheckpoint::from_bytes(&corrupt), Err(Error::Checkpoint(_))));
}

#[test]
fn duplicate_skill_rejected() {
    assert!(matches!(
        RcModel::new(toy_config(&[(TaskId::Te, 0), (TaskId::Te, 0)])),
        Err(Error::Config(_))
    ));
}

fn brute_force(start: &[f64], end: &[f64], l: usize) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::NEG_INFINITY);
    for i in 0..start.len() {
        for j in i..start.len().min(i + l) {
            let s = start[i] * end[j];
            if s > best.2 {
                best = (i, j, s);
            }
        }
    }
    best
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn distribution(t: usize) -> impl Strategy<Value = Vec<f64>> {
    // Small integer weights make exact ties common.
    prop::collection::vec(0u32..4, t).prop_map(move |w| {
        let w: Vec<f64> = w.into_iter().map(f64::from).collect();
        if w.iter().all(|x| *x == 0.0) {
            vec![1.0 / t as f64; t]
        } else {
            normalize(w)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn decode_matches_enumeration(
        (start, end) in (1usize..=50).prop_flat_map(|t| (distribution(t), distribution(t))),
        l in prop::sample::select(vec![1usize, 5, 15]),
    ) {
        let fast = dp_decode(&start, &end, l).unwrap();
        prop_assert_eq!(fast, brute_force(&start, &end, l));
    }

    #[test]
    fn summary_is_convex_and_shift_invariant(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..6),
        w in prop::collection::vec(-2.0f64..2.0, 3),
        shift in -50.0f64..50.0,
    ) {
        let e_q = Tensor::from_rows(&rows).unwrap();
        let w_qw = Tensor::matrix(3, 1, w.clone()).unwrap();
        let r = question_summary(&e_q, &w_qw).unwrap();
        for c in 0..3 {
            let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(r.data()[c] >= lo - 1e-12 && r.data()[c] <= hi + 1e-12);
        }
        // A constant unit column weighted by `shift` adds `shift` to every score.
        let padded: Vec<Vec<f64>> = rows.iter().map(|r| [r.clone(), vec![1.0]].concat()).collect();
        let w_pad = Tensor::matrix(4, 1, [w, vec![shift]].concat()).unwrap();
        let shifted = question_summary(&Tensor::from_rows(&padded).unwrap(), &w_pad).unwrap();
        for c in 0..3 {
            prop_assert!((shifted.data()[c] - r.data()[c]).abs() < 1e-9);
        }
    }
}

#[test]
fn frozen_skills_unchanged_fine_tuned_change() {
    use skill_transfer::nn::Adam;
    let input = toy_input(5, 2, (1, 2));
    let step = |model: &mut RcModel, adam: &mut Adam| {
        let mut g = Graph::new();
        let l = model.loss_with(&model.store, &mut g, &input).unwrap();
        let grads = g.backward(l).unwrap();
        model.store.accumulate(&grads).unwrap();
        adam.step(&mut model.store).unwrap();
    };
    let digests = |m: &RcModel, ids: &[skill_transfer::nn::ParamId]| -> BTreeMap<usize, String> {
        ids.iter().map(|id| (id.index(), m.store.digest(*id))).collect()
    };

    let mut cfg = toy_config(&[(TaskId::Ner, 3), (TaskId::Ppdb, 0)]);
    cfg.fine_tune_skills = false;
    let mut frozen = RcModel::new(cfg.clone()).unwrap();
    let skill_ids = frozen.skill_params();
    let adapter_ids = frozen.adapter_params();
    let before = digests(&frozen, &skill_ids);
    let adapters_before = digests(&frozen, &adapter_ids);
    let mut adam = Adam::default();
    for _ in 0..20 {
        step(&mut frozen, &mut adam);
    }
    assert_eq!(digests(&frozen, &skill_ids), before);
    assert_ne!(digests(&frozen, &adapter_ids), adapters_before);

    cfg.fine_tune_skills = true;
    let mut tuned = RcModel::new(cfg).unwrap();
    let before = digests(&tuned, &skill_ids);
    step(&mut tuned, &mut Adam::default());
    let after = digests(&tuned, &skill_ids);
    assert!(before.iter().any(|(k, v)| after[k] != *v));
}
