use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skill-transfer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(cli(&["eval", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["train-skill", "--task", "rc", "--data", "x", "--out", "y"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_runtime_error() {
    let out = cli(&["eval", "--data", "/nonexistent.json", "--predictions", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

const SQUAD: &str = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[
 {"context":"the cat sat on a mat","qas":[
  {"id":"q1","question":"who sat","answers":[{"text":"the cat","answer_start":0}]},
  {"id":"q2","question":"on what","answers":[{"text":"a mat","answer_start":15},{"text":"mat","answer_start":17}]}]},
 {"context":"dogs bark loudly","qas":[
  {"id":"q3","question":"what barks","answers":[{"text":"dogs","answer_start":0}]}]}]}]}"#;

#[test]
fn eval_scores_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("dev.json");
    let preds = dir.path().join("pred.json");
    std::fs::write(&data, SQUAD).unwrap();
    // q1 exact after normalization, q2 partial ("sat on mat" vs "mat": F1 0.5), q3 missing.
    std::fs::write(&preds, r#"{"q1":"Cat","q2":"sat on mat"}"#).unwrap();
    let out = ok(&["eval", "--data", s(&data), "--predictions", s(&preds)]);
    let f1_q2 = 2.0 * (1.0 / 3.0) * 1.0 / (1.0 / 3.0 + 1.0);
    let expected = format!("em={:.6} f1={:.6} questions=3", 1.0 / 3.0, (1.0 + f1_q2) / 3.0);
    assert_eq!(out.trim(), expected);
}

#[test]
fn full_sampling_keeps_every_paragraph() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    let output = dir.path().join("out.json");
    std::fs::write(&input, SQUAD).unwrap();
    ok(&["sample-fraction", "--input", s(&input), "--output", s(&output), "--pct", "100"]);
    let a: serde_json::Value = serde_json::from_str(SQUAD).unwrap();
    let b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(a["data"], b["data"]);
    let manifest = std::fs::read_to_string(dir.path().join("out.json.manifest")).unwrap();
    assert!(manifest.lines().any(|l| l == "paragraphs=2"));
}

#[test]
fn synthetic_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let skills = dir.path().join("skills");
    let run = dir.path().join("run");
    std::fs::create_dir_all(&skills).unwrap();
    ok(&["gen-synthetic", "--out", s(&suite), "--tiny", "--seed", "3"]);
    for f in ["ner.conll", "qtc.txt", "te.tsv", "ppdb.tsv", "rc-train.json", "rc-dev.json", "manifest.txt"] {
        assert!(suite.join(f).exists(), "{f}");
    }

    let ckpt = skills.join("te.ckpt");
    let te = suite.join("te.tsv");
    ok(&[
        "train-skill", "--task", "te", "--data", s(&te), "--out", s(&ckpt), "--dim", "8", "--hidden", "4",
        "--head-hidden", "6", "--epochs", "1",
    ]);
    assert!(ckpt.exists());
    assert!(skills.join("te.ckpt.manifest").exists());

    let train = suite.join("rc-train.json");
    let dev = suite.join("rc-dev.json");
    let rc_args = [
        "train-rc", "--train", s(&train), "--dev", s(&dev), "--dim", "8", "--skill-dir", s(&skills),
        "--hidden", "4", "--adapt", "2", "--steps", "6", "--eval-every", "3", "--out", s(&run),
        "--skills", "te", "--freeze",
    ];
    let stdout = ok(&rc_args);
    assert!(stdout.contains("width 10"), "{stdout}");
    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    let steps: Vec<&str> = metrics.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["3", "6"]);
    for f in ["manifest.txt", "model.ckpt", "predictions.json"] {
        assert!(run.join(f).exists(), "{f}");
    }

    let eval = ok(&["eval", "--data", s(&dev), "--predictions", s(&run.join("predictions.json"))]);
    let last = metrics.lines().last().unwrap().split(',').collect::<Vec<_>>();
    let (em, f1): (f64, f64) = (last[2].parse().unwrap(), last[3].parse().unwrap());
    assert!(eval.contains(&format!("em={em:.6} f1={f1:.6}")), "{eval} vs {em} {f1}");

    // A skill without a checkpoint in the directory fails at runtime.
    let mut missing = rc_args.to_vec();
    let pos = missing.iter().position(|a| *a == "te").unwrap();
    missing[pos] = "ner";
    assert_eq!(cli(&missing).status.code(), Some(1));
}
