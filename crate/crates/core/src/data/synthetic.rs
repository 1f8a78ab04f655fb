//! Seeded synthetic corpora for all five tasks over one shared vocabulary.
//!
//! Every corpus is built from the same lexicon of typed words (people,
//! places, years, verbs grouped into synonym pairs, objects) and the same
//! fact template, so an encoder trained on one task has seen the surface
//! vocabulary of the others:
//!
//! * NER: fact sentences and questions with `PER`/`LOC`/`DATE` BIO tags.
//! * QTC: questions whose class is fixed by the wh-template.
//! * TE: a fact premise against a generalised, contradicting or unrelated
//!   hypothesis.
//! * PPDB: short phrase pairs over synonym, hypernym and same-type sets.
//! * RC: paragraphs of facts with who/where/when questions whose answers are
//!   entity spans; question verbs are sometimes the synonym of the fact verb.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conll::{write_conll, LabeledSequence};
use super::pairs::{write_pairs, LabeledPair, PPDB_LABELS, TE_LABELS};
use super::squad::{Answer, Article, Paragraph, Qa, SquadFile};
use super::trec::{write_trec, LabeledSentence};
use crate::{Error, Result};

pub const QTC_LABELS: [&str; 6] = ["HUM:ind", "LOC:city", "NUM:date", "NUM:count", "ENTY:other", "DESC:reason"];

const FUNCTION_WORDS: [&str; 24] = [
    ".", "?", ",", "to", "in", "the", "who", "where", "when", "what", "why", "how", "many", "year", "did",
    "someone", "somewhere", "sometime", "and", "then", "of", "new", "port", "with",
];

/// Smallest number of words per open class.
const MIN_PER_CLASS: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeSpec {
    /// Total vocabulary size, function words included.
    pub vocab: usize,
    /// Examples generated for each skill task.
    pub sentences_per_task: usize,
    /// RC paragraphs; the last `dev_paragraphs` go to the dev split.
    pub paragraphs: usize,
    pub dev_paragraphs: usize,
    pub questions_per_paragraph: usize,
}

impl Default for SizeSpec {
    fn default() -> Self {
        SizeSpec {
            vocab: 200,
            sentences_per_task: 2000,
            paragraphs: 300,
            dev_paragraphs: 60,
            questions_per_paragraph: 5,
        }
    }
}

impl SizeSpec {
    pub fn tiny() -> Self {
        SizeSpec {
            vocab: 120,
            sentences_per_task: 200,
            paragraphs: 40,
            dev_paragraphs: 10,
            questions_per_paragraph: 4,
        }
    }
}

#[derive(Clone, Debug)]
struct Lexicon {
    first_names: Vec<String>,
    surnames: Vec<String>,
    places: Vec<String>,
    years: Vec<String>,
    /// Synonym pairs; both members are past-tense verbs.
    verbs: Vec<(String, String)>,
    objects: Vec<String>,
}

impl Lexicon {
    fn build(vocab: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let open = vocab.checked_sub(FUNCTION_WORDS.len()).unwrap_or(0);
        // first names, surnames, places, years, verbs (pairs), objects
        let shares = [0.24, 0.10, 0.22, 0.16, 0.18, 0.10];
        let mut counts: Vec<usize> = shares.iter().map(|s| (s * open as f64).floor() as usize).collect();
        counts[4] -= counts[4] % 2;
        if counts.iter().any(|c| *c < MIN_PER_CLASS) {
            return Err(Error::Generation(format!(
                "vocabulary of {vocab} leaves too few words per class for the templates"
            )));
        }
        let mut used: std::collections::HashSet<String> = FUNCTION_WORDS.iter().map(|s| s.to_string()).collect();
        let mut fresh = |rng: &mut ChaCha8Rng, suffix: &str| loop {
            let w = pseudo_word(rng) + suffix;
            if used.insert(w.clone()) {
                return w;
            }
        };
        let first_names = (0..counts[0]).map(|_| capitalize(&fresh(rng, ""))).collect();
        let surnames = (0..counts[1]).map(|_| capitalize(&fresh(rng, ""))).collect();
        let places = (0..counts[2]).map(|_| capitalize(&fresh(rng, ""))).collect();
        let mut all_years: Vec<u32> = (1700..2030).collect();
        all_years.shuffle(rng);
        let years = all_years[..counts[3]].iter().map(u32::to_string).collect();
        let verbs = (0..counts[4] / 2).map(|_| (fresh(rng, "ed"), fresh(rng, "ed"))).collect();
        let objects = (0..counts[5]).map(|_| fresh(rng, "s")).collect();
        Ok(Lexicon {
            first_names,
            surnames,
            places,
            years,
            verbs,
            objects,
        })
    }

    fn words(&self) -> Vec<String> {
        let mut out: Vec<String> = FUNCTION_WORDS.iter().map(|s| s.to_string()).collect();
        out.extend(self.first_names.iter().cloned());
        out.extend(self.surnames.iter().cloned());
        out.extend(self.places.iter().cloned());
        out.extend(self.years.iter().cloned());
        for (a, b) in &self.verbs {
            out.push(a.clone());
            out.push(b.clone());
        }
        out.extend(self.objects.iter().cloned());
        out
    }
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let syllables = rng.gen_range(2..=3);
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// A word sequence with one tag per word.
#[derive(Clone, Debug, Default)]
struct Tagged {
    words: Vec<String>,
    tags: Vec<String>,
}

impl Tagged {
    fn word(&mut self, w: &str) -> &mut Self {
        self.words.push(w.to_string());
        self.tags.push("O".into());
        self
    }

    fn entity(&mut self, e: &[String], ty: &str) -> &mut Self {
        for (i, w) in e.iter().enumerate() {
            self.words.push(w.clone());
            self.tags.push(format!("{}-{ty}", if i == 0 { "B" } else { "I" }));
        }
        self
    }
}

#[derive(Clone, Debug)]
struct Fact {
    person: Vec<String>,
    place: Vec<String>,
    year: Vec<String>,
    verb: (String, String),
    template: usize,
}

impl Fact {
    fn sentence(&self) -> Tagged {
        let mut t = Tagged::default();
        match self.template {
            0 => {
                t.entity(&self.person, "PER").word(&self.verb.0).word("to");
                t.entity(&self.place, "LOC").word("in").entity(&self.year, "DATE").word(".");
            }
            1 => {
                t.word("in").entity(&self.year, "DATE").word(",").entity(&self.person, "PER");
                t.word(&self.verb.0).word("to").entity(&self.place, "LOC").word(".");
            }
            _ => {
                t.word("to").entity(&self.place, "LOC").word(",").entity(&self.person, "PER");
                t.word(&self.verb.0).word("in").entity(&self.year, "DATE").word(".");
            }
        }
        t
    }
}

struct Generator<'a> {
    lex: &'a Lexicon,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn person(&mut self) -> Vec<String> {
        let first = self.lex.first_names.choose(&mut self.rng).unwrap().clone();
        if self.rng.gen_bool(0.4) {
            vec![first, self.lex.surnames.choose(&mut self.rng).unwrap().clone()]
        } else {
            vec![first]
        }
    }

    fn place(&mut self) -> Vec<String> {
        let p = self.lex.places.choose(&mut self.rng).unwrap().clone();
        if self.rng.gen_bool(0.3) {
            let prefix = if self.rng.gen_bool(0.5) { "New" } else { "Port" };
            vec![prefix.to_string(), p]
        } else {
            vec![p]
        }
    }

    fn year(&mut self) -> Vec<String> {
        vec![self.lex.years.choose(&mut self.rng).unwrap().clone()]
    }

    fn verb(&mut self) -> (String, String) {
        let (a, b) = self.lex.verbs.choose(&mut self.rng).unwrap().clone();
        if self.rng.gen_bool(0.5) {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn object(&mut self) -> String {
        self.lex.objects.choose(&mut self.rng).unwrap().clone()
    }

    fn fact(&mut self) -> Fact {
        Fact {
            person: self.person(),
            place: self.place(),
            year: self.year(),
            verb: self.verb(),
            template: self.rng.gen_range(0..3),
        }
    }

    /// A question of the given class, tagged for NER.
    fn question(&mut self, class: usize) -> Tagged {
        let f = self.fact();
        let verb = if self.rng.gen_bool(0.5) { &f.verb.0 } else { &f.verb.1 };
        let mut t = Tagged::default();
        match class {
            0 => {
                t.word("who").word(verb).word("to").entity(&f.place, "LOC");
                if self.rng.gen_bool(0.5) {
                    t.word("in").entity(&f.year, "DATE");
                }
            }
            1 => {
                t.word("where").word("did").entity(&f.person, "PER").word(verb);
                if self.rng.gen_bool(0.5) {
                    t.word("in").entity(&f.year, "DATE");
                }
            }
            2 => {
                if self.rng.gen_bool(0.5) {
                    t.word("when");
                } else {
                    t.word("in").word("what").word("year");
                }
                t.word("did").entity(&f.person, "PER").word(verb).word("to").entity(&f.place, "LOC");
            }
            3 => {
                let o = self.object();
                t.word("how").word("many").word(&o).word("did").entity(&f.person, "PER").word(verb);
            }
            4 => {
                t.word("what").word("did").entity(&f.person, "PER").word(verb).word("in").entity(&f.place, "LOC");
            }
            _ => {
                t.word("why").word("did").entity(&f.person, "PER").word(verb).word("to").entity(&f.place, "LOC");
            }
        }
        t.word("?");
        t
    }

    fn ner(&mut self, n: usize) -> Vec<LabeledSequence> {
        (0..n)
            .map(|_| {
                let t = if self.rng.gen_bool(0.25) {
                    let class = self.rng.gen_range(0..QTC_LABELS.len());
                    self.question(class)
                } else {
                    self.fact().sentence()
                };
                LabeledSequence {
                    tokens: t.words,
                    tags: t.tags,
                }
            })
            .collect()
    }

    fn balanced_labels(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        labels.shuffle(&mut self.rng);
        labels
    }

    fn qtc(&mut self, n: usize) -> Vec<LabeledSentence> {
        self.balanced_labels(n, QTC_LABELS.len())
            .into_iter()
            .map(|class| LabeledSentence {
                tokens: self.question(class).words,
                label: QTC_LABELS[class].to_string(),
            })
            .collect()
    }

    fn te(&mut self, n: usize) -> Vec<LabeledPair> {
        self.balanced_labels(n, TE_LABELS.len())
            .into_iter()
            .map(|class| {
                let f = self.fact();
                let premise = f.sentence().words;
                let mut h = f.clone();
                h.template = 0;
                let hypothesis = match class {
                    // entailment: generalise one argument
                    0 => {
                        let mut t = Tagged::default();
                        match self.rng.gen_range(0..3) {
                            0 => t.word("someone").word(&f.verb.0).word("to").entity(&f.place, "LOC"),
                            1 => t.entity(&f.person, "PER").word(&f.verb.0).word("somewhere"),
                            _ => t.entity(&f.person, "PER").word(&f.verb.0).word("to").entity(&f.place, "LOC"),
                        };
                        t.word(".");
                        t.words
                    }
                    // neutral: a different event of the same person
                    1 => {
                        h.verb = self.verb();
                        h.place = self.place();
                        h.year = self.year();
                        h.sentence().words
                    }
                    // contradiction: same event, another argument of the same type
                    _ => {
                        match self.rng.gen_range(0..3) {
                            0 => h.person = differ(&f.person, || self.person()),
                            1 => h.place = differ(&f.place, || self.place()),
                            _ => h.year = differ(&f.year, || self.year()),
                        }
                        h.sentence().words
                    }
                };
                LabeledPair {
                    premise,
                    hypothesis,
                    label: TE_LABELS[class].to_string(),
                }
            })
            .collect()
    }

    fn typed_entity(&mut self, ty: usize) -> (Vec<String>, &'static str) {
        match ty {
            0 => (self.person(), "someone"),
            1 => (self.place(), "somewhere"),
            _ => (self.year(), "sometime"),
        }
    }

    fn ppdb(&mut self, n: usize) -> Vec<LabeledPair> {
        self.balanced_labels(n, PPDB_LABELS.len())
            .into_iter()
            .map(|class| {
                let ty = self.rng.gen_range(0..3);
                let (a, b): (Vec<String>, Vec<String>) = match class {
                    0 => {
                        let (x, y) = self.verb();
                        if self.rng.gen_bool(0.5) {
                            let p = self.place();
                            (
                                [vec![x, "to".into()], p.clone()].concat(),
                                [vec![y, "to".into()], p].concat(),
                            )
                        } else {
                            (vec![x], vec![y])
                        }
                    }
                    1 | 2 => {
                        let (e, generic) = self.typed_entity(ty);
                        let g = vec![generic.to_string()];
                        if class == 1 {
                            (e, g)
                        } else {
                            (g, e)
                        }
                    }
                    3 => {
                        let (e, _) = self.typed_entity(ty);
                        let other = differ(&e, || self.typed_entity(ty).0);
                        (e, other)
                    }
                    4 => {
                        let (e, _) = self.typed_entity(ty);
                        let (o, _) = self.typed_entity((ty + 1) % 3);
                        (e, o)
                    }
                    _ => {
                        let (e, _) = self.typed_entity(ty);
                        (e, vec![self.object()])
                    }
                };
                LabeledPair {
                    premise: a,
                    hypothesis: b,
                    label: PPDB_LABELS[class].to_string(),
                }
            })
            .collect()
    }

    /// Facts with pairwise distinct people, places, years and verb groups.
    fn paragraph_facts(&mut self, k: usize) -> Vec<Fact> {
        let mut facts: Vec<Fact> = Vec::with_capacity(k);
        let mut guard = 0;
        while facts.len() < k {
            guard += 1;
            let f = self.fact();
            let clash = facts.iter().any(|g| {
                g.person[0] == f.person[0]
                    || g.place.last() == f.place.last()
                    || g.year == f.year
                    || g.verb.0 == f.verb.0
                    || g.verb.0 == f.verb.1
            });
            if !clash || guard > 1000 {
                facts.push(f);
            }
        }
        facts
    }

    fn rc_paragraph(&mut self, index: usize, questions: usize) -> (Paragraph, Vec<String>) {
        let k = self.rng.gen_range(3..=4);
        let facts = self.paragraph_facts(k);
        let mut context = String::new();
        let mut tags = Vec::new();
        let mut chars = 0usize;
        // (person, place, year) char spans per fact
        let mut spans: Vec<[(usize, String); 3]> = Vec::new();
        for f in &facts {
            let s = f.sentence();
            let mut found: [(usize, String); 3] = Default::default();
            let mut i = 0;
            while i < s.words.len() {
                if !context.is_empty() {
                    context.push(' ');
                    chars += 1;
                }
                let tag = &s.tags[i];
                if let Some(ty) = tag.strip_prefix("B-") {
                    let mut j = i + 1;
                    while j < s.tags.len() && s.tags[j].starts_with("I-") {
                        j += 1;
                    }
                    let text = s.words[i..j].join(" ");
                    let slot = match ty {
                        "PER" => 0,
                        "LOC" => 1,
                        _ => 2,
                    };
                    found[slot] = (chars, text.clone());
                    chars += text.chars().count();
                    context.push_str(&text);
                    tags.extend_from_slice(&s.tags[i..j]);
                    i = j;
                } else {
                    chars += s.words[i].chars().count();
                    context.push_str(&s.words[i]);
                    tags.push(tag.clone());
                    i += 1;
                }
            }
            spans.push(found);
        }
        let qas = (0..questions)
            .map(|q| {
                let fi = self.rng.gen_range(0..facts.len());
                let f = &facts[fi];
                let kind = self.rng.gen_range(0..3);
                let verb = if self.rng.gen_bool(0.5) { &f.verb.0 } else { &f.verb.1 };
                let mut words: Vec<String> = match kind {
                    0 => ["who", verb.as_str(), "to"].map(String::from).to_vec(),
                    _ => [if kind == 1 { "where" } else { "when" }, "did"].map(String::from).to_vec(),
                };
                match kind {
                    0 => words.extend(f.place.iter().cloned()),
                    1 => {
                        words.extend(f.person.iter().cloned());
                        words.push(verb.clone());
                    }
                    _ => {
                        words.extend(f.person.iter().cloned());
                        words.push(verb.clone());
                        words.push("to".into());
                        words.extend(f.place.iter().cloned());
                    }
                }
                words.push("?".into());
                let (start, text) = spans[fi][kind].clone();
                Qa {
                    id: format!("syn-{index}-{q}"),
                    question: words.join(" "),
                    answers: vec![Answer {
                        text,
                        answer_start: start,
                    }],
                }
            })
            .collect();
        (Paragraph { context, qas }, tags)
    }
}

fn differ<F: FnMut() -> Vec<String>>(orig: &[String], mut draw: F) -> Vec<String> {
    for _ in 0..100 {
        let d = draw();
        if d != orig {
            return d;
        }
    }
    let mut d = orig.to_vec();
    d[0] = format!("{}x", d[0]);
    d
}

/// All corpora generated from one seed.
#[derive(Clone, Debug)]
pub struct SyntheticSuite {
    pub vocabulary: Vec<String>,
    pub ner: Vec<LabeledSequence>,
    pub qtc: Vec<LabeledSentence>,
    pub te: Vec<LabeledPair>,
    pub ppdb: Vec<LabeledPair>,
    pub rc_train: SquadFile,
    pub rc_dev: SquadFile,
    /// BIO tags of every RC context token, keyed like
    /// [`SquadFile::paragraph_ids`] over `rc_train` then `rc_dev`.
    pub rc_tags: Vec<Vec<String>>,
}

pub fn gen_synthetic_suite(seed: u64, size: &SizeSpec) -> Result<SyntheticSuite> {
    if size.dev_paragraphs >= size.paragraphs {
        return Err(Error::Generation("dev split must leave training paragraphs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lex = Lexicon::build(size.vocab, &mut rng)?;
    let mut gen = Generator {
        lex: &lex,
        rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)),
    };
    let n = size.sentences_per_task;
    let ner = gen.ner(n);
    let qtc = gen.qtc(n);
    let te = gen.te(n);
    let ppdb = gen.ppdb(n);
    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut rc_tags = Vec::new();
    for p in 0..size.paragraphs {
        let (para, tags) = gen.rc_paragraph(p, size.questions_per_paragraph);
        rc_tags.push(tags);
        if p < size.paragraphs - size.dev_paragraphs {
            train.push(para);
        } else {
            dev.push(para);
        }
    }
    let wrap = |paragraphs: Vec<Paragraph>, title: &str| SquadFile {
        version: "1.1".into(),
        data: vec![Article {
            title: title.into(),
            paragraphs,
        }],
    };
    Ok(SyntheticSuite {
        vocabulary: lex.words(),
        ner,
        qtc,
        te,
        ppdb,
        rc_train: wrap(train, "synthetic-train"),
        rc_dev: wrap(dev, "synthetic-dev"),
        rc_tags,
    })
}

/// File names written by [`SyntheticSuite::write_dir`].
pub mod files {
    pub const NER: &str = "ner.conll";
    pub const QTC: &str = "qtc.txt";
    pub const TE: &str = "te.tsv";
    pub const PPDB: &str = "ppdb.tsv";
    pub const RC_TRAIN: &str = "rc-train.json";
    pub const RC_DEV: &str = "rc-dev.json";
    pub const VOCAB: &str = "vocab.txt";
}

impl SyntheticSuite {
    /// Writes every corpus in its reader's format.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        write_conll(open(files::NER)?, &self.ner)?;
        write_trec(open(files::QTC)?, &self.qtc)?;
        write_pairs(open(files::TE)?, &self.te)?;
        write_pairs(open(files::PPDB)?, &self.ppdb)?;
        self.rc_train.write(open(files::RC_TRAIN)?)?;
        self.rc_dev.write(open(files::RC_DEV)?)?;
        let mut v = open(files::VOCAB)?;
        for w in &self.vocabulary {
            writeln!(v, "{w}")?;
        }
        v.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tokenize::tokenize;

    #[test]
    fn same_seed_same_corpora() {
        let a = gen_synthetic_suite(5, &SizeSpec::tiny()).unwrap();
        let b = gen_synthetic_suite(5, &SizeSpec::tiny()).unwrap();
        assert_eq!(a.ner, b.ner);
        assert_eq!(a.qtc, b.qtc);
        assert_eq!(a.te, b.te);
        assert_eq!(a.ppdb, b.ppdb);
        assert_eq!(a.rc_train, b.rc_train);
        let c = gen_synthetic_suite(6, &SizeSpec::tiny()).unwrap();
        assert_ne!(a.ner, c.ner);
    }

    #[test]
    fn vocabulary_too_small() {
        let size = SizeSpec {
            vocab: 30,
            ..SizeSpec::tiny()
        };
        assert!(matches!(gen_synthetic_suite(1, &size), Err(Error::Generation(_))));
    }

    #[test]
    fn vocabulary_size_respected() {
        let s = gen_synthetic_suite(2, &SizeSpec::default()).unwrap();
        assert!(s.vocabulary.len() <= 200);
        let distinct: std::collections::HashSet<_> = s.vocabulary.iter().collect();
        assert_eq!(distinct.len(), s.vocabulary.len());
    }

    #[test]
    fn rc_tags_align_with_tokens() {
        let s = gen_synthetic_suite(3, &SizeSpec::tiny()).unwrap();
        let paras = s.rc_train.data.iter().chain(&s.rc_dev.data).flat_map(|a| &a.paragraphs);
        for (p, tags) in paras.zip(&s.rc_tags) {
            assert_eq!(tokenize(&p.context).len(), tags.len());
        }
    }
}
