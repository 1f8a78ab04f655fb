//! Corpus readers and writers, tokenization, fraction sampling and the
//! synthetic corpus generator.

pub mod conll;
pub mod labels;
pub mod pairs;
pub mod sample;
pub mod squad;
pub mod synthetic;
pub mod tokenize;
pub mod trec;

pub use conll::{is_bio_valid, read_conll_ner, repair_bio, LabeledSequence};
pub use labels::LabelSet;
pub use pairs::{read_pairs, LabeledPair, PPDB_LABELS, TE_LABELS};
pub use sample::{fraction_count, sample_fraction, sample_paragraph_ids, sample_squad};
pub use squad::{read_squad, RcExample, SquadFile};
pub use synthetic::{gen_synthetic_suite, SizeSpec, SyntheticSuite, QTC_LABELS};
pub use tokenize::{tokenize, Token};
pub use trec::{read_trec_qc, LabeledSentence};
