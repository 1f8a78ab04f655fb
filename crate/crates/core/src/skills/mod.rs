//! Auxiliary skill models (entity tagging, question typing, entailment,
//! paraphrase relations), their training loop, and checkpoints of the
//! transferable encoders.

pub mod checkpoint;
mod encoder;
mod models;
mod task;
mod train;

pub use checkpoint::EncoderCheckpoint;
pub use encoder::{Projection, SkillEncoder};
pub use models::{
    embed_rows, RelationClassifier, SequenceLabeler, SkillDims, SkillExample, SkillModel, TokenSupervisedClassifier,
    ENCODER_PREFIX,
};
pub use task::{SupervisionMode, TaskId};
pub use train::{
    evaluate_skill, pair_examples, sentence_examples, sequence_examples, train_skill, EpochLog, SkillTrainConfig,
};
