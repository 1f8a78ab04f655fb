//! Span-extraction reading comprehension model with attached skill
//! encoders: ensemble encoding, question attention, interaction features,
//! start/end pointer heads and length-bounded span decoding.

mod model;
mod ops;

pub use model::{
    AttachedSkill, RcConfig, RcForward, RcInput, RcModel, SkillSource, SkillSpec, DEFAULT_MAX_SPAN_LEN,
};
pub use ops::{adapt, dp_decode, interact, question_summary, weighted_sum, SpanPrediction};
