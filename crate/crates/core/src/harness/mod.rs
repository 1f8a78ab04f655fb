//! Experiment orchestration: answer metrics, run manifests, the RC training
//! loop, and the skill-transfer experiments built on top of it.

mod experiments;
mod manifest;
mod metrics;
mod train;

pub use experiments::*;
pub use manifest::{bytes_sha256, file_sha256, Manifest};
pub use metrics::{score_predictions, squad_em, squad_f1, squad_normalize, token_bag_f1};
pub use train::{
    evaluate_rc, steps_to_f1, train_rc, write_metrics_csv, DevSet, Evaluation, MetricsRow, RcTrainConfig,
    METRICS_HEADER,
};
