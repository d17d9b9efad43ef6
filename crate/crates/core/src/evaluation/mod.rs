//! Leave-one-person-out evaluation with MCC, per-category and per-head-pose
//! breakdowns, and cross-dataset transfer.

mod buckets;
mod experiment;
mod folds;
mod metrics;

pub use buckets::{axis_bucket, bucket_head_pose, bucket_id, BUCKET_EDGES_DEG};
pub use experiment::{
    failure_accounting, run_cross_experiment, run_within_experiment, train_dataset_model, Breakdown, CategoryFailures,
    CellReport, ExperimentConfig, ExperimentReport, FoldResult, SD_CONVENTION,
};
pub use folds::{lopo_folds, lopo_folds_over, persons, Fold};
pub use metrics::{confusion_matrix, mcc, mean_sd, ConfusionCounts};

use thiserror::Error;

use crate::classifier::SvmError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions but {ground_truth} ground-truth labels")]
    LengthMismatch { predictions: usize, ground_truth: usize },
    #[error("confusion counts are empty")]
    EmptyCounts,
    #[error("leave-one-person-out needs at least 2 persons, got {0}")]
    TooFewPersons(usize),
    #[error("train features have dimension {train}, test features {test}")]
    FeatureDimMismatch { train: usize, test: usize },
    #[error("frame {frame_id}: feature dimension {got}, expected {expected}")]
    InconsistentFeatureDim { frame_id: String, expected: usize, got: usize },
    #[error("no classifier could be trained: {0}")]
    Untrainable(String),
    #[error(transparent)]
    Model(#[from] SvmError),
}
