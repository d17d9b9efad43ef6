//! Per-frame processing and unsupervised label generation.

mod dbscan;
mod frame;
mod labeling;

pub use dbscan::{dbscan, Assignment};
pub use frame::{
    process_frame, FrameRecord, FrameTruth, GazeSample, PipelineConfig, VisibilityCategory,
};
pub use labeling::{
    cluster_gaze_points, derive_labels, label_by_clustering, select_target_cluster, select_target_cluster_sized,
    ClusterLabeling,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::normalization::NormalizationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("need at least 4 visible landmarks, got {visible}")]
    InsufficientLandmarks { visible: usize },
    #[error("frame has no gaze estimate")]
    MissingGazeEstimate,
    #[error("head pose estimation failed: {0}")]
    Pose(GeometryError),
    #[error("normalization failed: {0}")]
    Normalization(NormalizationError),
}

impl PipelineError {
    /// Short machine-readable reason used in exclusion counts.
    pub fn reason(&self) -> &'static str {
        match self {
            PipelineError::InsufficientLandmarks { .. } => "insufficient-landmarks",
            PipelineError::MissingGazeEstimate => "missing-gaze-estimate",
            PipelineError::Pose(_) => "pose-failure",
            PipelineError::Normalization(_) => "normalization-failure",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("no dense cluster found")]
    NoClusters,
    #[error("cluster radius and minimum samples must be positive")]
    InvalidParams,
    #[error("gaze points must be finite")]
    NonFinitePoint,
    #[error("{assignments} assignments for {points} points")]
    LengthMismatch { assignments: usize, points: usize },
    #[error("cluster {0} has no members")]
    UnknownTarget(usize),
}

/// Whether training gaze points are clustered together or per person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterScope {
    #[default]
    Pooled,
    PerPerson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub eps_mm: f64,
    pub min_samples: usize,
    /// Cap on the number of training frames fed to clustering; frames are
    /// drawn with a seeded shuffle when the split is larger.
    pub max_samples: Option<usize>,
    pub scope: ClusterScope,
    /// Clusters holding less than this fraction of the clustered points are
    /// not considered as the target; small chance clusters of outlying gaze
    /// estimates would otherwise win when they happen to lie near the camera.
    pub min_target_fraction: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps_mm: 20.0,
            min_samples: 5,
            max_samples: None,
            scope: ClusterScope::Pooled,
            min_target_fraction: 0.05,
        }
    }
}
