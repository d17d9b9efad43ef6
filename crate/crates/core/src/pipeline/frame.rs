use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    face_center, intersect_gaze_with_camera_plane, solve_pnp, CameraIntrinsics, FaceModel3D,
    GazePoint2D, GazeVector, GeometryError, HeadPose, Landmarks2D, PnpOptions,
};
use crate::normalization::{
    compute_normalization, denormalize_gaze, normalize_head_pose, NormParams, NormalizationError,
};

use super::PipelineError;

/// Which parts of the face are visible in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum VisibilityCategory {
    WholeFaceAllLandmarks,
    WholeFaceSomeLandmarks,
    PartialTwoEyesMouth,
    PartialTwoEyesNoMouth,
    PartialOneEyeMouth,
    PartialOneEyeNoMouth,
    PartialNoEyesMouth,
    NoFace,
}

impl VisibilityCategory {
    pub const ALL: [VisibilityCategory; 8] = [
        Self::WholeFaceAllLandmarks,
        Self::WholeFaceSomeLandmarks,
        Self::PartialTwoEyesMouth,
        Self::PartialTwoEyesNoMouth,
        Self::PartialOneEyeMouth,
        Self::PartialOneEyeNoMouth,
        Self::PartialNoEyesMouth,
        Self::NoFace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WholeFaceAllLandmarks => "Whole face all landmarks",
            Self::WholeFaceSomeLandmarks => "Whole face some landmarks",
            Self::PartialTwoEyesMouth => "Partial face 2 eyes 1 mouth",
            Self::PartialTwoEyesNoMouth => "Partial face 2 eyes no mouth",
            Self::PartialOneEyeMouth => "Partial face 1 eye 1 mouth",
            Self::PartialOneEyeNoMouth => "Partial face 1 eye no mouth",
            Self::PartialNoEyesMouth => "Partial face no eyes 1 mouth",
            Self::NoFace => "No face",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    /// Largest number of the six landmarks that can be visible.
    pub fn max_landmarks(self) -> usize {
        match self {
            Self::WholeFaceAllLandmarks | Self::PartialTwoEyesMouth => 6,
            Self::WholeFaceSomeLandmarks => 5,
            Self::PartialTwoEyesNoMouth | Self::PartialOneEyeMouth => 4,
            Self::PartialOneEyeNoMouth | Self::PartialNoEyesMouth => 2,
            Self::NoFace => 0,
        }
    }

    pub fn is_consistent_with(self, visible: usize) -> bool {
        match self {
            Self::WholeFaceAllLandmarks => visible == 6,
            other => visible <= other.max_landmarks(),
        }
    }
}

impl fmt::Display for VisibilityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VisibilityCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown visibility category {s:?}"))
    }
}

impl From<VisibilityCategory> for String {
    fn from(c: VisibilityCategory) -> Self {
        c.name().to_string()
    }
}

impl TryFrom<String> for VisibilityCategory {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Generator-side geometry that the pipeline never reads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    /// Camera frame.
    pub gaze: GazeVector,
    pub face_center: Vector3<f64>,
    pub pitch_n: f64,
    pub yaw_n: f64,
    /// Gaze target on the camera plane; `None` when looking away from it.
    pub target: Option<GazePoint2D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub person_id: String,
    pub frame_id: String,
    pub landmarks: Landmarks2D,
    pub intrinsics: CameraIntrinsics,
    pub visibility_category: VisibilityCategory,
    pub feature: Option<Vec<f64>>,
    /// Gaze direction in normalized camera space, as a gaze estimator would
    /// report it.
    pub gaze_estimate: Option<GazeVector>,
    pub gt_eye_contact: Option<bool>,
    pub truth: Option<FrameTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazeSample {
    pub frame_id: String,
    pub head_pose: HeadPose,
    pub pitch_n: f64,
    pub yaw_n: f64,
    /// Camera frame.
    pub gaze: GazeVector,
    pub face_center: Vector3<f64>,
    pub gaze_point: Option<GazePoint2D>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub face_model: FaceModel3D,
    pub norm: NormParams,
    pub pnp: PnpOptions,
}

/// Landmarks to gaze point for one frame.
pub fn process_frame(rec: &FrameRecord, cfg: &PipelineConfig) -> Result<GazeSample, PipelineError> {
    let visible = rec.landmarks.visible_count();
    if visible < 4 {
        return Err(PipelineError::InsufficientLandmarks { visible });
    }
    let gaze_n = rec.gaze_estimate.ok_or(PipelineError::MissingGazeEstimate)?;

    let head_pose = solve_pnp(&rec.landmarks, &cfg.face_model, &rec.intrinsics, &cfg.pnp)
        .map_err(|e| match e {
            GeometryError::InsufficientCorrespondences { visible } => {
                PipelineError::InsufficientLandmarks { visible }
            }
            other => PipelineError::Pose(other),
        })?;
    let center = face_center(&cfg.face_model, &head_pose);
    let norm = compute_normalization(&head_pose, &center, &cfg.norm)
        .map_err(|e: NormalizationError| PipelineError::Normalization(e))?;
    let (pitch_n, yaw_n) = normalize_head_pose(&norm, &head_pose);
    let gaze = denormalize_gaze(&norm, &gaze_n);
    let gaze_point = intersect_gaze_with_camera_plane(&center, &gaze).ok();

    Ok(GazeSample {
        frame_id: rec.frame_id.clone(),
        head_pose,
        pitch_n,
        yaw_n,
        gaze,
        face_center: center,
        gaze_point,
    })
}
