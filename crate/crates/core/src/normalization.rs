//! Normalized camera space.
//!
//! The rows of `rotation` are the normalized camera axes expressed in the real
//! camera frame: the third row looks at the face centre and the second row is
//! orthogonal to the head's x axis, which removes head roll. Positions are
//! additionally scaled along z so the face sits at `distance_mm`; directions
//! are only rotated.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_to_angles, CameraIntrinsics, GazeVector, GeometryError, HeadPose};

const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizationError {
    #[error("face centre is at the camera origin")]
    DegenerateGeometry,
    #[error("head x axis is parallel to the viewing ray; roll is undefined")]
    RollUndefined,
    #[error("invalid normalization parameters")]
    InvalidParams,
    #[error(transparent)]
    InvalidIntrinsics(#[from] GeometryError),
}

/// Fixed virtual camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub distance_mm: f64,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        Self {
            distance_mm: 600.0,
            fx: 960.0,
            fy: 960.0,
            cx: 112.0,
            cy: 112.0,
        }
    }
}

impl NormParams {
    pub fn validate(&self) -> Result<(), NormalizationError> {
        let ok = [self.distance_mm, self.fx, self.fy].iter().all(|v| *v > 0.0 && v.is_finite())
            && self.cx.is_finite()
            && self.cy.is_finite();
        if ok {
            Ok(())
        } else {
            Err(NormalizationError::InvalidParams)
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub rotation: Matrix3<f64>,
    pub scale: f64,
    /// `diag(1, 1, scale) * rotation`
    pub matrix: Matrix3<f64>,
}

impl NormalizationTransform {
    /// Maps a camera-frame position into normalized space (rotated and scaled).
    pub fn apply_to_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * p
    }
}

pub fn compute_normalization(
    pose: &HeadPose,
    center: &Vector3<f64>,
    params: &NormParams,
) -> Result<NormalizationTransform, NormalizationError> {
    params.validate()?;
    let dist = center.norm();
    if !(dist > DEGENERATE_EPS) || !dist.is_finite() {
        return Err(NormalizationError::DegenerateGeometry);
    }
    let z = center / dist;
    let head_x = pose.rotation.column(0).into_owned();
    let y = z.cross(&head_x);
    let y_norm = y.norm();
    if y_norm < DEGENERATE_EPS {
        return Err(NormalizationError::RollUndefined);
    }
    let y = y / y_norm;
    let x = y.cross(&z);
    let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    let scale = params.distance_mm / dist;
    let matrix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, scale)) * rotation;
    Ok(NormalizationTransform {
        rotation,
        scale,
        matrix,
    })
}

pub fn normalize_gaze(t: &NormalizationTransform, g: &GazeVector) -> GazeVector {
    GazeVector::new(t.rotation * g.as_vector()).expect("rotation preserves non-zero length")
}

pub fn denormalize_gaze(t: &NormalizationTransform, g: &GazeVector) -> GazeVector {
    GazeVector::new(t.rotation.transpose() * g.as_vector())
        .expect("rotation preserves non-zero length")
}

/// Head pitch and yaw (degrees) in normalized camera space.
pub fn normalize_head_pose(t: &NormalizationTransform, pose: &HeadPose) -> (f64, f64) {
    let a = rotation_to_angles(&(t.rotation * pose.rotation));
    (a.pitch, a.yaw)
}

/// Pixel warp `C_n * M * C_r^-1` from the real image into the normalized image.
pub fn warp_matrix(
    t: &NormalizationTransform,
    intr: &CameraIntrinsics,
    params: &NormParams,
) -> Result<Matrix3<f64>, NormalizationError> {
    intr.validate()?;
    params.validate()?;
    let c_r_inv = intr
        .matrix()
        .try_inverse()
        .ok_or(NormalizationError::InvalidIntrinsics(GeometryError::InvalidIntrinsics {
            fx: intr.fx,
            fy: intr.fy,
            cx: intr.cx,
            cy: intr.cy,
        }))?;
    Ok(params.intrinsics().matrix() * t.matrix * c_r_inv)
}
