//! Camera model, face model, head pose and gaze ray geometry.
//!
//! Units: millimetres for 3D positions, pixels for image points, degrees at
//! API boundaries.

mod angles;
mod camera;
mod face_model;
mod pnp;

pub use angles::{
    angles_to_rotation, forward_axis, rotation_angle_between, rotation_to_angles, EulerAngles,
};
pub use camera::CameraIntrinsics;
pub use face_model::{FaceModel3D, Landmark, NUM_LANDMARKS};
pub use pnp::{solve_pnp, PnpOptions};

use nalgebra::{Matrix3, Point2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ORTHONORMAL_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid intrinsics fx={fx} fy={fy} cx={cx} cy={cy}")]
    InvalidIntrinsics { fx: f64, fy: f64, cx: f64, cy: f64 },
    #[error("face model centroid is {offset_mm} mm from the origin")]
    ModelNotCentered { offset_mm: f64 },
    #[error("face model points have rank {rank}, need at least 2")]
    DegenerateModel { rank: usize },
    #[error("point projects from behind the camera (z = {z})")]
    ProjectionDegenerate { z: f64 },
    #[error("rotation is not orthonormal with determinant +1")]
    InvalidRotation,
    #[error("translation z must be positive, got {z}")]
    BehindCamera { z: f64 },
    #[error("need at least 4 visible landmarks, got {visible}")]
    InsufficientCorrespondences { visible: usize },
    #[error("pose solver did not converge after {iterations} iterations (rms residual {residual_px} px)")]
    Convergence { iterations: usize, residual_px: f64 },
    #[error("gaze vector must be finite and non-zero")]
    InvalidGaze,
    #[error("gaze ray does not reach the camera plane (gaze z = {gaze_z})")]
    NoIntersection { gaze_z: f64 },
    #[error("ray origin must lie in front of the camera plane (z = {z})")]
    OriginBehindPlane { z: f64 },
}

/// Rigid model-to-camera transform of the face model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPose {
    pub rotation: Matrix3<f64>,
    /// Millimetres, camera frame.
    pub translation: Vector3<f64>,
    /// RMS reprojection error in pixels over the landmarks used for the fit.
    pub reprojection_error: f64,
}

impl HeadPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let pose = Self {
            rotation,
            translation,
            reprojection_error: 0.0,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !is_rotation(&self.rotation) {
            return Err(GeometryError::InvalidRotation);
        }
        if !(self.translation.z > 0.0) || !self.translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::BehindCamera {
                z: self.translation.z,
            });
        }
        Ok(())
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn angles(&self) -> EulerAngles {
        rotation_to_angles(&self.rotation)
    }
}

pub(crate) fn is_rotation(r: &Matrix3<f64>) -> bool {
    if !r.iter().all(|v| v.is_finite()) {
        return false;
    }
    let err = (r.transpose() * r - Matrix3::identity()).abs().max();
    err < ORTHONORMAL_TOL && (r.determinant() - 1.0).abs() < ORTHONORMAL_TOL
}

/// Six image landmarks in [`Landmark`] order; `None` marks an invisible one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Landmarks2D {
    pub points: [Option<Point2<f64>>; NUM_LANDMARKS],
}

impl Landmarks2D {
    pub fn all(points: [Point2<f64>; NUM_LANDMARKS]) -> Self {
        Self {
            points: points.map(Some),
        }
    }

    pub fn visible_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }

    pub fn hide(&mut self, lm: Landmark) {
        self.points[lm.index()] = None;
    }

    pub fn get(&self, lm: Landmark) -> Option<Point2<f64>> {
        self.points[lm.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.points
            .iter()
            .flatten()
            .all(|p| p.x.is_finite() && p.y.is_finite())
    }
}

/// Unit gaze direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct GazeVector(Vector3<f64>);

impl GazeVector {
    /// Normalizes `v` to unit length.
    pub fn new(v: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(GeometryError::InvalidGaze);
        }
        Ok(Self(v / n))
    }

    /// Accepts `v` only if it is already unit length (within 1e-9).
    pub fn from_unit(v: Vector3<f64>) -> Result<Self, GeometryError> {
        if !v.iter().all(|c| c.is_finite()) || (v.norm() - 1.0).abs() > UNIT_TOL {
            return Err(GeometryError::InvalidGaze);
        }
        Ok(Self(v))
    }

    /// Accepts a stored, rounded direction as-is if it is unit length
    /// within 1e-6. Keeping the exact stored value makes files round-trip.
    pub fn from_stored(v: Vector3<f64>) -> Result<Self, GeometryError> {
        if !v.iter().all(|c| c.is_finite()) || (v.norm() - 1.0).abs() > 1e-6 {
            return Err(GeometryError::InvalidGaze);
        }
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }
}

impl TryFrom<[f64; 3]> for GazeVector {
    type Error = GeometryError;

    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(Vector3::from(v))
    }
}

impl From<GazeVector> for [f64; 3] {
    fn from(g: GazeVector) -> Self {
        [g.0.x, g.0.y, g.0.z]
    }
}

/// Point on the camera plane (z = 0), millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint2D {
    pub x: f64,
    pub y: f64,
}

impl GazePoint2D {
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

pub fn project_points(
    model: &FaceModel3D,
    pose: &HeadPose,
    intr: &CameraIntrinsics,
) -> Result<[Point2<f64>; NUM_LANDMARKS], GeometryError> {
    let mut out = [Point2::origin(); NUM_LANDMARKS];
    for (dst, p) in out.iter_mut().zip(model.points()) {
        *dst = intr.project(&pose.transform(p))?;
    }
    Ok(out)
}

/// Centroid of the transformed model points. Since the model is centered
/// this is the pose translation.
pub fn face_center(model: &FaceModel3D, pose: &HeadPose) -> Vector3<f64> {
    model
        .points()
        .iter()
        .map(|p| pose.transform(p))
        .sum::<Vector3<f64>>()
        / NUM_LANDMARKS as f64
}

/// Intersects the ray `origin + t * gaze` with the camera plane z = 0.
pub fn intersect_gaze_with_camera_plane(
    origin: &Vector3<f64>,
    gaze: &GazeVector,
) -> Result<GazePoint2D, GeometryError> {
    if !(origin.z > 0.0) {
        return Err(GeometryError::OriginBehindPlane { z: origin.z });
    }
    let g = gaze.as_vector();
    if g.z >= 0.0 {
        return Err(GeometryError::NoIntersection { gaze_z: g.z });
    }
    let t = origin.z / -g.z;
    Ok(GazePoint2D {
        x: origin.x + t * g.x,
        y: origin.y + t * g.y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
    }

    fn frontal(z: f64) -> HeadPose {
        HeadPose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, z)).unwrap()
    }

    #[test]
    fn principal_point_and_pinhole_offset() {
        let pose = frontal(400.0);
        let c = intr().project(&pose.transform(&Vector3::zeros())).unwrap();
        assert_eq!((c.x, c.y), (320.0, 240.0));
        let p = intr()
            .project(&pose.transform(&Vector3::new(40.0, 0.0, 0.0)))
            .unwrap();
        assert_eq!((p.x, p.y), (370.0, 240.0));
    }

    #[test]
    fn point_behind_camera_is_degenerate() {
        let err = intr().project(&Vector3::new(0.0, 0.0, -10.0)).unwrap_err();
        assert_eq!(err, GeometryError::ProjectionDegenerate { z: -10.0 });
        // the whole model behind the camera plane
        let pose = HeadPose {
            rotation: Matrix3::identity(),
            translation: Vector3::new(0.0, 0.0, -10.0),
            reprojection_error: 0.0,
        };
        assert!(matches!(
            project_points(&FaceModel3D::generic(), &pose, &intr()),
            Err(GeometryError::ProjectionDegenerate { .. })
        ));
    }

    #[test]
    fn doubling_focal_length_doubles_offset() {
        let model = FaceModel3D::generic();
        let pose = HeadPose::new(
            angles_to_rotation(EulerAngles::new(12.0, -7.0, 3.0)),
            Vector3::new(13.0, -8.0, 377.0),
        )
        .unwrap();
        let a = project_points(&model, &pose, &intr()).unwrap();
        let wide = CameraIntrinsics::new(1000.0, 500.0, 320.0, 240.0).unwrap();
        let b = project_points(&model, &pose, &wide).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert!((pb.x - 320.0 - 2.0 * (pa.x - 320.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        assert!(CameraIntrinsics::new(0.0, 500.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(500.0, -1.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn pose_invariants() {
        assert!(HeadPose::new(Matrix3::identity() * 2.0, Vector3::new(0.0, 0.0, 1.0)).is_err());
        let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert_eq!(
            HeadPose::new(mirror, Vector3::new(0.0, 0.0, 1.0)).unwrap_err(),
            GeometryError::InvalidRotation
        );
        assert!(HeadPose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn face_center_is_translation() {
        let model = FaceModel3D::generic();
        assert!((face_center(&model, &frontal(400.0)) - Vector3::new(0.0, 0.0, 400.0)).norm() < 1e-12);
        let pose = HeadPose::new(
            angles_to_rotation(EulerAngles::new(33.0, -21.0, 8.0)),
            Vector3::new(25.0, -10.0, 330.0),
        )
        .unwrap();
        assert!((face_center(&model, &pose) - Vector3::new(25.0, -10.0, 330.0)).norm() < 1e-9);
    }

    #[test]
    fn gaze_straight_at_camera() {
        let g = GazeVector::new(Vector3::new(0.0, 0.0, -1.0)).unwrap();
        let p = intersect_gaze_with_camera_plane(&Vector3::new(0.0, 0.0, 400.0), &g).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
    }

    #[test]
    fn gaze_at_45_degrees() {
        // t = 400 * sqrt(2); x = t / sqrt(2) = 400
        let g = GazeVector::new(Vector3::new(1.0, 0.0, -1.0)).unwrap();
        let p = intersect_gaze_with_camera_plane(&Vector3::new(0.0, 0.0, 400.0), &g).unwrap();
        assert!((p.x - 400.0).abs() < 1e-9);
        assert_eq!(p.y, 0.0);
    }

    #[test]
    fn gaze_away_has_no_intersection() {
        let g = GazeVector::new(Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(
            intersect_gaze_with_camera_plane(&Vector3::new(0.0, 0.0, 400.0), &g).unwrap_err(),
            GeometryError::NoIntersection { gaze_z: 1.0 }
        );
    }

    #[test]
    fn gaze_vector_rejects_zero_and_non_unit() {
        assert!(GazeVector::new(Vector3::zeros()).is_err());
        assert!(GazeVector::from_unit(Vector3::new(0.0, 0.0, 2.0)).is_err());
        let g = GazeVector::new(Vector3::new(3.0, 4.0, 0.0)).unwrap();
        assert!((g.as_vector().norm() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn intersection_lies_on_plane(
            ox in -200.0f64..200.0, oy in -200.0f64..200.0, oz in 50.0f64..900.0,
            gx in -1.0f64..1.0, gy in -1.0f64..1.0, gz in -1.0f64..-0.05,
        ) {
            let origin = Vector3::new(ox, oy, oz);
            let g = GazeVector::new(Vector3::new(gx, gy, gz)).unwrap();
            let p = intersect_gaze_with_camera_plane(&origin, &g).unwrap();
            let t = oz / -g.z();
            let hit = origin + t * g.as_vector();
            prop_assert!(hit.z.abs() < 1e-9);
            prop_assert!((hit.x - p.x).abs() < 1e-9 && (hit.y - p.y).abs() < 1e-9);
        }
    }
}
