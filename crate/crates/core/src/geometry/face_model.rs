//! Built-in six point generic face model.
//!
//! Coordinates are in millimetres, in a head frame whose x axis points from
//! the subject's right eye towards the left eye, y points down (chin) and z
//! points back into the head. A frontal face seen by the camera therefore
//! has the identity rotation. These values are chosen for this crate to be
//! anatomically plausible; they are not measured data.

use nalgebra::{Matrix3xX, Vector3};

use super::GeometryError;

/// Number of landmarks used throughout the pipeline.
pub const NUM_LANDMARKS: usize = 6;

/// Landmark order shared by [`FaceModel3D`] and `Landmarks2D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Landmark {
    RightEyeOuter = 0,
    RightEyeInner = 1,
    LeftEyeInner = 2,
    LeftEyeOuter = 3,
    RightMouth = 4,
    LeftMouth = 5,
}

impl Landmark {
    pub const ALL: [Landmark; NUM_LANDMARKS] = [
        Landmark::RightEyeOuter,
        Landmark::RightEyeInner,
        Landmark::LeftEyeInner,
        Landmark::LeftEyeOuter,
        Landmark::RightMouth,
        Landmark::LeftMouth,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

// Uncentered; `FaceModel3D::generic` recenters on the centroid.
const GENERIC_POINTS_MM: [[f64; 3]; NUM_LANDMARKS] = [
    [-45.0, -1.0, 16.0],
    [-17.0, 1.0, 2.0],
    [17.0, 1.0, 2.0],
    [45.0, -1.0, 16.0],
    [-25.0, 66.0, 10.0],
    [25.0, 66.0, 10.0],
];

const CENTROID_TOL_MM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FaceModel3D {
    points: [Vector3<f64>; NUM_LANDMARKS],
}

impl FaceModel3D {
    /// Accepts points that are already centered on their centroid.
    pub fn new(points: [Vector3<f64>; NUM_LANDMARKS]) -> Result<Self, GeometryError> {
        let centroid = points.iter().sum::<Vector3<f64>>() / NUM_LANDMARKS as f64;
        if centroid.norm() > CENTROID_TOL_MM {
            return Err(GeometryError::ModelNotCentered {
                offset_mm: centroid.norm(),
            });
        }
        let model = Self { points };
        model.check_rank()?;
        Ok(model)
    }

    /// Subtracts the centroid, then validates.
    pub fn centered(points: [Vector3<f64>; NUM_LANDMARKS]) -> Result<Self, GeometryError> {
        let centroid = points.iter().sum::<Vector3<f64>>() / NUM_LANDMARKS as f64;
        Self::new(points.map(|p| p - centroid))
    }

    pub fn generic() -> Self {
        Self::centered(GENERIC_POINTS_MM.map(|p| Vector3::new(p[0], p[1], p[2])))
            .expect("built-in face model is valid")
    }

    pub fn points(&self) -> &[Vector3<f64>; NUM_LANDMARKS] {
        &self.points
    }

    pub fn point(&self, lm: Landmark) -> &Vector3<f64> {
        &self.points[lm.index()]
    }

    fn check_rank(&self) -> Result<(), GeometryError> {
        let m = Matrix3xX::from_columns(&self.points);
        let sv = m.svd(false, false).singular_values;
        let max = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-9 * max.max(1.0)).count();
        if rank < 2 {
            return Err(GeometryError::DegenerateModel { rank });
        }
        Ok(())
    }
}

impl Default for FaceModel3D {
    fn default() -> Self {
        Self::generic()
    }
}
