//! Pitch/yaw/roll convention.
//!
//! The head's forward direction is `d = -R * e_z` in camera coordinates, so a
//! frontal face (identity rotation) looks along `(0, 0, -1)` into the camera.
//! Pitch is positive when looking up (image y points down), yaw is positive
//! when looking towards the camera's left (-x):
//!
//! ```text
//! pitch = asin(-d_y)
//! yaw   = atan2(-d_x, -d_z)
//! R     = Ry(yaw) * Rx(-pitch) * Rz(roll)
//! ```

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// Head orientation angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(pitch: f64, yaw: f64, roll: f64) -> Self {
        Self { pitch, yaw, roll }
    }
}

/// Builds the rotation whose decomposition is `angles`.
pub fn angles_to_rotation(angles: EulerAngles) -> Matrix3<f64> {
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), angles.yaw.to_radians());
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), -angles.pitch.to_radians());
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), angles.roll.to_radians());
    (ry * rx * rz).into_inner()
}

/// Forward (looking) direction of a rotated head frame.
pub fn forward_axis(rotation: &Matrix3<f64>) -> Vector3<f64> {
    -rotation.column(2).into_owned()
}

/// Decomposes an orthonormal rotation into pitch, yaw and roll (degrees).
///
/// At the gimbal singularity (`|d_y| = 1`) yaw is reported as 0 and pitch as
/// +/-90, with the remaining rotation assigned to roll.
pub fn rotation_to_angles(rotation: &Matrix3<f64>) -> EulerAngles {
    let d = forward_axis(rotation);
    let sin_pitch = (-d.y).clamp(-1.0, 1.0);
    let pitch = sin_pitch.asin();
    let yaw = if (d.x * d.x + d.z * d.z) <= f64::EPSILON * f64::EPSILON {
        0.0
    } else {
        (-d.x).atan2(-d.z)
    };
    // Rz(roll) = Rx(-pitch)^T * Ry(yaw)^T * R
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw);
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), -pitch);
    let rz = (ry * rx).inverse().into_inner() * rotation;
    let roll = rz[(1, 0)].atan2(rz[(0, 0)]);
    EulerAngles {
        pitch: pitch.to_degrees(),
        yaw: yaw.to_degrees(),
        roll: roll.to_degrees(),
    }
}

/// Geodesic angle between two rotations, in degrees.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = a.transpose() * b;
    let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    // acos loses precision near zero; use the skew part as well
    let skew = Vector3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    );
    let sin = skew.norm() / 2.0;
    sin.atan2(cos).to_degrees()
}
