//! Pose recovery and normalization checked against forward-projected ground truth.

use approx::assert_abs_diff_eq;
use eyecontact::geometry::{
    angles_to_rotation, face_center, project_points, rotation_angle_between, solve_pnp,
    CameraIntrinsics, EulerAngles, FaceModel3D, GazeVector, HeadPose, Landmark, Landmarks2D,
    PnpOptions,
};
use eyecontact::normalization::{
    compute_normalization, denormalize_gaze, normalize_gaze, normalize_head_pose, NormParams,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn pose(pitch: f64, yaw: f64, roll: f64, t: [f64; 3]) -> HeadPose {
    HeadPose::new(
        angles_to_rotation(EulerAngles::new(pitch, yaw, roll)),
        Vector3::from(t),
    )
    .unwrap()
}

fn angle() -> impl Strategy<Value = f64> {
    -40.0..40.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn noiseless_pose_is_recovered(
        pitch in angle(), yaw in angle(), roll in angle(),
        x in -60.0..60.0f64, y in -60.0..60.0f64, z in 200.0..600.0f64,
    ) {
        let model = FaceModel3D::generic();
        let intr = CameraIntrinsics::default();
        let truth = pose(pitch, yaw, roll, [x, y, z]);
        let px = project_points(&model, &truth, &intr).unwrap();
        let est = solve_pnp(&Landmarks2D::all(px), &model, &intr, &PnpOptions::default()).unwrap();
        prop_assert!(rotation_angle_between(&est.rotation, &truth.rotation) < 0.01);
        prop_assert!((est.translation - truth.translation).norm() < 0.1);
        prop_assert!(est.reprojection_error < 1e-6);
    }

    #[test]
    fn four_landmarks_suffice_without_noise(
        pitch in -25.0..25.0f64, yaw in -25.0..25.0f64, z in 250.0..500.0f64,
        hidden in 0usize..4,
    ) {
        let model = FaceModel3D::generic();
        let intr = CameraIntrinsics::default();
        let truth = pose(pitch, yaw, 0.0, [0.0, 20.0, z]);
        let mut lm = Landmarks2D::all(project_points(&model, &truth, &intr).unwrap());
        // drop the mouth corners or two eye corners
        let drops = [
            [Landmark::RightMouth, Landmark::LeftMouth],
            [Landmark::RightEyeOuter, Landmark::LeftMouth],
            [Landmark::LeftEyeOuter, Landmark::RightMouth],
            [Landmark::RightEyeInner, Landmark::LeftEyeInner],
        ][hidden];
        for l in drops {
            lm.hide(l);
        }
        let est = solve_pnp(&lm, &model, &intr, &PnpOptions::default()).unwrap();
        prop_assert!(rotation_angle_between(&est.rotation, &truth.rotation) < 0.01);
    }

    #[test]
    fn normalization_invariants(
        pitch in angle(), yaw in angle(), roll in angle(),
        x in -100.0..100.0f64, y in -100.0..100.0f64, z in 200.0..800.0f64,
        gx in -1.0..1.0f64, gy in -1.0..1.0f64, gz in -1.0..-0.1f64,
    ) {
        let truth = pose(pitch, yaw, roll, [x, y, z]);
        let center = face_center(&FaceModel3D::generic(), &truth);
        let params = NormParams::default();
        let t = compute_normalization(&truth, &center, &params).unwrap();
        let c = t.apply_to_point(&center);
        prop_assert!((c - Vector3::new(0.0, 0.0, params.distance_mm)).norm() < 1e-6);
        let head_x = t.rotation * truth.rotation.column(0);
        prop_assert!(head_x.y.abs() < 1e-9);
        let g = GazeVector::new(Vector3::new(gx, gy, gz)).unwrap();
        let back = denormalize_gaze(&t, &normalize_gaze(&t, &g));
        prop_assert!((back.as_vector() - g.as_vector()).norm() < 1e-12);
    }
}

#[test]
fn face_at_optical_axis_looking_into_camera_has_zero_normalized_pose() {
    // head faces the camera: forward axis points towards -z
    let truth = pose(0.0, 0.0, 0.0, [0.0, 0.0, 400.0]);
    let center = face_center(&FaceModel3D::generic(), &truth);
    let t = compute_normalization(&truth, &center, &NormParams::default()).unwrap();
    let (p, y) = normalize_head_pose(&t, &truth);
    assert_abs_diff_eq!(p, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(y, 0.0, epsilon = 1e-9);
}

#[test]
fn off_axis_face_turned_towards_camera_is_frontal_after_normalization() {
    let center = Vector3::new(120.0_f64, -80.0, 350.0);
    // rotate the head so its forward axis points at the camera centre
    let dir: Vector3<f64> = -center.normalize();
    let yaw = (-dir.x).atan2(-dir.z).to_degrees();
    let pitch = (-dir.y).asin().to_degrees();
    let truth = pose(pitch, yaw, 0.0, center.into());
    let t = compute_normalization(&truth, &center, &NormParams::default()).unwrap();
    let (p, y) = normalize_head_pose(&t, &truth);
    assert_abs_diff_eq!(p, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(y, 0.0, epsilon = 1e-9);
}
