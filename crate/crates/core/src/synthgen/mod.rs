//! Deterministic synthetic stand-in for in-the-wild mobile interaction data.
//!
//! Each frame samples a face position and head pose, picks what the person
//! looks at (a point on the screen next to the camera, an environment target,
//! or somewhere away from the device plane), and emits the landmarks, a noisy
//! gaze estimate in normalized space, an appearance feature vector and the
//! ground-truth eye contact label. Every frame draws from its own ChaCha
//! stream keyed by (person, frame), so the output does not depend on
//! generation order.

mod config;

pub use config::{EnvironmentConfig, GeneratorConfig, HeadPoseDistribution, RangeMm};

use nalgebra::{DMatrix, DVector, Matrix3, Point2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    angles_to_rotation, intersect_gaze_with_camera_plane, project_points, EulerAngles,
    FaceModel3D, GazePoint2D, GazeVector, HeadPose, Landmark, Landmarks2D,
};
use crate::normalization::{compute_normalization, normalize_gaze, normalize_head_pose, NormParams};
use crate::pipeline::{FrameRecord, FrameTruth, VisibilityCategory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(&'static str),
}

/// Number of inputs to the feature embedding: normalized gaze (3), pitch, yaw.
pub const EMBEDDING_INPUTS: usize = 5;

const SHARED_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct PersonProfile {
    pub person_id: String,
    /// `feature_dim x 5`
    pub embedding: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Added to every sampled (pitch, yaw), degrees.
    pub pose_offset_deg: (f64, f64),
    pub env_targets: Vec<GazePoint2D>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn person_stream(person: usize) -> u64 {
    (person as u64 + 1) << 32
}

fn frame_stream(person: usize, frame: usize) -> u64 {
    person_stream(person) | (frame as u64 + 1)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn shared_embedding(cfg: &GeneratorConfig) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = stream_rng(cfg.extractor_seed, SHARED_STREAM);
    let a = DMatrix::from_fn(cfg.feature_dim, EMBEDDING_INPUTS, |_, _| normal(&mut rng));
    let b = DVector::from_fn(cfg.feature_dim, |_, _| 0.5 * normal(&mut rng));
    (a, b)
}

pub fn person_profile(cfg: &GeneratorConfig, person: usize) -> PersonProfile {
    let (a, b) = shared_embedding(cfg);
    build_profile(cfg, person, &a, &b)
}

fn build_profile(
    cfg: &GeneratorConfig,
    person: usize,
    shared_a: &DMatrix<f64>,
    shared_b: &DVector<f64>,
) -> PersonProfile {
    let mut rng = stream_rng(cfg.seed, person_stream(person));
    let v = cfg.person_variation;
    let embedding = shared_a.map(|x| x + v * normal(&mut rng));
    let bias = shared_b.map(|x| x + v * normal(&mut rng));
    let s = cfg.head_pose.person_offset_sigma_deg;
    let pose_offset_deg = (s * normal(&mut rng), s * normal(&mut rng));
    let env = &cfg.environment;
    let env_targets = (0..env.targets_per_person)
        .map(|_| {
            let r = rng.random_range(env.radius_mm[0]..=env.radius_mm[1]);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            GazePoint2D {
                x: r * phi.cos(),
                y: r * phi.sin(),
            }
        })
        .collect();
    PersonProfile {
        person_id: format!("P{person:02}"),
        embedding,
        bias,
        pose_offset_deg,
        env_targets,
    }
}

/// Appearance feature: `A * [g_n, pitch_n / 90, yaw_n / 90] + b + noise`.
pub fn synth_feature<R: Rng + ?Sized>(
    gaze_n: &GazeVector,
    pitch_n: f64,
    yaw_n: f64,
    profile: &PersonProfile,
    noise_sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    let g = gaze_n.as_vector();
    let input = DVector::from_column_slice(&[g.x, g.y, g.z, pitch_n / 90.0, yaw_n / 90.0]);
    let clean = &profile.embedding * input + &profile.bias;
    clean
        .iter()
        .map(|v| {
            let n: f64 = StandardNormal.sample(rng);
            v + noise_sigma * n
        })
        .collect()
}

/// Rotation whose third row points at `center` and whose first row has no
/// camera-y component. Its transpose maps normalized-space head rotations
/// back to the camera frame without introducing roll.
fn view_frame(center: &Vector3<f64>) -> Matrix3<f64> {
    let z = center.normalize();
    let x = Vector3::y().cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

/// Rotates `g` by independent Gaussian angles (radians) about two axes
/// perpendicular to it.
fn perturb_direction(g: &Vector3<f64>, sigma_rad: f64, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let helper = if g.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = g.cross(&helper).normalize();
    let e2 = g.cross(&e1);
    let a = sigma_rad * normal(rng);
    let b = sigma_rad * normal(rng);
    (g + a.tan() * e1 + b.tan() * e2).normalize()
}

fn sample_axis(mean: f64, offset: f64, sigma: f64, hp: &HeadPoseDistribution, rng: &mut ChaCha8Rng) -> f64 {
    let tail = rng.random_bool(hp.tail_weight);
    let s = if tail { hp.tail_sigma_deg } else { sigma };
    (mean + offset + s * normal(rng)).clamp(-hp.max_abs_deg, hp.max_abs_deg)
}

fn sample_category(weights: &[f64; 8], u: f64) -> VisibilityCategory {
    let mut acc = 0.0;
    for (c, w) in VisibilityCategory::ALL.iter().zip(weights) {
        acc += w;
        if u < acc && *w > 0.0 {
            return *c;
        }
    }
    // rounding at the top end: last category with non-zero weight
    *VisibilityCategory::ALL
        .iter()
        .zip(weights)
        .rev()
        .find(|(_, w)| **w > 0.0)
        .map(|(c, _)| c)
        .unwrap()
}

const RIGHT_EYE: [Landmark; 2] = [Landmark::RightEyeOuter, Landmark::RightEyeInner];
const LEFT_EYE: [Landmark; 2] = [Landmark::LeftEyeInner, Landmark::LeftEyeOuter];
const MOUTH: [Landmark; 2] = [Landmark::RightMouth, Landmark::LeftMouth];

fn apply_visibility(lm: &mut Landmarks2D, cat: VisibilityCategory, rng: &mut ChaCha8Rng) {
    use VisibilityCategory::*;
    let one_eye = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { RIGHT_EYE } else { LEFT_EYE };
    let hidden: Vec<Landmark> = match cat {
        WholeFaceAllLandmarks | PartialTwoEyesMouth => vec![],
        WholeFaceSomeLandmarks => {
            let n = rng.random_range(1..=2);
            let mut pool = Landmark::ALL.to_vec();
            (0..n).map(|_| pool.remove(rng.random_range(0..pool.len()))).collect()
        }
        PartialTwoEyesNoMouth => MOUTH.to_vec(),
        PartialOneEyeMouth => one_eye(rng).to_vec(),
        PartialOneEyeNoMouth => {
            let mut h = one_eye(rng).to_vec();
            h.extend(MOUTH);
            h
        }
        PartialNoEyesMouth => RIGHT_EYE.iter().chain(&LEFT_EYE).copied().collect(),
        NoFace => Landmark::ALL.to_vec(),
    };
    for l in hidden {
        lm.hide(l);
    }
}

enum Target {
    Device(GazePoint2D),
    Environment(GazePoint2D),
    Away(Vector3<f64>),
}

fn generate_frame(
    cfg: &GeneratorConfig,
    model: &FaceModel3D,
    profile: &PersonProfile,
    person: usize,
    frame: usize,
) -> FrameRecord {
    let mut rng = stream_rng(cfg.seed, frame_stream(person, frame));
    let hp = &cfg.head_pose;

    let center = Vector3::new(
        cfg.face_offset_sigma_mm * normal(&mut rng),
        cfg.face_offset_sigma_mm * normal(&mut rng),
        rng.random_range(cfg.face_distance_mm[0]..=cfg.face_distance_mm[1]),
    );
    let pitch = sample_axis(hp.pitch_mean_deg, profile.pose_offset_deg.0, hp.pitch_sigma_deg, hp, &mut rng);
    let yaw = sample_axis(hp.yaw_mean_deg, profile.pose_offset_deg.1, hp.yaw_sigma_deg, hp, &mut rng);
    let roll = hp.roll_sigma_deg * normal(&mut rng);
    let rotation = view_frame(&center).transpose() * angles_to_rotation(EulerAngles::new(pitch, yaw, roll));
    let pose = HeadPose::new(rotation, center).expect("generated pose is valid");

    let target = if rng.random_bool(cfg.p_contact) {
        Target::Device(GazePoint2D {
            x: rng.random_range(cfg.screen_x_mm[0]..=cfg.screen_x_mm[1]),
            y: rng.random_range(cfg.screen_y_mm[0]..=cfg.screen_y_mm[1]),
        })
    } else if rng.random_bool(cfg.environment.p_away) {
        // up to 30 degrees past the device plane, any azimuth
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let elev = rng.random_range(0.0f64..30.0).to_radians();
        Target::Away(Vector3::new(elev.cos() * phi.cos(), elev.cos() * phi.sin(), elev.sin()))
    } else {
        let k = rng.random_range(0..profile.env_targets.len());
        let t = profile.env_targets[k];
        let s = cfg.environment.spread_mm;
        Target::Environment(GazePoint2D {
            x: t.x + s * normal(&mut rng),
            y: t.y + s * normal(&mut rng),
        })
    };
    let (gaze_dir, target_point, contact) = match target {
        Target::Device(p) => (Vector3::new(p.x, p.y, 0.0) - center, Some(p), true),
        Target::Environment(p) => (Vector3::new(p.x, p.y, 0.0) - center, Some(p), false),
        Target::Away(d) => (d, None, false),
    };
    let gaze = GazeVector::new(gaze_dir).expect("gaze target differs from face centre");

    let norm = compute_normalization(&pose, &center, &NormParams::default())
        .expect("generated head is not rolled onto the view ray");
    let (pitch_n, yaw_n) = normalize_head_pose(&norm, &pose);
    let gaze_n = normalize_gaze(&norm, &gaze);

    let cat_u: f64 = rng.random();
    let category = sample_category(&cfg.visibility_weights, cat_u);
    let degrade = cfg.category_noise[category.index()]
        * (1.0 + cfg.pose_noise_gain * (pitch_n * pitch_n + yaw_n * yaw_n) / (30.0 * 30.0));

    let estimate = perturb_direction(
        gaze_n.as_vector(),
        (cfg.gaze_noise_deg * degrade).to_radians(),
        &mut rng,
    );
    let feature = synth_feature(&gaze_n, pitch_n, yaw_n, profile, cfg.feature_noise * degrade, &mut rng);

    let px = project_points(model, &pose, &cfg.intrinsics).expect("face is in front of the camera");
    let px = px.map(|p| {
        Point2::new(
            p.x + cfg.pixel_noise_sigma * normal(&mut rng),
            p.y + cfg.pixel_noise_sigma * normal(&mut rng),
        )
    });
    let mut landmarks = Landmarks2D::all(px);
    apply_visibility(&mut landmarks, category, &mut rng);

    FrameRecord {
        person_id: profile.person_id.clone(),
        frame_id: format!("{}-{frame:05}", profile.person_id),
        landmarks,
        intrinsics: cfg.intrinsics,
        visibility_category: category,
        feature: Some(feature),
        gaze_estimate: Some(GazeVector::new(estimate).expect("unit")),
        gt_eye_contact: Some(contact),
        truth: Some(FrameTruth {
            gaze,
            face_center: center,
            pitch_n,
            yaw_n,
            target: target_point,
        }),
    }
}

pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<Vec<FrameRecord>, GeneratorError> {
    cfg.validate()?;
    let model = FaceModel3D::generic();
    let (a, b) = shared_embedding(cfg);
    let profiles: Vec<PersonProfile> = (0..cfg.n_persons)
        .map(|p| build_profile(cfg, p, &a, &b))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.n_persons)
        .flat_map(|p| (0..cfg.frames_per_person).map(move |f| (p, f)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(p, f)| generate_frame(cfg, &model, &profiles[p], p, f))
        .collect())
}

/// Where the true gaze ray meets the camera plane, if it does.
pub fn true_gaze_point(truth: &FrameTruth) -> Option<GazePoint2D> {
    intersect_gaze_with_camera_plane(&truth.face_center, &truth.gaze).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            n_persons: 3,
            frames_per_person: 40,
            ..Default::default()
        }
    }

    #[test]
    fn identity_embedding_passes_gaze_through() {
        let d = 8;
        let profile = PersonProfile {
            person_id: "x".into(),
            embedding: DMatrix::from_fn(d, 5, |r, c| if r == c { 1.0 } else { 0.0 }),
            bias: DVector::zeros(d),
            pose_offset_deg: (0.0, 0.0),
            env_targets: vec![],
        };
        let g = GazeVector::new(Vector3::new(0.1, -0.2, -0.9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = synth_feature(&g, 9.0, -18.0, &profile, 0.0, &mut rng);
        assert_eq!(&f[..3], &[g.x(), g.y(), g.z()]);
        assert_eq!(f[3], 0.1);
        assert_eq!(f[4], -0.2);
        assert!(f[5..].iter().all(|v| *v == 0.0));
        let again = synth_feature(&g, 9.0, -18.0, &profile, 0.0, &mut rng);
        assert_eq!(f, again);
    }

    #[test]
    fn frames_are_order_independent() {
        let cfg = small();
        let all = generate_dataset(&cfg).unwrap();
        let profile = person_profile(&cfg, 2);
        let one = generate_frame(&cfg, &FaceModel3D::generic(), &profile, 2, 7);
        assert_eq!(all[2 * 40 + 7], one);
    }

    #[test]
    fn view_frame_has_no_roll_on_axis() {
        let r = view_frame(&Vector3::new(0.0, 0.0, 300.0));
        assert!((r - Matrix3::identity()).abs().max() < 1e-15);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small();
        cfg.p_contact = 1.0;
        assert!(generate_dataset(&cfg).is_err());
        let mut cfg = small();
        cfg.visibility_weights = [0.5; 8];
        assert!(generate_dataset(&cfg).is_err());
        let mut cfg = small();
        cfg.screen_x_mm = [10.0, 10.0];
        assert!(generate_dataset(&cfg).is_err());
    }

    #[test]
    fn categories_match_landmark_counts() {
        let mut cfg = small();
        cfg.visibility_weights = [0.125; 8];
        for r in generate_dataset(&cfg).unwrap() {
            assert!(r.visibility_category.is_consistent_with(r.landmarks.visible_count()));
        }
    }
}
