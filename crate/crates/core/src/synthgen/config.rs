use serde::{Deserialize, Serialize};

use crate::geometry::CameraIntrinsics;
use crate::pipeline::VisibilityCategory;

use super::GeneratorError;

/// Inclusive millimetre interval.
pub type RangeMm = [f64; 2];

/// Head orientation in normalized camera space, per axis in degrees.
///
/// Each axis is drawn from a central Gaussian or, with probability
/// `tail_weight`, from a wide one, then shifted by a per-person offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadPoseDistribution {
    pub pitch_mean_deg: f64,
    pub yaw_mean_deg: f64,
    pub pitch_sigma_deg: f64,
    pub yaw_sigma_deg: f64,
    pub tail_weight: f64,
    pub tail_sigma_deg: f64,
    pub roll_sigma_deg: f64,
    pub person_offset_sigma_deg: f64,
    /// Samples are clamped to +/- this value.
    pub max_abs_deg: f64,
}

impl Default for HeadPoseDistribution {
    fn default() -> Self {
        Self {
            pitch_mean_deg: 0.0,
            yaw_mean_deg: 0.0,
            pitch_sigma_deg: 10.0,
            yaw_sigma_deg: 10.0,
            tail_weight: 0.15,
            tail_sigma_deg: 30.0,
            roll_sigma_deg: 3.0,
            person_offset_sigma_deg: 3.0,
            max_abs_deg: 75.0,
        }
    }
}

/// Objects other than the device that people look at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentConfig {
    /// Distinct targets per person, placed on the camera plane.
    pub targets_per_person: usize,
    /// Distance of environment targets from the camera.
    pub radius_mm: RangeMm,
    /// Per-frame spread of the looked-at point around a target.
    pub spread_mm: f64,
    /// Share of non-contact frames that look away from the device plane
    /// altogether instead of at a target.
    pub p_away: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            targets_per_person: 3,
            radius_mm: [450.0, 800.0],
            spread_mm: 25.0,
            p_away: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_persons: usize,
    pub frames_per_person: usize,
    pub p_contact: f64,
    pub screen_x_mm: RangeMm,
    pub screen_y_mm: RangeMm,
    pub face_distance_mm: RangeMm,
    /// Lateral spread of the face centre (x and y).
    pub face_offset_sigma_mm: f64,
    pub head_pose: HeadPoseDistribution,
    pub environment: EnvironmentConfig,
    pub pixel_noise_sigma: f64,
    pub gaze_noise_deg: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    /// Scale of per-person perturbations to the shared feature embedding.
    pub person_variation: f64,
    /// Category weights in `VisibilityCategory::ALL` order.
    pub visibility_weights: [f64; 8],
    /// Gaze and feature noise multiplier per category (same order).
    pub category_noise: [f64; 8],
    /// Extra noise for turned heads: the multiplier grows by
    /// `gain * (pitch^2 + yaw^2) / 30^2`.
    pub pose_noise_gain: f64,
    pub intrinsics: CameraIntrinsics,
    /// Seeds the shared feature embedding, i.e. the appearance model that all
    /// datasets are seen through. Keep it fixed when comparing datasets.
    pub extractor_seed: u64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_persons: 10,
            frames_per_person: 500,
            p_contact: 0.5,
            screen_x_mm: [-35.0, 35.0],
            screen_y_mm: [10.0, 150.0],
            face_distance_mm: [250.0, 450.0],
            face_offset_sigma_mm: 40.0,
            head_pose: HeadPoseDistribution::default(),
            environment: EnvironmentConfig::default(),
            pixel_noise_sigma: 0.5,
            gaze_noise_deg: 2.0,
            feature_dim: 64,
            feature_noise: 0.05,
            person_variation: 0.1,
            visibility_weights: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            category_noise: [1.0, 1.5, 2.0, 3.0, 6.0, 8.0, 8.0, 10.0],
            pose_noise_gain: 3.0,
            intrinsics: CameraIntrinsics::default(),
            extractor_seed: 0,
            seed: 0,
        }
    }
}

fn check(ok: bool, msg: &'static str) -> Result<(), GeneratorError> {
    if ok {
        Ok(())
    } else {
        Err(GeneratorError::InvalidConfig(msg))
    }
}

fn range_ok(r: &RangeMm) -> bool {
    r[0].is_finite() && r[1].is_finite() && r[0] < r[1]
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        check(self.n_persons >= 1, "n_persons must be at least 1")?;
        check(self.frames_per_person >= 1, "frames_per_person must be at least 1")?;
        check(self.p_contact > 0.0 && self.p_contact < 1.0, "p_contact must lie in (0, 1)")?;
        check(range_ok(&self.screen_x_mm), "screen_x_mm must be a non-empty range")?;
        check(range_ok(&self.screen_y_mm), "screen_y_mm must be a non-empty range")?;
        check(
            range_ok(&self.face_distance_mm) && self.face_distance_mm[0] > 0.0,
            "face_distance_mm must be a non-empty positive range",
        )?;
        check(self.face_offset_sigma_mm >= 0.0, "face_offset_sigma_mm must be non-negative")?;
        let hp = &self.head_pose;
        check(
            [hp.pitch_sigma_deg, hp.yaw_sigma_deg, hp.tail_sigma_deg, hp.roll_sigma_deg, hp.person_offset_sigma_deg]
                .iter()
                .all(|s| *s >= 0.0 && s.is_finite()),
            "head pose sigmas must be non-negative",
        )?;
        check((0.0..=1.0).contains(&hp.tail_weight), "tail_weight must lie in [0, 1]")?;
        check(hp.max_abs_deg > 0.0 && hp.max_abs_deg < 85.0, "max_abs_deg must lie in (0, 85)")?;
        check(hp.pitch_mean_deg.is_finite() && hp.yaw_mean_deg.is_finite(), "pose means must be finite")?;
        let env = &self.environment;
        check(env.targets_per_person >= 1, "need at least one environment target")?;
        check(range_ok(&env.radius_mm) && env.radius_mm[0] > 0.0, "environment radius must be a positive range")?;
        check(env.spread_mm >= 0.0, "environment spread must be non-negative")?;
        check((0.0..=1.0).contains(&env.p_away), "p_away must lie in [0, 1]")?;
        check(self.pixel_noise_sigma >= 0.0, "pixel_noise_sigma must be non-negative")?;
        check(self.gaze_noise_deg >= 0.0, "gaze_noise_deg must be non-negative")?;
        check(self.feature_dim >= 5, "feature_dim must be at least 5")?;
        check(self.feature_noise >= 0.0, "feature_noise must be non-negative")?;
        check(self.person_variation >= 0.0, "person_variation must be non-negative")?;
        check(
            self.visibility_weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
            "visibility weights must be non-negative",
        )?;
        check(
            (self.visibility_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
            "visibility weights must sum to 1",
        )?;
        check(self.category_noise.iter().all(|m| *m > 0.0), "category noise multipliers must be positive")?;
        check(self.pose_noise_gain >= 0.0, "pose_noise_gain must be non-negative")?;
        self.intrinsics
            .validate()
            .map_err(|_| GeneratorError::InvalidConfig("invalid intrinsics"))?;
        Ok(())
    }

    pub fn visibility_weight(&self, c: VisibilityCategory) -> f64 {
        self.visibility_weights[c.index()]
    }
}
