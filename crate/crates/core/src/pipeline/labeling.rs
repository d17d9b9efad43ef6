use crate::geometry::GazePoint2D;

use super::dbscan::{dbscan, Assignment};
use super::{ClusterError, ClusterParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabeling {
    pub assignments: Vec<Assignment>,
    pub target_cluster: usize,
    /// `None` for noise points, which are left out of training.
    pub labels: Vec<Option<bool>>,
}

impl ClusterLabeling {
    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.len() - self.labeled_count()
    }
}

pub fn cluster_gaze_points(
    points: &[GazePoint2D],
    params: &ClusterParams,
) -> Result<Vec<Assignment>, ClusterError> {
    dbscan(points, params.eps_mm, params.min_samples)
}

/// The cluster whose centroid is closest to the camera (the origin); ties go
/// to the lower cluster id.
pub fn select_target_cluster(
    assignments: &[Assignment],
    points: &[GazePoint2D],
) -> Result<usize, ClusterError> {
    select_target_cluster_sized(assignments, points, 0.0)
}

/// Like [`select_target_cluster`], but only clusters holding at least
/// `min_fraction` of all clustered points compete. If none qualifies, all do.
pub fn select_target_cluster_sized(
    assignments: &[Assignment],
    points: &[GazePoint2D],
    min_fraction: f64,
) -> Result<usize, ClusterError> {
    if assignments.len() != points.len() {
        return Err(ClusterError::LengthMismatch {
            assignments: assignments.len(),
            points: points.len(),
        });
    }
    let n_clusters = assignments
        .iter()
        .filter_map(|a| a.cluster())
        .max()
        .map_or(0, |m| m + 1);
    if n_clusters == 0 {
        return Err(ClusterError::NoClusters);
    }
    let mut sums = vec![(0.0, 0.0, 0usize); n_clusters];
    for (a, p) in assignments.iter().zip(points) {
        if let Some(c) = a.cluster() {
            sums[c].0 += p.x;
            sums[c].1 += p.y;
            sums[c].2 += 1;
        }
    }
    let clustered: usize = sums.iter().map(|s| s.2).sum();
    let min_size = (min_fraction * clustered as f64).max(1.0);
    let nearest = |min_size: f64| {
        let mut best: Option<(usize, f64)> = None;
        for (id, &(sx, sy, n)) in sums.iter().enumerate() {
            if (n as f64) < min_size {
                continue;
            }
            let norm = (sx / n as f64).hypot(sy / n as f64);
            if best.is_none_or(|(_, b)| norm < b) {
                best = Some((id, norm));
            }
        }
        best.map(|(id, _)| id)
    };
    nearest(min_size)
        .or_else(|| nearest(1.0))
        .ok_or(ClusterError::NoClusters)
}

pub fn derive_labels(assignments: &[Assignment], target: usize) -> Result<ClusterLabeling, ClusterError> {
    if !assignments.contains(&Assignment::Cluster(target)) {
        return Err(ClusterError::UnknownTarget(target));
    }
    let labels = assignments
        .iter()
        .map(|a| a.cluster().map(|c| c == target))
        .collect();
    Ok(ClusterLabeling {
        assignments: assignments.to_vec(),
        target_cluster: target,
        labels,
    })
}

/// Cluster, pick the camera-adjacent cluster among the sizeable ones, and label.
pub fn label_by_clustering(
    points: &[GazePoint2D],
    params: &ClusterParams,
) -> Result<ClusterLabeling, ClusterError> {
    let assignments = cluster_gaze_points(points, params)?;
    let target = select_target_cluster_sized(&assignments, points, params.min_target_fraction)?;
    derive_labels(&assignments, target)
}
