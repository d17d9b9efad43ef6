//! Density-based clustering of camera-plane gaze points.

use std::collections::HashMap;

use crate::geometry::GazePoint2D;

use super::ClusterError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assignment {
    Cluster(usize),
    Noise,
}

impl Assignment {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Assignment::Cluster(c) => Some(c),
            Assignment::Noise => None,
        }
    }
}

/// Uniform grid with cell size `eps`; a radius query only inspects the 3x3
/// block of cells around the query point.
struct GridIndex<'a> {
    points: &'a [GazePoint2D],
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [GazePoint2D], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::cell(p, eps)).or_default().push(i);
        }
        Self { points, eps, cells }
    }

    fn cell(p: &GazePoint2D, eps: f64) -> (i64, i64) {
        ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64)
    }

    fn neighbors(&self, idx: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = &self.points[idx];
        let (cx, cy) = Self::cell(p, self.eps);
        let eps2 = self.eps * self.eps;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(members) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &j in members {
                        let q = &self.points[j];
                        let (ex, ey) = (p.x - q.x, p.y - q.y);
                        if ex * ex + ey * ey <= eps2 {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Clusters `points` with radius `eps_mm`; a point is a core point when at
/// least `min_samples` points (itself included) lie within the radius.
/// Cluster ids are assigned in order of first discovery.
pub fn dbscan(
    points: &[GazePoint2D],
    eps_mm: f64,
    min_samples: usize,
) -> Result<Vec<Assignment>, ClusterError> {
    if !(eps_mm > 0.0) || min_samples == 0 {
        return Err(ClusterError::InvalidParams);
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(ClusterError::NonFinitePoint);
    }
    if points.len() < min_samples {
        return Err(ClusterError::NoClusters);
    }

    let index = GridIndex::new(points, eps_mm);
    let mut labels: Vec<Option<Assignment>> = vec![None; points.len()];
    let mut nbrs = Vec::new();
    let mut inner = Vec::new();
    let mut next_cluster = 0;

    for i in 0..points.len() {
        if labels[i].is_some() {
            continue;
        }
        index.neighbors(i, &mut nbrs);
        if nbrs.len() < min_samples {
            labels[i] = Some(Assignment::Noise);
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[i] = Some(Assignment::Cluster(cluster));
        let mut queue: Vec<usize> = nbrs.clone();
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            match labels[q] {
                Some(Assignment::Noise) => {
                    // border point
                    labels[q] = Some(Assignment::Cluster(cluster));
                    continue;
                }
                Some(Assignment::Cluster(_)) => continue,
                None => labels[q] = Some(Assignment::Cluster(cluster)),
            }
            index.neighbors(q, &mut inner);
            if inner.len() >= min_samples {
                queue.extend(inner.iter().copied().filter(|&j| {
                    !matches!(labels[j], Some(Assignment::Cluster(_)))
                }));
            }
        }
    }

    if next_cluster == 0 {
        return Err(ClusterError::NoClusters);
    }
    Ok(labels.into_iter().map(|l| l.unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> GazePoint2D {
        GazePoint2D { x, y }
    }

    #[test]
    fn border_point_joins_cluster() {
        // four points stacked at the origin plus one at distance eps
        let pts = vec![p(0.0, 0.0), p(0.0, 0.0), p(0.0, 0.0), p(0.0, 0.0), p(20.0, 0.0)];
        let a = dbscan(&pts, 20.0, 5).unwrap();
        assert!(a.iter().all(|x| *x == Assignment::Cluster(0)));
    }

    #[test]
    fn isolated_point_is_noise() {
        let mut pts = vec![p(0.0, 0.0); 6];
        pts.push(p(500.0, 500.0));
        let a = dbscan(&pts, 20.0, 5).unwrap();
        assert_eq!(a[6], Assignment::Noise);
        assert_eq!(a[0], Assignment::Cluster(0));
    }

    #[test]
    fn noise_first_then_reclaimed_as_border() {
        // index 0 is not core on its own but borders the core at index 1..
        let mut pts = vec![p(-19.0, 0.0)];
        pts.extend(std::iter::repeat_n(p(0.0, 0.0), 4));
        pts.push(p(5.0, 0.0));
        let a = dbscan(&pts, 20.0, 6).unwrap();
        assert_eq!(a[0], Assignment::Cluster(0));
    }

    #[test]
    fn invalid_params() {
        assert_eq!(dbscan(&[p(0.0, 0.0)], 0.0, 1), Err(ClusterError::InvalidParams));
        assert_eq!(
            dbscan(&[p(f64::NAN, 0.0)], 1.0, 1),
            Err(ClusterError::NonFinitePoint)
        );
    }
}
