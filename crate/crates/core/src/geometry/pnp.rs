//! Perspective-n-Point head pose from visible landmark correspondences.
//!
//! Several deterministic starting poses (a linear DLT estimate when six points
//! are visible, plus a small grid of frontal-ish orientations with a
//! closed-form translation) are each refined by Levenberg-Marquardt on the
//! squared pixel reprojection error. The lowest-cost converged result wins.

use nalgebra::{DMatrix, Matrix3, Matrix6, Point2, Rotation3, Vector3, Vector6};

use super::{
    angles_to_rotation, CameraIntrinsics, EulerAngles, FaceModel3D, GeometryError, HeadPose,
    Landmarks2D,
};

const MIN_CORRESPONDENCES: usize = 4;
const GRID_DEG: [f64; 3] = [-30.0, 0.0, 30.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpOptions {
    pub max_iterations: usize,
    /// Converged once an LM step is shorter than this.
    pub step_tolerance: f64,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: 1e-10,
        }
    }
}

struct Correspondences {
    model: Vec<Vector3<f64>>,
    image: Vec<Point2<f64>>,
}

pub fn solve_pnp(
    landmarks: &Landmarks2D,
    model: &FaceModel3D,
    intr: &CameraIntrinsics,
    opts: &PnpOptions,
) -> Result<HeadPose, GeometryError> {
    intr.validate()?;
    let mut corr = Correspondences {
        model: Vec::with_capacity(6),
        image: Vec::with_capacity(6),
    };
    for (p3, p2) in model.points().iter().zip(&landmarks.points) {
        if let Some(p2) = p2 {
            corr.model.push(*p3);
            corr.image.push(*p2);
        }
    }
    if corr.model.len() < MIN_CORRESPONDENCES {
        return Err(GeometryError::InsufficientCorrespondences {
            visible: corr.model.len(),
        });
    }
    if !landmarks.is_finite() {
        return Err(GeometryError::ProjectionDegenerate { z: f64::NAN });
    }

    let mut starts = Vec::with_capacity(GRID_DEG.len() * GRID_DEG.len() + 1);
    if corr.model.len() >= 6 {
        if let Some(s) = dlt_pose(&corr, intr) {
            starts.push(s);
        }
    }
    for &pitch in &GRID_DEG {
        for &yaw in &GRID_DEG {
            let r = angles_to_rotation(EulerAngles::new(pitch, yaw, 0.0));
            if let Some(t) = translation_for_rotation(&corr, intr, &r) {
                starts.push((r, t));
            }
        }
    }

    let mut best: Option<(HeadPose, f64)> = None;
    let mut last_failure = None;
    for (r0, t0) in starts {
        match refine(&corr, intr, r0, t0, opts) {
            Ok((pose, cost)) => {
                if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                    best = Some((pose, cost));
                }
            }
            Err(e) => last_failure = Some(e),
        }
    }
    match best {
        Some((pose, _)) => Ok(pose),
        None => Err(last_failure.unwrap_or(GeometryError::Convergence {
            iterations: 0,
            residual_px: f64::INFINITY,
        })),
    }
}

fn total_cost(
    corr: &Correspondences,
    intr: &CameraIntrinsics,
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
) -> f64 {
    let mut cost = 0.0;
    for (p, obs) in corr.model.iter().zip(&corr.image) {
        let pc = r * p + t;
        if !(pc.z > 0.0) {
            return f64::INFINITY;
        }
        let u = intr.fx * pc.x / pc.z + intr.cx - obs.x;
        let v = intr.fy * pc.y / pc.z + intr.cy - obs.y;
        cost += u * u + v * v;
    }
    cost
}

fn refine(
    corr: &Correspondences,
    intr: &CameraIntrinsics,
    mut r: Matrix3<f64>,
    mut t: Vector3<f64>,
    opts: &PnpOptions,
) -> Result<(HeadPose, f64), GeometryError> {
    let n = corr.model.len();
    let mut cost = total_cost(corr, intr, &r, &t);
    if !cost.is_finite() {
        return Err(GeometryError::ProjectionDegenerate { z: t.z });
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let mut h = Matrix6::<f64>::zeros();
        let mut g = Vector6::<f64>::zeros();
        for (p, obs) in corr.model.iter().zip(&corr.image) {
            let rp = r * p;
            let pc = rp + t;
            let iz = 1.0 / pc.z;
            let res = [
                intr.fx * pc.x * iz + intr.cx - obs.x,
                intr.fy * pc.y * iz + intr.cy - obs.y,
            ];
            // d(u,v)/d(pc)
            let du = Vector3::new(intr.fx * iz, 0.0, -intr.fx * pc.x * iz * iz);
            let dv = Vector3::new(0.0, intr.fy * iz, -intr.fy * pc.y * iz * iz);
            for (d, e) in [du, dv].iter().zip(res) {
                // d(pc)/d(omega) = -[rp]x, so row = d^T (-[rp]x) = (rp x d)^T
                let jr = rp.cross(d);
                let row = Vector6::new(jr.x, jr.y, jr.z, d.x, d.y, d.z);
                h += row * row.transpose();
                g += row * e;
            }
        }

        let mut damped = h;
        for i in 0..6 {
            damped[(i, i)] += lambda * h[(i, i)].max(1e-12);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-g))) else {
            lambda *= 10.0;
            continue;
        };
        let step_norm = step.norm();

        let omega = Vector3::new(step[0], step[1], step[2]);
        let r_new = Rotation3::new(omega).into_inner() * r;
        let t_new = t + Vector3::new(step[3], step[4], step[5]);
        let new_cost = total_cost(corr, intr, &r_new, &t_new);
        if new_cost < cost {
            r = r_new;
            t = t_new;
            cost = new_cost;
            lambda = (lambda / 10.0).max(1e-12);
        } else {
            lambda *= 10.0;
        }
        if step_norm < opts.step_tolerance {
            converged = true;
            break;
        }
    }

    let residual_px = (cost / n as f64).sqrt();
    if !converged {
        return Err(GeometryError::Convergence {
            iterations,
            residual_px,
        });
    }
    let r = orthonormalize(&r);
    let mut pose = HeadPose::new(r, t)?;
    pose.reprojection_error = residual_px;
    Ok((pose, cost))
}

fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    u * v_t
}

/// Least-squares translation for a fixed rotation:
/// `x_i (r3.P + tz) = r1.P + tx` (and likewise for y) is linear in `t`.
fn translation_for_rotation(
    corr: &Correspondences,
    intr: &CameraIntrinsics,
    r: &Matrix3<f64>,
) -> Option<Vector3<f64>> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (p, obs) in corr.model.iter().zip(&corr.image) {
        let q = intr.unproject(obs);
        let rp = r * p;
        let rows = [
            (Vector3::new(1.0, 0.0, -q.x), q.x * rp.z - rp.x),
            (Vector3::new(0.0, 1.0, -q.y), q.y * rp.z - rp.y),
        ];
        for (a, b) in rows {
            ata += a * a.transpose();
            atb += a * b;
        }
    }
    let t = ata.lu().solve(&atb)?;
    (t.z > 0.0 && t.iter().all(|v| v.is_finite())).then_some(t)
}

/// Direct linear transform on normalized image coordinates, projected back
/// onto a rotation.
fn dlt_pose(corr: &Correspondences, intr: &CameraIntrinsics) -> Option<(Matrix3<f64>, Vector3<f64>)> {
    let n = corr.model.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (p, obs)) in corr.model.iter().zip(&corr.image).enumerate() {
        let q = intr.unproject(obs);
        let x = [p.x, p.y, p.z, 1.0];
        for k in 0..4 {
            a[(2 * i, k)] = x[k];
            a[(2 * i, 8 + k)] = -q.x * x[k];
            a[(2 * i + 1, 4 + k)] = x[k];
            a[(2 * i + 1, 8 + k)] = -q.y * x[k];
        }
    }
    let svd = (a.transpose() * &a).svd(false, true);
    let v_t = svd.v_t?;
    let (min_idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let p = v_t.row(min_idx);
    let mut m = Matrix3::new(p[0], p[1], p[2], p[4], p[5], p[6], p[8], p[9], p[10]);
    let mut col = Vector3::new(p[3], p[7], p[11]);
    if m.determinant() < 0.0 {
        m = -m;
        col = -col;
    }
    let msvd = m.svd(true, true);
    let scale = msvd.singular_values.sum() / 3.0;
    if !(scale > 0.0) {
        return None;
    }
    let r = msvd.u? * msvd.v_t?;
    if r.determinant() < 0.0 {
        return None;
    }
    let t = col / scale;
    (t.z > 0.0).then_some((r, t))
}
