//! 5x5 grid over normalized head pitch and yaw.

/// Per-axis bucket edges in degrees: (-inf,-20), [-20,-10), [-10,10),
/// [10,20), [20,inf).
pub const BUCKET_EDGES_DEG: [f64; 4] = [-20.0, -10.0, 10.0, 20.0];

const BUCKET_NAMES: [&str; 5] = ["(-inf,-20)", "[-20,-10)", "[-10,10)", "[10,20)", "[20,inf)"];

pub fn axis_bucket(angle_deg: f64) -> usize {
    BUCKET_EDGES_DEG.iter().filter(|&&e| angle_deg >= e).count()
}

/// `(row, col)` = (pitch bucket, yaw bucket).
pub fn bucket_head_pose(pitch_n: f64, yaw_n: f64) -> (usize, usize) {
    (axis_bucket(pitch_n), axis_bucket(yaw_n))
}

pub fn bucket_id(row: usize, col: usize) -> String {
    format!("pitch{} yaw{}", BUCKET_NAMES[row], BUCKET_NAMES[col])
}
