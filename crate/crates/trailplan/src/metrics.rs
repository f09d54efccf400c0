//! Swept-path metrics of a planned trajectory: extreme lateral offsets of
//! any body point left and right of the road center, and the signed
//! difference between the areas swept beyond the centerline on either side.

use serde::Serialize;

use crate::corridor::{body_offsets, BodyPointSet};
use crate::error::PlanError;
use crate::geometry::ReferencePath;
use crate::planner::Trajectory;
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics {
    /// Largest lateral offset of any body point (positive left).
    pub max_left: f64,
    /// Smallest (most negative) lateral offset of any body point.
    pub max_right: f64,
    /// Area swept left of the centerline minus area swept right of it.
    pub area_diff: f64,
    /// Wall-clock planning time in seconds.
    pub cpu_time: f64,
}

/// Compute the swept-path metrics from per-station body offsets.
///
/// Offsets are binned to the grid station nearest their own projected arc
/// length, so each body point contributes to the envelope where it actually
/// sits on the road. Areas count only the region beyond the centerline:
/// driving perfectly centered yields zero area difference.
pub fn compute_metrics(
    path: &ReferencePath,
    params: &VehicleParams,
    trajectory: &Trajectory,
    body_points: &BodyPointSet,
    wall_time: f64,
) -> Result<Metrics, PlanError> {
    let stations = &trajectory.stations;
    assert!(stations.len() >= 2, "trajectory needs at least two stations");
    let ds = stations[1] - stations[0];
    let s0 = stations[0];
    let n_bins = stations.len();
    let mut left_env = vec![0.0f64; n_bins];
    let mut right_env = vec![0.0f64; n_bins];
    let mut max_left = f64::NEG_INFINITY;
    let mut max_right = f64::INFINITY;

    for (i, z) in trajectory.states.iter().enumerate() {
        let offsets = body_offsets(path, params, body_points, stations[i], z)?;
        for (s_j, off) in offsets {
            max_left = max_left.max(off);
            max_right = max_right.min(off);
            let bin = ((s_j - s0) / ds).round();
            if bin >= 0.0 && bin < n_bins as f64 {
                let b = bin as usize;
                left_env[b] = left_env[b].max(off);
                right_env[b] = right_env[b].min(off);
            }
        }
    }

    let trapezoid = |f: &[f64]| -> f64 {
        let mut acc = 0.0;
        for w in f.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * ds;
        }
        acc
    };
    let a_left = trapezoid(&left_env);
    let a_right = trapezoid(&right_env.iter().map(|v| -v).collect::<Vec<_>>());

    Ok(Metrics {
        max_left,
        max_right,
        area_diff: a_left - a_right,
        cpu_time: wall_time,
    })
}
