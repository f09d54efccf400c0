//! Result emission: machine-readable bundle (JSON), per-station table
//! (CSV), and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corridor::{body_offsets, BodyPointSet};
use crate::error::PlanError;
use crate::geometry::ReferencePath;
use crate::metrics::Metrics;
use crate::planner::PlanResult;
use crate::vehicle::{trailer_road_state, VehicleParams};

/// One row of the per-station result table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub s: f64,
    pub e_y: f64,
    pub e_psi: f64,
    pub beta1: f64,
    pub kappa: f64,
    /// Exact (nonlinear) trailer lateral error.
    pub e_y_tra: f64,
    /// Extreme body-point offsets at this tractor station.
    pub body_left: f64,
    pub body_right: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle {
    pub scenario_name: String,
    pub objective_kind: u8,
    pub k_blend: Option<f64>,
    pub converged: bool,
    pub sqp_iterations: usize,
    pub wall_time_s: f64,
    pub max_slack: f64,
    pub metrics: MetricsReport,
    pub iterations: Vec<IterationReport>,
    pub table: Vec<TableRow>,
}

/// Metrics as reported to files: signed values plus printed magnitudes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsReport {
    pub max_left: f64,
    pub max_right: f64,
    pub max_left_magnitude: f64,
    pub max_right_magnitude: f64,
    pub area_diff: f64,
    pub cpu_time: f64,
}

impl From<Metrics> for MetricsReport {
    fn from(m: Metrics) -> Self {
        MetricsReport {
            max_left: m.max_left,
            max_right: m.max_right,
            max_left_magnitude: m.max_left.abs(),
            max_right_magnitude: m.max_right.abs(),
            area_diff: m.area_diff,
            cpu_time: m.cpu_time,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub objective: f64,
    pub step_norm_state: f64,
    pub step_norm_input: f64,
    pub qp_iterations: usize,
    pub trust_shrinks: usize,
}

pub fn build_bundle(
    scenario_name: &str,
    objective_kind: u8,
    k_blend: Option<f64>,
    path: &ReferencePath,
    params: &VehicleParams,
    body_points: &BodyPointSet,
    result: &PlanResult,
) -> Result<ResultBundle, PlanError> {
    let traj = &result.trajectory;
    let n = traj.n_steps();
    let mut table = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let z = traj.states[i];
        let s = traj.stations[i];
        let trailer = trailer_road_state(path, s, &z, params)?;
        let offsets = body_offsets(path, params, body_points, s, &z)?;
        let body_left = offsets.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
        let body_right = offsets.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
        table.push(TableRow {
            s,
            e_y: z.e_y,
            e_psi: z.e_psi,
            beta1: z.beta1,
            kappa: traj.inputs[i.min(n - 1)],
            e_y_tra: trailer.e_y_tra,
            body_left,
            body_right,
        });
    }
    Ok(ResultBundle {
        scenario_name: scenario_name.to_string(),
        objective_kind,
        k_blend,
        converged: result.converged,
        sqp_iterations: result.sqp_iterations,
        wall_time_s: result.wall_time_s,
        max_slack: traj.max_slack(),
        metrics: result.metrics.into(),
        iterations: result
            .diagnostics
            .iter()
            .map(|d| IterationReport {
                objective: d.objective,
                step_norm_state: d.step_norm_state,
                step_norm_input: d.step_norm_input,
                qp_iterations: d.qp_iterations,
                trust_shrinks: d.trust_shrinks,
            })
            .collect(),
        table,
    })
}

/// Write `content` to `dir/name` atomically (temp file, then rename).
pub fn write_atomic(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf, PlanError> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    let dest = dir.join(name);
    fs::rename(&tmp, &dest)?;
    Ok(dest)
}

pub fn write_result_json(bundle: &ResultBundle, dir: &Path) -> Result<PathBuf, PlanError> {
    let json = serde_json::to_string_pretty(bundle).expect("bundle serialization cannot fail");
    write_atomic(dir, "result.json", json.as_bytes())
}

/// CSV table with 9 significant digits per value.
pub fn write_trajectory_csv(bundle: &ResultBundle, dir: &Path) -> Result<PathBuf, PlanError> {
    let mut out = String::new();
    out.push_str("s,e_y,e_psi,beta1,kappa,e_y_tra,body_left,body_right\n");
    for row in &bundle.table {
        out.push_str(&format!(
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            row.s, row.e_y, row.e_psi, row.beta1, row.kappa, row.e_y_tra, row.body_left, row.body_right
        ));
    }
    write_atomic(dir, "trajectory.csv", out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join("trailplan_output_test");
        let p = write_atomic(&dir, "probe.txt", b"one").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "one");
        write_atomic(&dir, "probe.txt", b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        fs::remove_dir_all(&dir).ok();
    }
}
