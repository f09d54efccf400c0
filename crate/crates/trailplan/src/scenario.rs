//! Scenario documents: the road, vehicle, obstacles, start condition, and
//! objective selection, read from a JSON file with versioned schema.
//!
//! Absent fields fall back to defaults: the 24 m reference vehicle, a
//! centered start at rest curvature, generous road half-widths, and the
//! blend objective with `K = 0.45`.

use serde::{Deserialize, Serialize};

use crate::corridor::{Obstacle, PassSide};
use crate::error::PlanError;
use crate::geometry::{CartesianPose, PathSegment, ReferencePath};
use crate::objectives::{ObjectiveKind, ObjectiveSpec};
use crate::vehicle::{RoadState, VehicleParams};

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_HALF_WIDTH: f64 = 10.0;
pub const DEFAULT_DS: f64 = 0.2;

/// One road segment: geometry plus the lateral road extent alongside it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SegmentSpec {
    pub length_m: f64,
    pub curvature_inv_m: f64,
    #[serde(default = "default_half_width")]
    pub half_width_left_m: f64,
    #[serde(default = "default_half_width")]
    pub half_width_right_m: f64,
}

fn default_half_width() -> f64 {
    DEFAULT_HALF_WIDTH
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PoseSpec {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Default for PoseSpec {
    fn default() -> Self {
        PoseSpec { x: 0.0, y: 0.0, heading: 0.0 }
    }
}

/// Vehicle parameters; the curvature-rate limit may be left implicit, in
/// which case it defaults to `0.1 * ds` once the grid step is known.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct VehicleSpec {
    pub l1: f64,
    pub l1f: f64,
    pub l1r: f64,
    pub m1: f64,
    pub l2: f64,
    pub l2r: f64,
    pub width: f64,
    pub kappa_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_rate_max: Option<f64>,
}

impl Default for VehicleSpec {
    fn default() -> Self {
        let p = VehicleParams::standard(1.0);
        VehicleSpec {
            l1: p.l1,
            l1f: p.l1f,
            l1r: p.l1r,
            m1: p.m1,
            l2: p.l2,
            l2r: p.l2r,
            width: p.width,
            kappa_max: p.kappa_max,
            kappa_rate_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct StateSpec {
    pub e_y: f64,
    pub e_psi: f64,
    pub beta1: f64,
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec { e_y: 0.0, e_psi: 0.0, beta1: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ObstacleSpec {
    pub s_start: f64,
    pub s_end: f64,
    pub ey_min: f64,
    pub ey_max: f64,
    /// `"left"` or `"right"`: the side the vehicle passes on.
    pub pass_side: PassSideSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PassSideSpec {
    Left,
    Right,
}

impl From<PassSideSpec> for PassSide {
    fn from(p: PassSideSpec) -> Self {
        match p {
            PassSideSpec::Left => PassSide::Left,
            PassSideSpec::Right => PassSide::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ObjectiveFileSpec {
    pub kind: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default = "default_smooth_weight")]
    pub smooth_weight: f64,
}

fn default_smooth_weight() -> f64 {
    1.0
}

impl Default for ObjectiveFileSpec {
    fn default() -> Self {
        ObjectiveFileSpec { kind: 3, k: Some(0.45), smooth_weight: 1.0 }
    }
}

/// Optional planner knobs carried by the scenario; unspecified fields use
/// the planner defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
pub struct PlannerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sqp_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub start_pose: PoseSpec,
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub vehicle: VehicleSpec,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub start_state: StateSpec,
    #[serde(default)]
    pub kappa_start: f64,
    #[serde(default)]
    pub objective: ObjectiveFileSpec,
    #[serde(default)]
    pub planner: PlannerOverrides,
}

impl Scenario {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    /// Vehicle parameters with the curvature-rate limit resolved for a
    /// given grid step.
    pub fn vehicle_params(&self, ds: f64) -> VehicleParams {
        VehicleParams {
            l1: self.vehicle.l1,
            l1f: self.vehicle.l1f,
            l1r: self.vehicle.l1r,
            m1: self.vehicle.m1,
            l2: self.vehicle.l2,
            l2r: self.vehicle.l2r,
            width: self.vehicle.width,
            kappa_max: self.vehicle.kappa_max,
            kappa_rate_max: self.vehicle.kappa_rate_max.unwrap_or(0.1 * ds),
        }
    }

    pub fn build_path(&self, ds: f64) -> Result<ReferencePath, PlanError> {
        ReferencePath::new(
            CartesianPose::new(self.start_pose.x, self.start_pose.y, self.start_pose.heading),
            self.segments
                .iter()
                .map(|s| PathSegment { length: s.length_m, curvature: s.curvature_inv_m })
                .collect(),
            ds,
        )
    }

    /// Per-segment `(end_s, left_bound, right_bound)` spans for the corridor.
    pub fn corridor_spans(&self) -> Vec<(f64, f64, f64)> {
        let mut spans = Vec::with_capacity(self.segments.len());
        let mut s = 0.0;
        for seg in &self.segments {
            s += seg.length_m;
            spans.push((s, seg.half_width_left_m, -seg.half_width_right_m));
        }
        spans
    }

    pub fn obstacles(&self) -> Vec<Obstacle> {
        self.obstacles
            .iter()
            .map(|o| Obstacle {
                s_start: o.s_start,
                s_end: o.s_end,
                ey_min: o.ey_min,
                ey_max: o.ey_max,
                pass_side: o.pass_side.into(),
            })
            .collect()
    }

    pub fn start_state(&self) -> RoadState {
        RoadState::new(self.start_state.e_y, self.start_state.e_psi, self.start_state.beta1)
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec, PlanError> {
        let kind = ObjectiveKind::from_index(self.objective.kind)?;
        let k = if kind == ObjectiveKind::Blend {
            self.objective.k
        } else {
            None
        };
        let mut spec = ObjectiveSpec::new(kind, k)?;
        spec.smooth_weight = self.objective.smooth_weight;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(PlanError::Scenario(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.segments.is_empty() {
            return Err(PlanError::Scenario("segments: list must not be empty".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.length_m > 0.0) || !seg.length_m.is_finite() {
                return Err(PlanError::Scenario(format!(
                    "segments[{i}].length_m: must be positive, got {}",
                    seg.length_m
                )));
            }
            if !seg.curvature_inv_m.is_finite() {
                return Err(PlanError::Scenario(format!(
                    "segments[{i}].curvature_inv_m: must be finite"
                )));
            }
            if !(seg.half_width_left_m > 0.0) || !(seg.half_width_right_m > 0.0) {
                return Err(PlanError::Scenario(format!(
                    "segments[{i}]: half widths must be positive"
                )));
            }
        }
        let params = self.vehicle_params(DEFAULT_DS);
        params.validate()?;
        let total = self.total_length();
        for (i, o) in self.obstacles.iter().enumerate() {
            let obs = Obstacle {
                s_start: o.s_start,
                s_end: o.s_end,
                ey_min: o.ey_min,
                ey_max: o.ey_max,
                pass_side: o.pass_side.into(),
            };
            obs.validate()
                .map_err(|e| PlanError::Scenario(format!("obstacles[{i}]: {e}")))?;
            if o.s_end < 0.0 || o.s_start > total {
                return Err(PlanError::Scenario(format!(
                    "obstacles[{i}]: s-interval misses the road entirely"
                )));
            }
        }
        if self.kappa_start.abs() > params.kappa_max {
            return Err(PlanError::Scenario(format!(
                "kappa_start {} exceeds the curvature limit {}",
                self.kappa_start, params.kappa_max
            )));
        }
        let z0 = self.start_state();
        if z0.e_psi.abs() >= std::f64::consts::FRAC_PI_2
            || z0.beta1.abs() >= std::f64::consts::FRAC_PI_2
        {
            return Err(PlanError::Scenario("start_state: angles must be below pi/2".into()));
        }
        let first = &self.segments[0];
        if z0.e_y > first.half_width_left_m || z0.e_y < -first.half_width_right_m {
            return Err(PlanError::Scenario(format!(
                "start_state.e_y {} outside the road at s = 0",
                z0.e_y
            )));
        }
        self.objective_spec()?;
        for (name, v) in [
            ("ds", self.planner.ds),
            ("horizon", self.planner.horizon),
            ("slack_weight", self.planner.slack_weight),
            ("body_spacing", self.planner.body_spacing),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(PlanError::Scenario(format!(
                        "planner.{name}: must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, PlanError> {
    let scenario: Scenario = serde_json::from_str(text)
        .map_err(|e| PlanError::Scenario(format!("parse error at line {}, column {}: {e}", e.line(), e.column())))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Serialize a scenario in canonical (pretty, field-complete) form.
pub fn save_scenario(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let text = r#"{
            "schema_version": 1,
            "segments": [{"length_m": 100.0, "curvature_inv_m": 0.0}]
        }"#;
        let sc = load_scenario(text).unwrap();
        let p = sc.vehicle_params(0.1);
        assert_eq!(p.l1, 3.78);
        assert_eq!(p.l2, 13.97);
        assert_eq!(p.width, 2.54);
        assert!((p.kappa_rate_max - 0.01).abs() < 1e-15);
        assert_eq!(sc.segments[0].half_width_left_m, DEFAULT_HALF_WIDTH);
        let obj = sc.objective_spec().unwrap();
        assert_eq!(obj.kind.index(), 3);
        assert_eq!(obj.k_blend, Some(0.45));
    }

    #[test]
    fn negative_segment_length_rejected() {
        let text = r#"{
            "schema_version": 1,
            "segments": [{"length_m": -5.0, "curvature_inv_m": 0.0}]
        }"#;
        let err = load_scenario(text).unwrap_err();
        assert!(err.to_string().contains("length_m"), "{err}");
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = load_scenario("{ not json").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn save_load_round_trip() {
        let text = r#"{
            "schema_version": 1,
            "name": "demo",
            "segments": [
                {"length_m": 40.0, "curvature_inv_m": 0.0},
                {"length_m": 48.33, "curvature_inv_m": 0.065, "half_width_left_m": 9.0, "half_width_right_m": 9.0}
            ],
            "obstacles": [
                {"s_start": 50.0, "s_end": 60.0, "ey_min": 1.0, "ey_max": 9.0, "pass_side": "right"}
            ],
            "kappa_start": 0.0,
            "objective": {"kind": 1, "smooth_weight": 1.0}
        }"#;
        let sc = load_scenario(text).unwrap();
        let saved = save_scenario(&sc);
        let reloaded = load_scenario(&saved).unwrap();
        assert_eq!(sc, reloaded);
    }

    #[test]
    fn start_state_outside_road_rejected() {
        let text = r#"{
            "schema_version": 1,
            "segments": [{"length_m": 50.0, "curvature_inv_m": 0.0, "half_width_left_m": 2.0, "half_width_right_m": 2.0}],
            "start_state": {"e_y": 3.0, "e_psi": 0.0, "beta1": 0.0}
        }"#;
        assert!(load_scenario(text).is_err());
    }

    #[test]
    fn kappa_start_beyond_limit_rejected() {
        let text = r#"{
            "schema_version": 1,
            "segments": [{"length_m": 50.0, "curvature_inv_m": 0.0}],
            "kappa_start": 0.2
        }"#;
        assert!(load_scenario(text).is_err());
    }
}
