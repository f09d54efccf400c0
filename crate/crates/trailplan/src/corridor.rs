//! Lateral corridor handling: per-station free intervals from road edges and
//! obstacles, body-point sampling on both vehicle bodies, and linearized
//! collision constraints / side-offset measurements.

use nalgebra::Vector3;

use crate::error::PlanError;
use crate::geometry::ReferencePath;
use crate::vehicle::{vehicle_frames, RoadState, VehicleParams};

/// Which side the vehicle passes an obstacle on. Chosen by the scenario;
/// each choice keeps the per-station free set an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassSide {
    Left,
    Right,
}

/// Axis-aligned blocked region in road coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Obstacle {
    pub s_start: f64,
    pub s_end: f64,
    pub ey_min: f64,
    pub ey_max: f64,
    pub pass_side: PassSide,
}

impl Obstacle {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.s_start < self.s_end) {
            return Err(PlanError::Configuration(format!(
                "obstacle s-interval [{}, {}] is empty",
                self.s_start, self.s_end
            )));
        }
        if !(self.ey_min < self.ey_max) {
            return Err(PlanError::Configuration(format!(
                "obstacle lateral interval [{}, {}] is empty",
                self.ey_min, self.ey_max
            )));
        }
        Ok(())
    }

    fn covers(&self, s: f64) -> bool {
        (self.s_start..=self.s_end).contains(&s)
    }
}

/// Per-station lateral free interval of the road, before obstacles.
/// Bounds are piecewise constant over the path segments; lookups outside the
/// covered range return the terminal values.
#[derive(Debug, Clone)]
pub struct Corridor {
    stations: Vec<f64>,
    /// End arc length of each span.
    span_end: Vec<f64>,
    /// Left bound per span (positive).
    span_left: Vec<f64>,
    /// Right bound per span (negative).
    span_right: Vec<f64>,
}

impl Corridor {
    /// `spans` lists `(end_s, left_bound, right_bound)` per path segment in
    /// order; `stations` is the planning grid.
    pub fn new(stations: Vec<f64>, spans: &[(f64, f64, f64)]) -> Result<Self, PlanError> {
        if spans.is_empty() {
            return Err(PlanError::Configuration("corridor needs at least one span".into()));
        }
        for &(end, left, right) in spans {
            if !(right < left) || !left.is_finite() || !right.is_finite() {
                return Err(PlanError::Configuration(format!(
                    "corridor span ending at {end}: bounds [{right}, {left}] invalid"
                )));
            }
        }
        Ok(Corridor {
            stations,
            span_end: spans.iter().map(|s| s.0).collect(),
            span_left: spans.iter().map(|s| s.1).collect(),
            span_right: spans.iter().map(|s| s.2).collect(),
        })
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    fn span_index(&self, s: f64) -> usize {
        match self
            .span_end
            .binary_search_by(|end| end.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.min(self.span_end.len() - 1),
        }
    }

    pub fn left_bound(&self, s: f64) -> f64 {
        self.span_left[self.span_index(s)]
    }

    pub fn right_bound(&self, s: f64) -> f64 {
        self.span_right[self.span_index(s)]
    }
}

/// Free lateral interval at a station: the road interval shrunk by every
/// obstacle covering it, on the side the vehicle must keep clear.
pub fn free_interval(
    corridor: &Corridor,
    obstacles: &[Obstacle],
    s: f64,
) -> Result<(f64, f64), PlanError> {
    let mut lo = corridor.right_bound(s);
    let mut hi = corridor.left_bound(s);
    for obs in obstacles.iter().filter(|o| o.covers(s)) {
        match obs.pass_side {
            PassSide::Left => lo = lo.max(obs.ey_max),
            PassSide::Right => hi = hi.min(obs.ey_min),
        }
    }
    if lo >= hi {
        return Err(PlanError::InfeasibleCorridor { s, lo, hi });
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    Tractor,
    Trailer,
}

/// A sample point on a body outline, in that body's axle frame.
#[derive(Debug, Clone, Copy)]
pub struct BodyPoint {
    pub body: Body,
    /// Offset along the body heading from the axle.
    pub longitudinal: f64,
    /// Offset across the body; `+width/2` is the left side.
    pub lateral: f64,
}

/// Sample points along both sides of both bodies. Ends of each side are the
/// body corners; interior samples keep the spacing at or below the limit.
#[derive(Debug, Clone)]
pub struct BodyPointSet {
    pub points: Vec<BodyPoint>,
}

pub const DEFAULT_BODY_SPACING: f64 = 0.5;

impl BodyPointSet {
    pub fn uniform(params: &VehicleParams, max_spacing: f64) -> Result<Self, PlanError> {
        if !(max_spacing > 0.0) {
            return Err(PlanError::Configuration("body point spacing must be positive".into()));
        }
        let mut points = Vec::new();
        let half_w = params.width / 2.0;
        let bodies = [
            (Body::Tractor, -params.l1r, params.l1 + params.l1f),
            (Body::Trailer, -params.l2r, params.l2),
        ];
        for (body, lo, hi) in bodies {
            let span = hi - lo;
            let n = (span / max_spacing).ceil() as usize;
            for side in [half_w, -half_w] {
                for k in 0..=n {
                    let lon = lo + span * (k as f64) / (n as f64);
                    points.push(BodyPoint {
                        body,
                        longitudinal: lon,
                        lateral: side,
                    });
                }
            }
        }
        Ok(BodyPointSet { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Road coordinates of every body point for a given tractor state.
pub fn body_offsets(
    path: &ReferencePath,
    params: &VehicleParams,
    pts: &BodyPointSet,
    s: f64,
    z: &RoadState,
) -> Result<Vec<(f64, f64)>, PlanError> {
    let frames = vehicle_frames(path, s, z, params)?;
    let mut out = Vec::with_capacity(pts.points.len());
    for pt in &pts.points {
        let (bx, by, bh, hint) = match pt.body {
            Body::Tractor => (
                frames.tractor_x,
                frames.tractor_y,
                frames.tractor_heading,
                s + pt.longitudinal,
            ),
            Body::Trailer => (
                frames.trailer_x,
                frames.trailer_y,
                frames.trailer_heading,
                s + params.m1 - params.l2 + pt.longitudinal,
            ),
        };
        let (sin_h, cos_h) = bh.sin_cos();
        let px = bx + pt.longitudinal * cos_h - pt.lateral * sin_h;
        let py = by + pt.longitudinal * sin_h + pt.lateral * cos_h;
        let proj = path.project_hinted(
            &crate::geometry::CartesianPose::new(px, py, bh),
            hint,
        )?;
        out.push((proj.s, proj.e_y));
    }
    Ok(out)
}

/// Affine model of one body point's lateral offset around a reference
/// state. The station is frozen at its reference value.
#[derive(Debug, Clone)]
pub struct LinearBodyOffset {
    /// Index into the body point set.
    pub point: usize,
    /// Station of the body point at the reference.
    pub station: f64,
    /// Lateral offset at the reference.
    pub base: f64,
    /// Gradient w.r.t. `(e_y, e_psi, beta1)`.
    pub grad: Vector3<f64>,
    /// Tractor state the model was linearized around.
    pub ref_state: RoadState,
}

impl LinearBodyOffset {
    pub fn eval(&self, z: &RoadState) -> f64 {
        self.base + self.grad.dot(&(z.as_vector() - self.ref_state.as_vector()))
    }

    /// Constant of the affine expression in state coordinates.
    pub fn affine_constant(&self) -> f64 {
        self.base - self.grad.dot(&self.ref_state.as_vector())
    }
}

/// Central finite differences of [`body_offsets`] w.r.t. the tractor state.
pub fn linearize_body_offsets(
    path: &ReferencePath,
    params: &VehicleParams,
    pts: &BodyPointSet,
    s: f64,
    z_ref: &RoadState,
    delta: &[f64; 3],
) -> Result<Vec<LinearBodyOffset>, PlanError> {
    let base = body_offsets(path, params, pts, s, z_ref)?;
    let mut grads = vec![Vector3::zeros(); pts.points.len()];
    for j in 0..3 {
        let mut zp = z_ref.as_vector();
        let mut zm = z_ref.as_vector();
        zp[j] += delta[j];
        zm[j] -= delta[j];
        let fp = body_offsets(path, params, pts, s, &RoadState::from_vector(&zp))?;
        let fm = body_offsets(path, params, pts, s, &RoadState::from_vector(&zm))?;
        for (k, g) in grads.iter_mut().enumerate() {
            g[j] = (fp[k].1 - fm[k].1) / (2.0 * delta[j]);
        }
    }
    Ok(base
        .iter()
        .zip(grads)
        .enumerate()
        .map(|(k, (&(station, off), grad))| LinearBodyOffset {
            point: k,
            station,
            base: off,
            grad,
            ref_state: *z_ref,
        })
        .collect())
}

/// One linearized corridor constraint: `lo <= base + grad.(z - z_ref) <= hi`.
#[derive(Debug, Clone)]
pub struct CollisionRow {
    pub offset: LinearBodyOffset,
    pub lo: f64,
    pub hi: f64,
}

/// Corridor rows for one station's linearized body offsets. Body points
/// whose reference station falls outside the road extent carry no bounds and
/// are skipped. `margin` shrinks the free interval symmetrically.
pub fn collision_rows(
    corridor: &Corridor,
    obstacles: &[Obstacle],
    offsets: &[LinearBodyOffset],
    road_length: f64,
    margin: f64,
) -> Result<Vec<CollisionRow>, PlanError> {
    let mut rows = Vec::with_capacity(offsets.len());
    for off in offsets {
        if off.station < 0.0 || off.station > road_length {
            continue;
        }
        let (lo, hi) = free_interval(corridor, obstacles, off.station)?;
        rows.push(CollisionRow {
            offset: off.clone(),
            lo: lo + margin,
            hi: hi - margin,
        });
    }
    Ok(rows)
}
