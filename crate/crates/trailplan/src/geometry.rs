//! Reference path geometry: piecewise line/arc centerlines with exact
//! arc-length parametrization, curvature lookup, Cartesian reconstruction,
//! and projection of Cartesian points back onto the path.

use crate::error::{PlanError, ProjectionError};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Curvatures below this magnitude are treated as straight segments.
const STRAIGHT_EPS: f64 = 1e-12;

/// How far the virtual tangent extensions reach past the path ends. Used
/// only by the hinted projection so vehicle bodies overhanging the ends of
/// the planning horizon still have well-defined road coordinates.
const END_EXTENSION: f64 = 60.0;

/// Normalize an angle to the interval `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r > std::f64::consts::PI {
        r - TWO_PI
    } else {
        r
    }
}

/// A pose in the world frame. `heading` is normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl CartesianPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        CartesianPose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }
}

/// Constant-curvature path piece.
#[derive(Debug, Clone, Copy)]
pub struct PathSegment {
    pub length: f64,
    pub curvature: f64,
}

/// Road coordinates of a Cartesian point: arc length of the foot point,
/// signed lateral offset (positive left of the tangent), heading error.
#[derive(Debug, Clone, Copy)]
pub struct PathProjection {
    pub s: f64,
    pub e_y: f64,
    pub e_psi: f64,
}

/// Arc-length-parametrized reference path built from line and circular-arc
/// segments. Immutable after construction; all lookups are pure.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    segments: Vec<PathSegment>,
    /// Cumulative arc length at each segment start; last entry is the total.
    seg_start_s: Vec<f64>,
    /// Unnormalized pose at each segment start (headings accumulate so that
    /// multi-turn paths stay continuous); last entry is the path end.
    seg_start: Vec<RawPose>,
    sample_step: f64,
}

#[derive(Debug, Clone, Copy)]
struct RawPose {
    x: f64,
    y: f64,
    heading: f64,
}

impl ReferencePath {
    pub fn new(
        start_pose: CartesianPose,
        segments: Vec<PathSegment>,
        sample_step: f64,
    ) -> Result<Self, PlanError> {
        if segments.is_empty() {
            return Err(PlanError::Configuration("path needs at least one segment".into()));
        }
        if sample_step <= 0.0 {
            return Err(PlanError::Configuration("sample step must be positive".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.length > 0.0) || !seg.length.is_finite() {
                return Err(PlanError::Configuration(format!(
                    "segment {i} length {} must be positive",
                    seg.length
                )));
            }
            if !seg.curvature.is_finite() {
                return Err(PlanError::Configuration(format!("segment {i} curvature not finite")));
            }
        }
        let mut seg_start_s = Vec::with_capacity(segments.len() + 1);
        let mut seg_start = Vec::with_capacity(segments.len() + 1);
        let mut s = 0.0;
        let mut pose = RawPose {
            x: start_pose.x,
            y: start_pose.y,
            heading: start_pose.heading,
        };
        for seg in &segments {
            seg_start_s.push(s);
            seg_start.push(pose);
            pose = advance(pose, seg.curvature, seg.length);
            s += seg.length;
        }
        seg_start_s.push(s);
        seg_start.push(pose);
        Ok(ReferencePath {
            segments,
            seg_start_s,
            seg_start,
            sample_step,
        })
    }

    /// Single-segment convenience constructor.
    pub fn single(curvature: f64, length: f64, sample_step: f64) -> Result<Self, PlanError> {
        ReferencePath::new(
            CartesianPose::new(0.0, 0.0, 0.0),
            vec![PathSegment { length, curvature }],
            sample_step,
        )
    }

    pub fn total_length(&self) -> f64 {
        *self.seg_start_s.last().unwrap()
    }

    pub fn sample_step(&self) -> f64 {
        self.sample_step
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    /// Validate an arc length, absorbing float rounding at the ends (grid
    /// arithmetic like `n * ds` may overshoot the final station by ulps).
    fn check_domain(&self, s: f64) -> Result<f64, PlanError> {
        const DOMAIN_EPS: f64 = 1e-9;
        let total = self.total_length();
        if !s.is_finite() || s < -DOMAIN_EPS || s > total + DOMAIN_EPS {
            return Err(PlanError::PathDomain {
                s,
                total_length: total,
            });
        }
        Ok(s.clamp(0.0, total))
    }

    /// Index of the segment containing `s`; at interior joints the segment
    /// on the smaller-`s` side wins.
    fn segment_index(&self, s: f64) -> usize {
        // first i such that seg_start_s[i+1] >= s
        match self
            .seg_start_s[1..]
            .binary_search_by(|end| end.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.min(self.segments.len() - 1),
        }
    }

    /// Curvature of the segment containing `s` (left value at joints).
    pub fn curvature_at(&self, s: f64) -> Result<f64, PlanError> {
        let s = self.check_domain(s)?;
        Ok(self.segments[self.segment_index(s)].curvature)
    }

    fn raw_pose_at(&self, s: f64) -> RawPose {
        let i = self.segment_index(s.clamp(0.0, self.total_length()));
        advance(self.seg_start[i], self.segments[i].curvature, s - self.seg_start_s[i])
    }

    /// Pose at arc length `s`, by closed-form integration of the segments.
    pub fn pose_at(&self, s: f64) -> Result<CartesianPose, PlanError> {
        let s = self.check_domain(s)?;
        let p = self.raw_pose_at(s);
        Ok(CartesianPose::new(p.x, p.y, p.heading))
    }

    /// Pose with unnormalized heading: on multi-turn paths the heading keeps
    /// accumulating, which keeps downstream trigonometry free of wraps.
    pub fn raw_heading_at(&self, s: f64) -> Result<f64, PlanError> {
        let s = self.check_domain(s)?;
        Ok(self.raw_pose_at(s).heading)
    }

    /// World position of the point at road coordinates `(s, e_y)`.
    pub fn offset_point(&self, s: f64, e_y: f64) -> Result<(f64, f64), PlanError> {
        let s = self.check_domain(s)?;
        let p = self.raw_pose_at(s);
        Ok((p.x - e_y * p.heading.sin(), p.y + e_y * p.heading.cos()))
    }

    /// Project a Cartesian pose onto the path: global nearest foot point
    /// among all perpendicular candidates, ties broken by smaller `s`.
    pub fn project(&self, p: &CartesianPose) -> Result<PathProjection, PlanError> {
        let mut cands = Vec::new();
        let mut tube_violation = false;
        self.collect_candidates(p, &mut cands, &mut tube_violation);
        let start = self.seg_start[0];
        let end = *self.seg_start.last().unwrap();
        let d_start = (p.x - start.x).hypot(p.y - start.y);
        let d_end = (p.x - end.x).hypot(p.y - end.y);

        let best = cands
            .iter()
            .min_by(|a, b| (a.dist, a.s).partial_cmp(&(b.dist, b.s)).unwrap());
        match best {
            None => Err(if tube_violation {
                ProjectionError::OutsideTube { x: p.x, y: p.y }.into()
            } else {
                ProjectionError::BeyondEnds { x: p.x, y: p.y }.into()
            }),
            Some(c) => {
                if d_start.min(d_end) < c.dist - 1e-12 {
                    return Err(ProjectionError::BeyondEnds { x: p.x, y: p.y }.into());
                }
                Ok(PathProjection {
                    s: c.s,
                    e_y: c.e_y,
                    e_psi: normalize_angle(p.heading - c.heading),
                })
            }
        }
    }

    /// Project near an expected station. Multi-turn paths admit several
    /// perpendicular feet at equal distance; the hint picks the branch.
    /// Points slightly past the path ends fall onto virtual tangent
    /// extensions and report `s` outside `[0, total_length]`.
    pub fn project_hinted(&self, p: &CartesianPose, s_hint: f64) -> Result<PathProjection, PlanError> {
        let mut cands = Vec::new();
        let mut tube_violation = false;
        self.collect_candidates(p, &mut cands, &mut tube_violation);
        self.collect_extension_candidates(p, &mut cands);
        let best = cands.iter().min_by(|a, b| {
            ((a.s - s_hint).abs(), a.s)
                .partial_cmp(&((b.s - s_hint).abs(), b.s))
                .unwrap()
        });
        match best {
            None => Err(if tube_violation {
                ProjectionError::OutsideTube { x: p.x, y: p.y }.into()
            } else {
                ProjectionError::BeyondEnds { x: p.x, y: p.y }.into()
            }),
            Some(c) => Ok(PathProjection {
                s: c.s,
                e_y: c.e_y,
                e_psi: normalize_angle(p.heading - c.heading),
            }),
        }
    }

    fn collect_candidates(&self, p: &CartesianPose, out: &mut Vec<Candidate>, tube_violation: &mut bool) {
        for (i, seg) in self.segments.iter().enumerate() {
            let s0 = self.seg_start_s[i];
            let base = self.seg_start[i];
            if seg.curvature.abs() < STRAIGHT_EPS {
                let (tx, ty) = (base.heading.cos(), base.heading.sin());
                let (dx, dy) = (p.x - base.x, p.y - base.y);
                let u = dx * tx + dy * ty;
                if (0.0..=seg.length).contains(&u) {
                    let e = -dx * ty + dy * tx;
                    out.push(Candidate {
                        s: s0 + u,
                        e_y: e,
                        dist: e.abs(),
                        heading: base.heading,
                    });
                }
            } else {
                let kappa = seg.curvature;
                let r_abs = 1.0 / kappa.abs();
                let (sin0, cos0) = base.heading.sin_cos();
                let (cx, cy) = (base.x - sin0 / kappa, base.y + cos0 / kappa);
                let (vx, vy) = (p.x - cx, p.y - cy);
                let r = vx.hypot(vy);
                if r < 1e-9 {
                    *tube_violation = true;
                    continue;
                }
                let e_y = kappa.signum() * (r_abs - r);
                if e_y.abs() >= r_abs {
                    *tube_violation = true;
                    continue;
                }
                let phi = vy.atan2(vx);
                let phi0 = (base.y - cy).atan2(base.x - cx);
                let delta = if kappa > 0.0 {
                    (phi - phi0).rem_euclid(TWO_PI)
                } else {
                    (phi0 - phi).rem_euclid(TWO_PI)
                };
                let period = TWO_PI * r_abs;
                let mut s_loc = delta * r_abs;
                // a foot just short of s = 0 by angle wrap also counts
                if s_loc - period > -1e-9 {
                    s_loc -= period;
                }
                while s_loc <= seg.length + 1e-12 {
                    if s_loc >= -1e-12 {
                        let sc = s_loc.clamp(0.0, seg.length);
                        out.push(Candidate {
                            s: s0 + sc,
                            e_y,
                            dist: e_y.abs(),
                            heading: base.heading + kappa * sc,
                        });
                    }
                    s_loc += period;
                }
            }
        }
    }

    fn collect_extension_candidates(&self, p: &CartesianPose, out: &mut Vec<Candidate>) {
        // backward tangent from the path start
        let start = self.seg_start[0];
        let (tx, ty) = (start.heading.cos(), start.heading.sin());
        let (dx, dy) = (p.x - start.x, p.y - start.y);
        let u = dx * tx + dy * ty;
        if (-END_EXTENSION..0.0).contains(&u) {
            let e = -dx * ty + dy * tx;
            out.push(Candidate {
                s: u,
                e_y: e,
                dist: e.abs(),
                heading: start.heading,
            });
        }
        // forward tangent from the path end
        let end = *self.seg_start.last().unwrap();
        let (tx, ty) = (end.heading.cos(), end.heading.sin());
        let (dx, dy) = (p.x - end.x, p.y - end.y);
        let u = dx * tx + dy * ty;
        if (0.0..END_EXTENSION).contains(&u) {
            let e = -dx * ty + dy * tx;
            out.push(Candidate {
                s: self.total_length() + u,
                e_y: e,
                dist: e.abs(),
                heading: end.heading,
            });
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    s: f64,
    e_y: f64,
    dist: f64,
    /// Unnormalized path heading at the foot point.
    heading: f64,
}

fn advance(p: RawPose, curvature: f64, ds: f64) -> RawPose {
    if curvature.abs() < STRAIGHT_EPS {
        RawPose {
            x: p.x + ds * p.heading.cos(),
            y: p.y + ds * p.heading.sin(),
            heading: p.heading,
        }
    } else {
        let h1 = p.heading + curvature * ds;
        RawPose {
            x: p.x + (h1.sin() - p.heading.sin()) / curvature,
            y: p.y - (h1.cos() - p.heading.cos()) / curvature,
            heading: h1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(len: f64) -> ReferencePath {
        ReferencePath::single(0.0, len, 0.1).unwrap()
    }

    fn uturn_like() -> ReferencePath {
        // line, 180-degree left arc, line
        ReferencePath::new(
            CartesianPose::new(0.0, 0.0, 0.0),
            vec![
                PathSegment { length: 40.0, curvature: 0.0 },
                PathSegment { length: std::f64::consts::PI / 0.065, curvature: 0.065 },
                PathSegment { length: 45.0, curvature: 0.0 },
            ],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn curvature_of_straight_segment_is_zero() {
        let p = straight(50.0);
        assert_eq!(p.curvature_at(0.0).unwrap(), 0.0);
        assert_eq!(p.curvature_at(23.4).unwrap(), 0.0);
        assert_eq!(p.curvature_at(50.0).unwrap(), 0.0);
    }

    #[test]
    fn curvature_inside_uturn_arc() {
        let p = uturn_like();
        assert_eq!(p.curvature_at(50.0).unwrap(), 0.065);
    }

    #[test]
    fn curvature_inside_roundabout_arc() {
        let p = ReferencePath::new(
            CartesianPose::new(0.0, 0.0, 0.0),
            vec![
                PathSegment { length: 50.0, curvature: 0.0 },
                PathSegment { length: 2.5 * TWO_PI / 2.0 / 0.056, curvature: 0.056 },
                PathSegment { length: 50.0, curvature: 0.0 },
            ],
            0.2,
        )
        .unwrap();
        assert_eq!(p.curvature_at(80.0).unwrap(), 0.056);
    }

    #[test]
    fn curvature_joint_takes_left_value() {
        let p = uturn_like();
        assert_eq!(p.curvature_at(40.0).unwrap(), 0.0);
        let arc_end = 40.0 + std::f64::consts::PI / 0.065;
        assert_eq!(p.curvature_at(arc_end).unwrap(), 0.065);
    }

    #[test]
    fn curvature_out_of_range_errors() {
        let p = straight(10.0);
        assert!(p.curvature_at(-0.1).is_err());
        assert!(p.curvature_at(10.1).is_err());
    }

    #[test]
    fn pose_on_straight_path() {
        let p = straight(20.0);
        let pose = p.pose_at(10.0).unwrap();
        assert!((pose.x - 10.0).abs() < 1e-15);
        assert!(pose.y.abs() < 1e-15);
        assert_eq!(pose.heading, 0.0);
    }

    #[test]
    fn pose_after_half_circle() {
        // kappa = 0.1 from the origin heading 0; s = pi/0.1 is a half circle
        // of radius 10: end at (0, 20) heading pi.
        let p = ReferencePath::single(0.1, std::f64::consts::PI / 0.1 + 1.0, 0.1).unwrap();
        let pose = p.pose_at(std::f64::consts::PI / 0.1).unwrap();
        assert!(pose.x.abs() < 1e-12, "x = {}", pose.x);
        assert!((pose.y - 20.0).abs() < 1e-12, "y = {}", pose.y);
        assert!((pose.heading - std::f64::consts::PI).abs() < 1e-12);
    }

    /// RK4 integration of heading' = kappa, position' = tangent over one
    /// constant-curvature stretch; the discontinuous profile is handled by
    /// integrating segment by segment.
    fn rk4_advance(start: (f64, f64, f64), kappa: f64, length: f64, steps: usize) -> (f64, f64, f64) {
        let (mut x, mut y, mut h) = start;
        let ds = length / steps as f64;
        for _ in 0..steps {
            let f = |h_at: f64| (h_at.cos(), h_at.sin(), kappa);
            let k1 = f(h);
            let k2 = f(h + 0.5 * ds * k1.2);
            let k3 = f(h + 0.5 * ds * k2.2);
            let k4 = f(h + ds * k3.2);
            x += ds / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y += ds / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            h += ds / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        }
        (x, y, h)
    }

    #[test]
    fn pose_matches_rk4_oracle_past_joint() {
        let path = ReferencePath::new(
            CartesianPose::new(0.0, 0.0, 0.0),
            vec![
                PathSegment { length: 10.0, curvature: 0.0 },
                PathSegment { length: 20.0, curvature: 0.05 },
            ],
            0.1,
        )
        .unwrap();
        let s = 25.0;
        let at_joint = rk4_advance((0.0, 0.0, 0.0), 0.0, 10.0, 1000);
        let (ox, oy, oh) = rk4_advance(at_joint, 0.05, s - 10.0, 1500);
        let pose = path.pose_at(s).unwrap();
        assert!((pose.x - ox).abs() < 1e-9, "x: {} vs {}", pose.x, ox);
        assert!((pose.y - oy).abs() < 1e-9, "y: {} vs {}", pose.y, oy);
        assert!((pose.heading - normalize_angle(oh)).abs() < 1e-9);
    }

    #[test]
    fn arc_length_parametrization_unit_speed() {
        let path = uturn_like();
        let h = 1e-6;
        for &s in &[1.0, 39.9, 41.0, 60.0, 100.0, 120.0] {
            let a = path.pose_at(s - h).unwrap();
            let b = path.pose_at(s + h).unwrap();
            let speed = ((b.x - a.x).hypot(b.y - a.y)) / (2.0 * h);
            assert!((speed - 1.0).abs() < 1e-6, "s = {s}: speed {speed}");
        }
    }

    #[test]
    fn heading_equals_curvature_integral() {
        let path = uturn_like();
        // segment-aligned bounds: integral of curvature over the arc
        let arc_len = std::f64::consts::PI / 0.065;
        let h1 = path.raw_heading_at(40.0).unwrap();
        let h2 = path.raw_heading_at(40.0 + arc_len).unwrap();
        assert!((h2 - h1 - 0.065 * arc_len).abs() < 1e-9);
    }

    #[test]
    fn projection_on_straight_path() {
        let p = straight(20.0);
        let proj = p
            .project(&CartesianPose::new(5.0, 2.0, 0.1))
            .unwrap();
        assert!((proj.s - 5.0).abs() < 1e-12);
        assert!((proj.e_y - 2.0).abs() < 1e-12);
        assert!((proj.e_psi - 0.1).abs() < 1e-12);
    }

    #[test]
    fn projection_identity_on_path() {
        let p = uturn_like();
        let pose = p.pose_at(7.0).unwrap();
        let proj = p.project(&pose).unwrap();
        assert!((proj.s - 7.0).abs() < 1e-9);
        assert!(proj.e_y.abs() < 1e-9);
        assert!(proj.e_psi.abs() < 1e-9);
    }

    /// Brute-force nearest-sample oracle at 1 mm resolution.
    fn argmin_distance_oracle(path: &ReferencePath, p: &CartesianPose) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let n = (path.total_length() / 0.001) as usize;
        for i in 0..=n {
            let s = (i as f64) * path.total_length() / n as f64;
            let pose = path.pose_at(s).unwrap();
            let d = (p.x - pose.x).hypot(p.y - pose.y);
            if d < best.0 {
                best = (d, s);
            }
        }
        best.1
    }

    #[test]
    fn arc_projection_matches_brute_force() {
        let path = uturn_like();
        let p = {
            let pose = path.pose_at(55.0).unwrap();
            // offset 1.8 m to the left of the path tangent
            CartesianPose::new(
                pose.x - 1.8 * pose.heading.sin(),
                pose.y + 1.8 * pose.heading.cos(),
                pose.heading + 0.05,
            )
        };
        let proj = path.project(&p).unwrap();
        let oracle_s = argmin_distance_oracle(&path, &p);
        assert!(
            (proj.s - oracle_s).abs() < 0.1 * 1e-3 + 1e-3,
            "s = {} vs oracle {}",
            proj.s,
            oracle_s
        );
        assert!((proj.e_y - 1.8).abs() < 1e-9);
        assert!((proj.e_psi - 0.05).abs() < 1e-9);
    }

    #[test]
    fn projection_beyond_ends_errors() {
        let p = straight(10.0);
        assert!(matches!(
            p.project(&CartesianPose::new(-1.0, 0.5, 0.0)),
            Err(PlanError::Projection(ProjectionError::BeyondEnds { .. }))
        ));
        assert!(p.project(&CartesianPose::new(11.0, 0.5, 0.0)).is_err());
    }

    #[test]
    fn projection_outside_tube_errors() {
        // circle of radius 10; its center has no unique projection
        let p = ReferencePath::single(0.1, 10.0, 0.1).unwrap();
        let center = CartesianPose::new(0.0, 10.0, 0.0);
        assert!(matches!(
            p.project(&center),
            Err(PlanError::Projection(ProjectionError::OutsideTube { .. }))
        ));
    }

    #[test]
    fn hinted_projection_separates_roundabout_wraps() {
        // 450-degree arc: points admit several equidistant feet
        let r = 1.0 / 0.056;
        let path = ReferencePath::single(0.056, 1.25 * TWO_PI * r, 0.2).unwrap();
        let wrap = TWO_PI * r;
        assert!(10.0 + wrap < path.total_length());
        let probe = path.pose_at(10.0).unwrap();
        let probe = CartesianPose::new(
            probe.x - 0.5 * probe.heading.sin(),
            probe.y + 0.5 * probe.heading.cos(),
            probe.heading,
        );
        let near = path.project_hinted(&probe, 8.0).unwrap();
        assert!((near.s - 10.0).abs() < 1e-9, "s = {}", near.s);
        let wrapped = path.project_hinted(&probe, 10.0 + wrap).unwrap();
        assert!((wrapped.s - (10.0 + wrap)).abs() < 1e-6, "s = {}", wrapped.s);
    }

    #[test]
    fn hinted_projection_extends_past_ends() {
        let p = straight(20.0);
        let proj = p
            .project_hinted(&CartesianPose::new(-3.0, 0.4, 0.0), 0.0)
            .unwrap();
        assert!((proj.s + 3.0).abs() < 1e-12);
        assert!((proj.e_y - 0.4).abs() < 1e-12);
    }

    #[test]
    fn round_trip_within_tube() {
        let path = uturn_like();
        for i in 0..60 {
            let s = 2.0 + (i as f64) * 2.0;
            if s >= path.total_length() {
                break;
            }
            let kappa = path.curvature_at(s).unwrap();
            let limit = if kappa.abs() < 1e-9 { 5.0 } else { 0.9 / kappa.abs() };
            for &e in &[-0.8, -0.2, 0.3, 0.9] {
                let e_y = e * limit.min(5.0);
                let (x, y) = path.offset_point(s, e_y).unwrap();
                let heading = path.pose_at(s).unwrap().heading;
                let proj = path.project(&CartesianPose::new(x, y, heading)).unwrap();
                assert!((proj.s - s).abs() < 1e-6, "s {} -> {}", s, proj.s);
                assert!((proj.e_y - e_y).abs() < 1e-6);
            }
        }
    }
}
