//! Static SVG figures: a plan view of the road, swept envelope, and body
//! outlines, plus a curvature-versus-arc-length chart. Output is plain text
//! built deterministically, so identical bundles produce identical bytes.

use std::fmt::Write as _;

use crate::corridor::{BodyPointSet, Obstacle};
use crate::error::PlanError;
use crate::geometry::ReferencePath;
use crate::planner::Trajectory;
use crate::vehicle::{tractor_to_cartesian, VehicleParams};

const PLOT_SCALE: f64 = 6.0; // pixels per meter
const MARGIN_PX: f64 = 30.0;

struct Canvas {
    min_x: f64,
    max_y: f64,
    body: String,
}

impl Canvas {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.min_x) * PLOT_SCALE + MARGIN_PX,
            (self.max_y - y) * PLOT_SCALE + MARGIN_PX,
        )
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (px, py) = self.map(x, y);
            let _ = write!(d, "{}{px:.2},{py:.2}", if i == 0 { "" } else { " " });
        }
        let _ = writeln!(self.body, "<polyline points=\"{d}\" {style}/>");
    }

    fn polygon(&mut self, pts: &[(f64, f64)], style: &str) {
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (px, py) = self.map(x, y);
            let _ = write!(d, "{}{px:.2},{py:.2}", if i == 0 { "" } else { " " });
        }
        let _ = writeln!(self.body, "<polygon points=\"{d}\" {style}/>");
    }
}

/// Plan-view figure: road edges, centerline, swept envelope, body outlines
/// at sampled stations, and obstacle boxes.
pub fn plan_view_svg(
    path: &ReferencePath,
    params: &VehicleParams,
    trajectory: &Trajectory,
    body_points: &BodyPointSet,
    obstacles: &[Obstacle],
    left_bound: impl Fn(f64) -> f64,
    right_bound: impl Fn(f64) -> f64,
) -> Result<String, PlanError> {
    let total = path.total_length();
    let sample = (total / 400.0).max(0.25);

    // world extent over road edges
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    let mut edges_left = Vec::new();
    let mut edges_right = Vec::new();
    let mut center = Vec::new();
    let mut s = 0.0;
    while s <= total + 1e-9 {
        let sc = s.min(total);
        let l = path.offset_point(sc, left_bound(sc))?;
        let r = path.offset_point(sc, right_bound(sc))?;
        let c = path.offset_point(sc, 0.0)?;
        for p in [l, r, c] {
            min_x = min_x.min(p.0);
            max_x = max_x.max(p.0);
            min_y = min_y.min(p.1);
            max_y = max_y.max(p.1);
        }
        edges_left.push(l);
        edges_right.push(r);
        center.push(c);
        s += sample;
    }
    let width = (max_x - min_x) * PLOT_SCALE + 2.0 * MARGIN_PX;
    let height = (max_y - min_y) * PLOT_SCALE + 2.0 * MARGIN_PX;

    let mut canvas = Canvas { min_x, max_y, body: String::new() };
    canvas.polyline(&edges_left, "fill=\"none\" stroke=\"#444444\" stroke-width=\"1.5\"");
    canvas.polyline(&edges_right, "fill=\"none\" stroke=\"#444444\" stroke-width=\"1.5\"");
    canvas.polyline(
        &center,
        "fill=\"none\" stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"6,6\"",
    );

    // swept envelope from per-bin extreme body offsets
    let ds = trajectory.stations[1] - trajectory.stations[0];
    let n_bins = trajectory.stations.len();
    let mut left_env = vec![0.0f64; n_bins];
    let mut right_env = vec![0.0f64; n_bins];
    for (i, z) in trajectory.states.iter().enumerate() {
        let offsets =
            crate::corridor::body_offsets(path, params, body_points, trajectory.stations[i], z)?;
        for (s_j, off) in offsets {
            let bin = ((s_j - trajectory.stations[0]) / ds).round();
            if bin >= 0.0 && bin < n_bins as f64 {
                let b = bin as usize;
                left_env[b] = left_env[b].max(off);
                right_env[b] = right_env[b].min(off);
            }
        }
    }
    let mut env_left_pts = Vec::new();
    let mut env_right_pts = Vec::new();
    for (i, &si) in trajectory.stations.iter().enumerate() {
        if si <= total {
            env_left_pts.push(path.offset_point(si, left_env[i])?);
            env_right_pts.push(path.offset_point(si, right_env[i])?);
        }
    }
    canvas.polyline(&env_left_pts, "fill=\"none\" stroke=\"#cc3333\" stroke-width=\"1.2\"");
    canvas.polyline(&env_right_pts, "fill=\"none\" stroke=\"#3333cc\" stroke-width=\"1.2\"");

    // body outlines every few meters
    let outline_every = (5.0 / ds).round().max(1.0) as usize;
    for i in (0..trajectory.states.len()).step_by(outline_every) {
        let (tractor_pose, trailer_pose) =
            tractor_to_cartesian(path, trajectory.stations[i], &trajectory.states[i], params)?;
        let tractor = rectangle(
            tractor_pose,
            -params.l1r,
            params.l1 + params.l1f,
            params.width / 2.0,
        );
        let trailer = rectangle(trailer_pose, -params.l2r, params.l2, params.width / 2.0);
        canvas.polygon(&tractor, "fill=\"none\" stroke=\"#55aa55\" stroke-width=\"0.8\"");
        canvas.polygon(&trailer, "fill=\"none\" stroke=\"#227722\" stroke-width=\"0.8\"");
    }

    // obstacles as road-frame quads
    for obs in obstacles {
        let mut quad = Vec::new();
        let corners = [
            (obs.s_start, obs.ey_min),
            (obs.s_end, obs.ey_min),
            (obs.s_end, obs.ey_max),
            (obs.s_start, obs.ey_max),
        ];
        for (sc, e) in corners {
            let sc = sc.clamp(0.0, total);
            quad.push(path.offset_point(sc, e)?);
        }
        canvas.polygon(&quad, "fill=\"#dd8888\" fill-opacity=\"0.6\" stroke=\"#aa2222\"");
    }

    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
        canvas.body
    ))
}

fn rectangle(
    pose: crate::geometry::CartesianPose,
    back: f64,
    front: f64,
    half_w: f64,
) -> Vec<(f64, f64)> {
    let (sin_h, cos_h) = pose.heading.sin_cos();
    [(front, half_w), (front, -half_w), (back, -half_w), (back, half_w)]
        .iter()
        .map(|&(lon, lat)| {
            (
                pose.x + lon * cos_h - lat * sin_h,
                pose.y + lon * sin_h + lat * cos_h,
            )
        })
        .collect()
}

/// Curvature-versus-arc-length chart.
pub fn curvature_chart_svg(trajectory: &Trajectory, kappa_max: f64) -> String {
    let width = 640.0;
    let height = 240.0;
    let margin = 40.0;
    let n = trajectory.inputs.len();
    let s_max = trajectory.stations[n];
    let k_scale = (height - 2.0 * margin) / (2.0 * kappa_max);
    let s_scale = (width - 2.0 * margin) / s_max;
    let y_of = |k: f64| height / 2.0 - k * k_scale;
    let x_of = |s: f64| margin + s * s_scale;

    let mut pts = String::new();
    for i in 0..n {
        let _ = write!(
            pts,
            "{}{:.2},{:.2}",
            if i == 0 { "" } else { " " },
            x_of(trajectory.stations[i]),
            y_of(trajectory.inputs[i])
        );
    }
    let axis = y_of(0.0);
    let top = y_of(kappa_max);
    let bottom = y_of(-kappa_max);
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n",
            "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            "<line x1=\"{m:.0}\" y1=\"{axis:.2}\" x2=\"{xe:.2}\" y2=\"{axis:.2}\" stroke=\"#888888\"/>\n",
            "<line x1=\"{m:.0}\" y1=\"{top:.2}\" x2=\"{xe:.2}\" y2=\"{top:.2}\" stroke=\"#cccccc\" stroke-dasharray=\"4,4\"/>\n",
            "<line x1=\"{m:.0}\" y1=\"{bot:.2}\" x2=\"{xe:.2}\" y2=\"{bot:.2}\" stroke=\"#cccccc\" stroke-dasharray=\"4,4\"/>\n",
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"#2255cc\" stroke-width=\"1.5\"/>\n",
            "<text x=\"{m:.0}\" y=\"{ty:.2}\" font-size=\"12\" fill=\"#333333\">curvature [1/m] vs s [m]; dashed: +/- {km}</text>\n",
            "</svg>\n"
        ),
        w = width,
        h = height,
        m = margin,
        xe = width - margin,
        axis = axis,
        top = top,
        bot = bottom,
        pts = pts,
        ty = margin / 2.0,
        km = kappa_max,
    )
}
