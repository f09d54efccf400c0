//! Articulated-vehicle kinematics in the road-aligned frame: spatial
//! dynamics of the tractor states and joint angle, their discretization and
//! linearization, the Cartesian kinematic map, and the road-aligned
//! approximation of the trailer axle.

use nalgebra::{Matrix3, Vector3};

use crate::error::PlanError;
use crate::geometry::{CartesianPose, ReferencePath};

/// Finite-difference step for the step-model Jacobians.
const JACOBIAN_FD_STEP: f64 = 1e-6;

/// Geometric and actuation parameters of the tractor-trailer combination.
///
/// `m1` is the signed hitch offset from the tractor rear axle along its
/// heading; negative places the hitch behind the axle. `kappa_rate_max` is a
/// per-step bound on the curvature change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Tractor wheelbase.
    pub l1: f64,
    /// Tractor front overhang (ahead of the front axle).
    pub l1f: f64,
    /// Tractor rear overhang (behind the rear axle).
    pub l1r: f64,
    /// Signed hitch offset.
    pub m1: f64,
    /// Trailer axle to hitch distance.
    pub l2: f64,
    /// Trailer rear overhang (behind the trailer axle).
    pub l2r: f64,
    /// Body width of both bodies.
    pub width: f64,
    /// Curvature saturation of the tractor.
    pub kappa_max: f64,
    /// Curvature-rate limit per step.
    pub kappa_rate_max: f64,
}

impl VehicleParams {
    /// The 24 m Swedish-limit combination used as the default vehicle.
    /// The curvature-rate limit scales with the grid step.
    pub fn standard(ds: f64) -> Self {
        VehicleParams {
            l1: 3.78,
            l1f: 1.46,
            l1r: 1.64,
            m1: -0.30,
            l2: 13.97,
            l2r: 4.50,
            width: 2.54,
            kappa_max: 0.1,
            kappa_rate_max: 0.1 * ds,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let named = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("width", self.width),
            ("kappa_max", self.kappa_max),
            ("kappa_rate_max", self.kappa_rate_max),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(PlanError::Configuration(format!(
                    "vehicle parameter {name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [("l1f", self.l1f), ("l1r", self.l1r), ("l2r", self.l2r)] {
            if v < 0.0 || !v.is_finite() {
                return Err(PlanError::Configuration(format!(
                    "vehicle parameter {name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.m1.abs() >= self.l2 {
            return Err(PlanError::Configuration(format!(
                "hitch offset |{}| must be smaller than the trailer length {}",
                self.m1, self.l2
            )));
        }
        Ok(())
    }
}

/// Tractor road-aligned state at a station: lateral error, orientation
/// error, and joint angle (tractor heading minus trailer heading).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoadState {
    pub e_y: f64,
    pub e_psi: f64,
    pub beta1: f64,
}

impl RoadState {
    pub fn new(e_y: f64, e_psi: f64, beta1: f64) -> Self {
        RoadState { e_y, e_psi, beta1 }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.e_y, self.e_psi, self.beta1)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        RoadState::new(v[0], v[1], v[2])
    }
}

/// Road-aligned description of the trailer axle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrailerRoadState {
    pub s_tra: f64,
    pub e_y_tra: f64,
    pub e_psi_tra: f64,
}

/// One-step affine model `z_next = A z + B kappa + g` around a reference.
#[derive(Debug, Clone)]
pub struct LinearStepModel {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    pub g: Vector3<f64>,
}

impl LinearStepModel {
    pub fn predict(&self, z: &RoadState, kappa: f64) -> RoadState {
        RoadState::from_vector(&(self.a * z.as_vector() + self.b * kappa + self.g))
    }
}

/// Affine approximation of the trailer road state around a reference
/// tractor state, with the station frozen at the reference.
///
/// The heading row uses the partial derivatives of the trailer heading
/// error, the lateral row those of the trailer lateral error.
#[derive(Debug, Clone)]
pub struct TrailerLinearModel {
    pub base: TrailerRoadState,
    pub ref_state: RoadState,
    /// Gradient of `e_y_tra` w.r.t. `(e_y, e_psi, beta1)`.
    pub d_ey: Vector3<f64>,
    /// Gradient of `e_psi_tra` w.r.t. `(e_y, e_psi, beta1)`.
    pub d_epsi: Vector3<f64>,
}

impl TrailerLinearModel {
    pub fn eval_e_y(&self, z: &RoadState) -> f64 {
        self.base.e_y_tra + self.d_ey.dot(&(z.as_vector() - self.ref_state.as_vector()))
    }

    pub fn eval_e_psi(&self, z: &RoadState) -> f64 {
        self.base.e_psi_tra + self.d_epsi.dot(&(z.as_vector() - self.ref_state.as_vector()))
    }
}

fn check_model_domain(kappa_gamma: f64, z: &RoadState) -> Result<f64, PlanError> {
    let road_factor = 1.0 - z.e_y * kappa_gamma;
    if road_factor <= 0.0 {
        return Err(PlanError::ModelDomain(format!(
            "road-frame factor 1 - e_y*kappa_gamma = {road_factor:.4} <= 0"
        )));
    }
    if z.e_psi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(PlanError::ModelDomain(format!(
            "orientation error |{:.3}| >= pi/2",
            z.e_psi
        )));
    }
    if z.beta1.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(PlanError::ModelDomain(format!(
            "joint angle |{:.3}| >= pi/2 (jackknife)",
            z.beta1
        )));
    }
    Ok(road_factor)
}

/// Spatial derivatives `(e_y', e_psi', beta1')` of the road-aligned model.
pub fn spatial_rhs(
    params: &VehicleParams,
    kappa_gamma: f64,
    z: &RoadState,
    kappa: f64,
) -> Result<RoadState, PlanError> {
    let road_factor = check_model_domain(kappa_gamma, z)?;
    let stretch = road_factor / z.e_psi.cos();
    let e_y_d = road_factor * z.e_psi.tan();
    let e_psi_d = stretch * kappa - kappa_gamma;
    let beta1_d =
        stretch * (kappa - z.beta1.sin() / params.l2 + params.m1 / params.l2 * z.beta1.cos() * kappa);
    Ok(RoadState::new(e_y_d, e_psi_d, beta1_d))
}

/// Fourth-order Runge-Kutta step over `[s, s + ds]` with the curvature
/// input held constant across the step.
pub fn integrate_step(
    params: &VehicleParams,
    path: &ReferencePath,
    s: f64,
    z: &RoadState,
    kappa: f64,
    ds: f64,
) -> Result<RoadState, PlanError> {
    let f = |s_at: f64, state: &RoadState| -> Result<Vector3<f64>, PlanError> {
        let kg = path.curvature_at(s_at)?;
        Ok(spatial_rhs(params, kg, state, kappa)?.as_vector())
    };
    let z0 = z.as_vector();
    let k1 = f(s, z)?;
    let k2 = f(s + 0.5 * ds, &RoadState::from_vector(&(z0 + 0.5 * ds * k1)))?;
    let k3 = f(s + 0.5 * ds, &RoadState::from_vector(&(z0 + 0.5 * ds * k2)))?;
    let k4 = f(s + ds, &RoadState::from_vector(&(z0 + ds * k3)))?;
    let next = z0 + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Ok(RoadState::from_vector(&next))
}

/// Affine one-step model by central differences on the integrator.
pub fn linearize_step(
    params: &VehicleParams,
    path: &ReferencePath,
    s: f64,
    z_ref: &RoadState,
    kappa_ref: f64,
    ds: f64,
) -> Result<LinearStepModel, PlanError> {
    let h = JACOBIAN_FD_STEP;
    let base = integrate_step(params, path, s, z_ref, kappa_ref, ds)?;
    let mut a = Matrix3::zeros();
    for j in 0..3 {
        let mut zp = z_ref.as_vector();
        let mut zm = z_ref.as_vector();
        zp[j] += h;
        zm[j] -= h;
        let fp = integrate_step(params, path, s, &RoadState::from_vector(&zp), kappa_ref, ds)?;
        let fm = integrate_step(params, path, s, &RoadState::from_vector(&zm), kappa_ref, ds)?;
        let col = (fp.as_vector() - fm.as_vector()) / (2.0 * h);
        a.set_column(j, &col);
    }
    let fp = integrate_step(params, path, s, z_ref, kappa_ref + h, ds)?;
    let fm = integrate_step(params, path, s, z_ref, kappa_ref - h, ds)?;
    let b = (fp.as_vector() - fm.as_vector()) / (2.0 * h);
    let g = base.as_vector() - a * z_ref.as_vector() - b * kappa_ref;
    Ok(LinearStepModel { a, b, g })
}

/// Tractor and trailer axle poses with unnormalized headings, for internal
/// rigid-body placement.
pub(crate) struct VehicleFrames {
    pub tractor_x: f64,
    pub tractor_y: f64,
    pub tractor_heading: f64,
    pub trailer_x: f64,
    pub trailer_y: f64,
    pub trailer_heading: f64,
}

pub(crate) fn vehicle_frames(
    path: &ReferencePath,
    s: f64,
    z: &RoadState,
    params: &VehicleParams,
) -> Result<VehicleFrames, PlanError> {
    let (tx, ty) = path.offset_point(s, z.e_y)?;
    let theta_ref = path.raw_heading_at(s)?;
    let theta_veh = theta_ref + z.e_psi;
    let hitch_x = tx + params.m1 * theta_veh.cos();
    let hitch_y = ty + params.m1 * theta_veh.sin();
    let theta_tra = theta_veh - z.beta1;
    Ok(VehicleFrames {
        tractor_x: tx,
        tractor_y: ty,
        tractor_heading: theta_veh,
        trailer_x: hitch_x - params.l2 * theta_tra.cos(),
        trailer_y: hitch_y - params.l2 * theta_tra.sin(),
        trailer_heading: theta_tra,
    })
}

/// Cartesian poses of the tractor rear axle and the trailer axle for a
/// road-aligned tractor state.
pub fn tractor_to_cartesian(
    path: &ReferencePath,
    s: f64,
    z: &RoadState,
    params: &VehicleParams,
) -> Result<(CartesianPose, CartesianPose), PlanError> {
    let f = vehicle_frames(path, s, z, params)?;
    Ok((
        CartesianPose::new(f.tractor_x, f.tractor_y, f.tractor_heading),
        CartesianPose::new(f.trailer_x, f.trailer_y, f.trailer_heading),
    ))
}

/// Road-aligned trailer axle state: Cartesian placement followed by
/// projection onto the path, searched near the expected trailer station.
pub fn trailer_road_state(
    path: &ReferencePath,
    s: f64,
    z: &RoadState,
    params: &VehicleParams,
) -> Result<TrailerRoadState, PlanError> {
    let f = vehicle_frames(path, s, z, params)?;
    let pose = CartesianPose::new(f.trailer_x, f.trailer_y, f.trailer_heading);
    let hint = s + params.m1 - params.l2;
    let proj = path.project_hinted(&pose, hint)?;
    // recover the unwrapped heading error: the trailer heading differs from
    // the path heading by less than pi/2 inside the model domain
    let path_heading = if proj.s >= 0.0 && proj.s <= path.total_length() {
        path.raw_heading_at(proj.s)?
    } else {
        // tangent extensions share the heading of the nearer end
        let endpoint = proj.s.clamp(0.0, path.total_length());
        path.raw_heading_at(endpoint)?
    };
    let e_psi_tra = crate::geometry::normalize_angle(f.trailer_heading - path_heading);
    Ok(TrailerRoadState {
        s_tra: proj.s,
        e_y_tra: proj.e_y,
        e_psi_tra,
    })
}

/// Affine trailer model by central finite differences of
/// [`trailer_road_state`] with the tractor station held fixed.
pub fn trailer_linearize(
    path: &ReferencePath,
    s: f64,
    z_ref: &RoadState,
    params: &VehicleParams,
    delta: &[f64; 3],
) -> Result<TrailerLinearModel, PlanError> {
    for d in delta {
        if !(*d > 0.0) {
            return Err(PlanError::Configuration(
                "trailer linearization perturbations must be positive".into(),
            ));
        }
    }
    let base = trailer_road_state(path, s, z_ref, params)?;
    let mut d_ey = Vector3::zeros();
    let mut d_epsi = Vector3::zeros();
    for j in 0..3 {
        let mut zp = z_ref.as_vector();
        let mut zm = z_ref.as_vector();
        zp[j] += delta[j];
        zm[j] -= delta[j];
        let fp = trailer_road_state(path, s, &RoadState::from_vector(&zp), params)?;
        let fm = trailer_road_state(path, s, &RoadState::from_vector(&zm), params)?;
        d_ey[j] = (fp.e_y_tra - fm.e_y_tra) / (2.0 * delta[j]);
        d_epsi[j] = (fp.e_psi_tra - fm.e_psi_tra) / (2.0 * delta[j]);
    }
    Ok(TrailerLinearModel {
        base,
        ref_state: *z_ref,
        d_ey,
        d_epsi,
    })
}

/// Default perturbation sizes for the trailer linearization.
pub const TRAILER_FD_DELTA: [f64; 3] = [1e-4, 1e-4, 1e-4];

/// Steering angle realizing a tractor curvature: `phi = atan(kappa * L1)`.
pub fn curvature_to_steering(params: &VehicleParams, kappa: f64) -> f64 {
    (kappa * params.l1).atan()
}

/// Closed-form trailer road state on a straight reference path; used as an
/// independent oracle for the projection-based map.
pub fn straight_path_trailer_oracle(
    s: f64,
    z: &RoadState,
    params: &VehicleParams,
) -> TrailerRoadState {
    let theta_tra = z.e_psi - z.beta1;
    TrailerRoadState {
        s_tra: s + params.m1 * z.e_psi.cos() - params.l2 * theta_tra.cos(),
        e_y_tra: z.e_y + params.m1 * z.e_psi.sin() - params.l2 * theta_tra.sin(),
        e_psi_tra: theta_tra,
    }
}

/// Joint angle at which the articulation is in equilibrium for a constant
/// tractor curvature, solving `sin(b) - m1*kappa*cos(b) = l2*kappa`.
///
/// No equilibrium exists when the commanded turning radius is too tight for
/// the trailer length (`|l2 * kappa|` near or above one); that is a model
/// domain error.
pub fn equilibrium_joint_angle(params: &VehicleParams, kappa: f64) -> Result<f64, PlanError> {
    // bisection: the residual is monotone in b on (-pi/2, pi/2)
    let residual = |b: f64| b.sin() - params.m1 * kappa * b.cos() - params.l2 * kappa;
    let mut lo = -std::f64::consts::FRAC_PI_2 + 1e-9;
    let mut hi = std::f64::consts::FRAC_PI_2 - 1e-9;
    if !(residual(lo) < 0.0 && residual(hi) > 0.0) {
        return Err(PlanError::ModelDomain(format!(
            "no equilibrium joint angle for curvature {kappa} with trailer length {}",
            params.l2
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PathSegment;

    fn params() -> VehicleParams {
        VehicleParams::standard(0.1)
    }

    fn straight_path(len: f64) -> ReferencePath {
        ReferencePath::single(0.0, len, 0.1).unwrap()
    }

    fn arc_path(kappa: f64, len: f64) -> ReferencePath {
        ReferencePath::single(kappa, len, 0.1).unwrap()
    }

    #[test]
    fn centered_straight_driving_is_equilibrium() {
        let d = spatial_rhs(&params(), 0.0, &RoadState::default(), 0.0).unwrap();
        assert_eq!(d.e_y, 0.0);
        assert_eq!(d.e_psi, 0.0);
        assert_eq!(d.beta1, 0.0);
    }

    #[test]
    fn rhs_direct_substitution() {
        // z = 0, kappa = 0.05, straight road: the stretch factor is one,
        // so e_psi' = kappa and beta1' = kappa * (1 + m1/l2).
        let p = params();
        let d = spatial_rhs(&p, 0.0, &RoadState::default(), 0.05).unwrap();
        assert!(d.e_y.abs() < 1e-15);
        assert!((d.e_psi - 0.05).abs() < 1e-15);
        let expected = 0.05 * (1.0 - 0.30 / 13.97);
        assert!((d.beta1 - expected).abs() < 1e-12, "{} vs {}", d.beta1, expected);
    }

    #[test]
    fn equilibrium_joint_angle_zeroes_beta_rate() {
        let p = params();
        for &kappa in &[0.065, -0.065, 0.02, -0.02] {
            let beta_star = equilibrium_joint_angle(&p, kappa).unwrap();
            let d = spatial_rhs(&p, kappa, &RoadState::new(0.0, 0.0, beta_star), kappa).unwrap();
            assert!(d.beta1.abs() < 1e-12, "kappa {kappa}: beta1' = {}", d.beta1);
        }
    }

    #[test]
    fn equilibrium_does_not_exist_when_radius_shorter_than_trailer() {
        // 0.09 1/m is an 11.1 m radius, tighter than the 13.97 m trailer
        let p = params();
        assert!(equilibrium_joint_angle(&p, 0.09).is_err());
    }

    #[test]
    fn rhs_domain_errors() {
        let p = params();
        // e_y * kappa_gamma >= 1
        assert!(spatial_rhs(&p, 0.1, &RoadState::new(10.0, 0.0, 0.0), 0.0).is_err());
        assert!(spatial_rhs(&p, 0.0, &RoadState::new(0.0, 1.6, 0.0), 0.0).is_err());
        assert!(spatial_rhs(&p, 0.0, &RoadState::new(0.0, 0.0, 1.6), 0.0).is_err());
    }

    #[test]
    fn mirror_symmetry_of_rhs() {
        let p = params();
        let z = RoadState::new(0.4, 0.12, -0.2);
        let d = spatial_rhs(&p, 0.03, &z, 0.07).unwrap();
        let zm = RoadState::new(-0.4, -0.12, 0.2);
        let dm = spatial_rhs(&p, -0.03, &zm, -0.07).unwrap();
        assert!((d.e_y + dm.e_y).abs() < 1e-15);
        assert!((d.e_psi + dm.e_psi).abs() < 1e-15);
        assert!((d.beta1 + dm.beta1).abs() < 1e-15);
    }

    #[test]
    fn zero_state_stays_zero_on_straight_road() {
        let path = straight_path(10.0);
        let z = integrate_step(&params(), &path, 0.0, &RoadState::default(), 0.0, 2.0).unwrap();
        assert_eq!(z, RoadState::default());
    }

    #[test]
    fn rk4_richardson_convergence() {
        // error vs a ds/16 reference shrinks ~16x per halving of ds
        let p = params();
        let path = arc_path(0.05, 20.0);
        let z0 = RoadState::new(0.3, 0.05, 0.1);
        let kappa = 0.06;
        let full = 1.6;
        let integrate_n = |steps: usize| {
            let ds = full / steps as f64;
            let mut z = z0;
            let mut s = 0.0;
            for _ in 0..steps {
                z = integrate_step(&p, &path, s, &z, kappa, ds).unwrap();
                s += ds;
            }
            z.as_vector()
        };
        let reference = integrate_n(64);
        let e1 = (integrate_n(1) - reference).norm();
        let e2 = (integrate_n(2) - reference).norm();
        let e4 = (integrate_n(4) - reference).norm();
        let r12 = e1 / e2;
        let r24 = e2 / e4;
        assert!(r12 > 10.0 && r12 < 26.0, "ratio {r12}");
        assert!(r24 > 10.0 && r24 < 26.0, "ratio {r24}");
    }

    #[test]
    fn constant_curvature_equilibrium_is_fixed_point() {
        let p = params();
        let kappa = 0.065;
        let path = arc_path(kappa, 30.0);
        let beta_star = equilibrium_joint_angle(&p, kappa).unwrap();
        let z0 = RoadState::new(0.0, 0.0, beta_star);
        let z1 = integrate_step(&p, &path, 5.0, &z0, kappa, 0.1).unwrap();
        assert!((z1.e_y - z0.e_y).abs() < 1e-10);
        assert!((z1.e_psi - z0.e_psi).abs() < 1e-10);
        assert!((z1.beta1 - z0.beta1).abs() < 1e-10);
    }

    /// 5-point stencil derivative with a step distinct from the
    /// implementation's, as an independent oracle.
    fn stencil5<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn step_jacobian_matches_stencil_oracle() {
        let p = params();
        let path = arc_path(0.04, 30.0);
        let z_ref = RoadState::new(0.4, -0.08, 0.3);
        let kappa_ref = 0.05;
        let ds = 0.2;
        let model = linearize_step(&p, &path, 3.0, &z_ref, kappa_ref, ds).unwrap();
        for out in 0..3 {
            for j in 0..3 {
                let oracle = stencil5(
                    |v| {
                        let mut z = z_ref.as_vector();
                        z[j] = v;
                        integrate_step(&p, &path, 3.0, &RoadState::from_vector(&z), kappa_ref, ds)
                            .unwrap()
                            .as_vector()[out]
                    },
                    z_ref.as_vector()[j],
                    1e-4,
                );
                let got = model.a[(out, j)];
                let denom = oracle.abs().max(1e-6);
                assert!(
                    ((got - oracle) / denom).abs() < 1e-4,
                    "A[{out},{j}] = {got} vs oracle {oracle}"
                );
            }
            let oracle = stencil5(
                |v| {
                    integrate_step(&p, &path, 3.0, &z_ref, v, ds)
                        .unwrap()
                        .as_vector()[out]
                },
                kappa_ref,
                1e-4,
            );
            let got = model.b[out];
            let denom = oracle.abs().max(1e-6);
            assert!(
                ((got - oracle) / denom).abs() < 1e-4,
                "B[{out}] = {got} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn linearization_at_origin_has_no_drift() {
        let path = straight_path(10.0);
        let model = linearize_step(&params(), &path, 0.0, &RoadState::default(), 0.0, 0.1).unwrap();
        assert!(model.g.norm() < 1e-12, "g = {:?}", model.g);
    }

    #[test]
    fn input_sensitivity_of_heading_is_step_length() {
        // e_psi' = kappa at the origin of a straight road, so B[1] ~ ds
        let path = straight_path(10.0);
        let ds = 0.01;
        let model = linearize_step(&params(), &path, 0.0, &RoadState::default(), 0.0, ds).unwrap();
        assert!((model.b[1] - ds).abs() < 1e-5, "B[1] = {}", model.b[1]);
    }

    #[test]
    fn linear_model_reproduces_reference_point() {
        let p = params();
        let path = arc_path(0.05, 30.0);
        let z_ref = RoadState::new(0.2, 0.04, 0.5);
        let kappa_ref = 0.05;
        let step = integrate_step(&p, &path, 2.0, &z_ref, kappa_ref, 0.2).unwrap();
        let model = linearize_step(&p, &path, 2.0, &z_ref, kappa_ref, 0.2).unwrap();
        let predicted = model.predict(&z_ref, kappa_ref);
        assert!((predicted.as_vector() - step.as_vector()).norm() < 1e-12);
    }

    #[test]
    fn collinear_chain_on_straight_path() {
        let p = params();
        let path = straight_path(40.0);
        let (tractor, trailer) =
            tractor_to_cartesian(&path, 20.0, &RoadState::default(), &p).unwrap();
        assert!((tractor.x - 20.0).abs() < 1e-12);
        assert!(tractor.y.abs() < 1e-12);
        assert_eq!(tractor.heading, 0.0);
        assert!((trailer.x - 5.73).abs() < 1e-12, "trailer x = {}", trailer.x);
        assert!(trailer.y.abs() < 1e-12);
    }

    #[test]
    fn lateral_shift_translates_both_bodies() {
        let p = params();
        let path = straight_path(40.0);
        let base = tractor_to_cartesian(&path, 20.0, &RoadState::default(), &p).unwrap();
        let shifted =
            tractor_to_cartesian(&path, 20.0, &RoadState::new(1.0, 0.0, 0.0), &p).unwrap();
        assert!((shifted.0.y - base.0.y - 1.0).abs() < 1e-12);
        assert!((shifted.1.y - base.1.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn articulated_chain_matches_rigid_body_oracle() {
        // independent planar two-body forward kinematics
        let p = params();
        let path = straight_path(40.0);
        let z = RoadState::new(0.0, 0.0, 0.2);
        let (tractor, trailer) = tractor_to_cartesian(&path, 20.0, &z, &p).unwrap();
        let hitch = (20.0 + p.m1, 0.0);
        let theta_tra: f64 = -0.2;
        let oracle = (
            hitch.0 - p.l2 * theta_tra.cos(),
            hitch.1 - p.l2 * theta_tra.sin(),
        );
        assert!((trailer.x - oracle.0).abs() < 1e-12);
        assert!((trailer.y - oracle.1).abs() < 1e-12);
        assert!((tractor.heading - 0.0).abs() < 1e-12);
        assert!((trailer.heading - theta_tra).abs() < 1e-12);
    }

    #[test]
    fn trailer_state_zero_on_straight_path() {
        let p = params();
        let path = straight_path(60.0);
        let t = trailer_road_state(&path, 40.0, &RoadState::default(), &p).unwrap();
        assert!((t.s_tra - (40.0 + p.m1 - p.l2)).abs() < 1e-12);
        assert!(t.e_y_tra.abs() < 1e-12);
        assert!(t.e_psi_tra.abs() < 1e-12);
    }

    #[test]
    fn trailer_state_matches_straight_closed_form() {
        let p = params();
        let path = straight_path(80.0);
        let states = [
            RoadState::new(0.5, 0.2, -0.3),
            RoadState::new(-1.2, -0.4, 0.4),
            RoadState::new(2.0, 0.0, 0.15),
            RoadState::new(0.0, 0.35, 0.35),
        ];
        for z in states {
            let got = trailer_road_state(&path, 40.0, &z, &p).unwrap();
            let oracle = straight_path_trailer_oracle(40.0, &z, &p);
            assert!((got.s_tra - oracle.s_tra).abs() < 1e-9, "{z:?}");
            assert!((got.e_y_tra - oracle.e_y_tra).abs() < 1e-9, "{z:?}");
            assert!((got.e_psi_tra - oracle.e_psi_tra).abs() < 1e-9, "{z:?}");
        }
    }

    #[test]
    fn trailer_state_on_arc_against_dense_projection_oracle() {
        let p = params();
        let path = ReferencePath::new(
            CartesianPose::new(0.0, 0.0, 0.0),
            vec![
                PathSegment { length: 30.0, curvature: 0.0 },
                PathSegment { length: 40.0, curvature: 0.065 },
            ],
            0.1,
        )
        .unwrap();
        let z = RoadState::new(0.3, 0.1, 0.6);
        let s = 45.0;
        let got = trailer_road_state(&path, s, &z, &p).unwrap();
        // dense 1 mm sampling of the path around the trailer position
        let frames = vehicle_frames(&path, s, &z, &p).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        let mut sc = 0.0;
        while sc <= path.total_length() {
            let pose = path.pose_at(sc).unwrap();
            let d = (pose.x - frames.trailer_x).hypot(pose.y - frames.trailer_y);
            if d < best.0 {
                best = (d, sc);
            }
            sc += 0.001;
        }
        assert!((got.s_tra - best.1).abs() < 2e-3, "{} vs {}", got.s_tra, best.1);
        assert!((got.e_y_tra.abs() - best.0).abs() < 1e-6);
    }

    #[test]
    fn trailer_lateral_partials_on_straight_path() {
        let p = params();
        let path = straight_path(80.0);
        let model =
            trailer_linearize(&path, 40.0, &RoadState::default(), &p, &TRAILER_FD_DELTA).unwrap();
        assert!((model.d_ey[0] - 1.0).abs() < 1e-9, "d e_y_tra / d e_y = {}", model.d_ey[0]);
        assert!(
            (model.d_ey[2] - p.l2).abs() < 1e-6,
            "d e_y_tra / d beta1 = {}",
            model.d_ey[2]
        );
    }

    #[test]
    fn trailer_partials_match_higher_order_stencil() {
        let p = params();
        let path = ReferencePath::new(
            CartesianPose::new(0.0, 0.0, 0.0),
            vec![
                PathSegment { length: 30.0, curvature: 0.0 },
                PathSegment { length: 50.0, curvature: 0.05 },
            ],
            0.1,
        )
        .unwrap();
        let z_ref = RoadState::new(0.2, 0.05, 0.4);
        let s = 50.0;
        let model = trailer_linearize(&path, s, &z_ref, &p, &TRAILER_FD_DELTA).unwrap();
        for j in 0..3 {
            let oracle = stencil5(
                |v| {
                    let mut z = z_ref.as_vector();
                    z[j] = v;
                    trailer_road_state(&path, s, &RoadState::from_vector(&z), &p)
                        .unwrap()
                        .e_y_tra
                },
                z_ref.as_vector()[j],
                1e-3,
            );
            let got = model.d_ey[j];
            let denom = oracle.abs().max(1e-3);
            assert!(
                ((got - oracle) / denom).abs() < 1e-5,
                "d_ey[{j}] = {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn steering_conversion() {
        let p = params();
        assert_eq!(curvature_to_steering(&p, 0.0), 0.0);
        let phi = curvature_to_steering(&p, 0.1);
        assert!((phi - (0.378f64).atan()).abs() < 1e-15);
        let kappa_back = phi.tan() / p.l1;
        assert!((kappa_back - 0.1).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        p.m1 = -20.0;
        assert!(p.validate().is_err());
        let mut p2 = params();
        p2.width = 0.0;
        assert!(p2.validate().is_err());
        assert!(params().validate().is_ok());
    }
}
