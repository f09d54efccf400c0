//! Cost terms of the planning problem: per-station lateral-deviation
//! objectives plus a curvature-smoothness penalty, assembled as quadratic
//! and epigraph data over the QP decision variables.

use crate::corridor::{body_offsets, BodyPointSet, LinearBodyOffset};
use crate::error::PlanError;
use crate::geometry::ReferencePath;
use crate::planner::layout::VariableLayout;
use crate::vehicle::{trailer_road_state, RoadState, TrailerLinearModel, VehicleParams};

/// Lateral-deviation objective family. The numeric names 1-5 used on the
/// command line map onto the variants in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// Squared lateral error of the tractor.
    TractorCentering,
    /// Squared lateral error of the trailer axle.
    TrailerCentering,
    /// Squared blend `(1-K) e_y + K e_y_tra`.
    Blend,
    /// Infinity norm over tractor and trailer lateral errors.
    MaxDeviation,
    /// Infinity norm over sampled body-side offsets.
    SweptSides,
}

impl ObjectiveKind {
    pub fn from_index(idx: u8) -> Result<Self, PlanError> {
        Ok(match idx {
            1 => ObjectiveKind::TractorCentering,
            2 => ObjectiveKind::TrailerCentering,
            3 => ObjectiveKind::Blend,
            4 => ObjectiveKind::MaxDeviation,
            5 => ObjectiveKind::SweptSides,
            other => {
                return Err(PlanError::Configuration(format!(
                    "objective index {other} outside 1..=5"
                )))
            }
        })
    }

    pub fn index(&self) -> u8 {
        match self {
            ObjectiveKind::TractorCentering => 1,
            ObjectiveKind::TrailerCentering => 2,
            ObjectiveKind::Blend => 3,
            ObjectiveKind::MaxDeviation => 4,
            ObjectiveKind::SweptSides => 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Trade-off between tractor and trailer centering; `Blend` only.
    pub k_blend: Option<f64>,
    /// Weight of the curvature-smoothness term.
    pub smooth_weight: f64,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, k_blend: Option<f64>) -> Result<Self, PlanError> {
        let spec = ObjectiveSpec {
            kind,
            k_blend,
            smooth_weight: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        match (self.kind, self.k_blend) {
            (ObjectiveKind::Blend, Some(k)) if (0.0..=1.0).contains(&k) => {}
            (ObjectiveKind::Blend, Some(k)) => {
                return Err(PlanError::Configuration(format!("K = {k} outside [0, 1]")))
            }
            (ObjectiveKind::Blend, None) => {
                return Err(PlanError::Configuration("blend objective needs K".into()))
            }
            (_, Some(_)) => {
                return Err(PlanError::Configuration(
                    "K is only meaningful for the blend objective".into(),
                ))
            }
            (_, None) => {}
        }
        if !(self.smooth_weight >= 0.0) || !self.smooth_weight.is_finite() {
            return Err(PlanError::Configuration(format!(
                "smoothness weight {} must be finite and nonnegative",
                self.smooth_weight
            )));
        }
        Ok(())
    }

    /// Number of epigraph auxiliaries this objective adds to the QP.
    pub fn aux_count(&self) -> usize {
        match self.kind {
            ObjectiveKind::MaxDeviation | ObjectiveKind::SweptSides => 1,
            _ => 0,
        }
    }

    pub fn needs_trailer_models(&self) -> bool {
        matches!(
            self.kind,
            ObjectiveKind::TrailerCentering | ObjectiveKind::Blend | ObjectiveKind::MaxDeviation
        )
    }

    pub fn needs_side_models(&self) -> bool {
        self.kind == ObjectiveKind::SweptSides
    }
}

/// A linear row `lo <= coeffs . x <= hi` tying epigraph auxiliaries to the
/// affine expressions they bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// Quadratic/linear cost data over the decision vector, in the convention
/// `1/2 x' P x + q' x + constant`. `quad_upper` holds the upper triangle of
/// `P` as triplets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostAssembly {
    pub quad_upper: Vec<(usize, usize, f64)>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
    pub aux_count: usize,
    pub aux_rows: Vec<AuxRow>,
}

impl CostAssembly {
    /// Cost of a full decision vector (the epigraph auxiliaries are part of
    /// `x`, so for kinds with auxiliaries this is the epigraph bound plus
    /// the smoothness term).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for &(r, c, v) in &self.quad_upper {
            let term = 0.5 * v * x[r] * x[c];
            acc += if r == c { term } else { 2.0 * term };
        }
        for &(j, v) in &self.linear {
            acc += v * x[j];
        }
        acc
    }

    /// Smallest epigraph value feasible for a fixed decision vector: the
    /// max over aux rows of the bounded affine expressions. Only meaningful
    /// for assemblies with one auxiliary.
    pub fn min_feasible_aux(&self, x: &[f64], aux_col: usize) -> f64 {
        let mut t = f64::NEG_INFINITY;
        for row in &self.aux_rows {
            let mut expr = 0.0;
            let mut t_coeff = 0.0;
            for &(j, v) in &row.coeffs {
                if j == aux_col {
                    t_coeff = v;
                } else {
                    expr += v * x[j];
                }
            }
            if t_coeff == 0.0 {
                continue;
            }
            // expr + t_coeff * t within [lo, hi]
            if t_coeff < 0.0 {
                // t >= (expr - hi) / -t_coeff
                if row.hi.is_finite() {
                    t = t.max((expr - row.hi) / -t_coeff);
                }
            } else if row.lo.is_finite() {
                t = t.max((row.lo - expr) / t_coeff);
            }
        }
        t
    }
}

/// Assemble the QP cost for the configured objective.
///
/// `trailer_models[i]` and `side_models[i]` describe station `i + 1`; the
/// start station is excluded from all deviation sums since its state is
/// fixed by the initial condition.
pub fn build_cost(
    spec: &ObjectiveSpec,
    layout: &VariableLayout,
    trailer_models: Option<&[TrailerLinearModel]>,
    side_models: Option<&[Vec<LinearBodyOffset>]>,
) -> Result<CostAssembly, PlanError> {
    spec.validate()?;
    let n = layout.n_steps;
    if spec.needs_trailer_models() {
        match trailer_models {
            Some(models) if models.len() == n => {}
            _ => {
                return Err(PlanError::Configuration(
                    "objective needs one trailer model per station".into(),
                ))
            }
        }
    }
    if spec.needs_side_models() {
        match side_models {
            Some(models) if models.len() == n => {}
            _ => {
                return Err(PlanError::Configuration(
                    "objective needs side-offset models per station".into(),
                ))
            }
        }
    }
    if layout.aux_count != spec.aux_count() {
        return Err(PlanError::Configuration(
            "layout auxiliary count does not match the objective".into(),
        ));
    }

    let mut asm = CostAssembly {
        aux_count: spec.aux_count(),
        ..Default::default()
    };

    // affine trailer lateral error in state coordinates: c + g . z_i
    let trailer_affine = |model: &TrailerLinearModel| {
        let c = model.base.e_y_tra - model.d_ey.dot(&model.ref_state.as_vector());
        (c, [model.d_ey[0], model.d_ey[1], model.d_ey[2]])
    };

    match spec.kind {
        ObjectiveKind::TractorCentering => {
            for i in 1..=n {
                asm.quad_upper.push((layout.state(i, 0), layout.state(i, 0), 2.0));
            }
        }
        ObjectiveKind::TrailerCentering => {
            let models = trailer_models.unwrap();
            for i in 1..=n {
                let (c, g) = trailer_affine(&models[i - 1]);
                push_affine_square(&mut asm, layout, i, c, &g);
            }
        }
        ObjectiveKind::Blend => {
            let k = spec.k_blend.unwrap();
            let models = trailer_models.unwrap();
            for i in 1..=n {
                let (c, g) = trailer_affine(&models[i - 1]);
                let coeffs = [(1.0 - k) + k * g[0], k * g[1], k * g[2]];
                push_affine_square(&mut asm, layout, i, k * c, &coeffs);
            }
        }
        ObjectiveKind::MaxDeviation => {
            let t = layout.aux(0);
            asm.linear.push((t, 1.0));
            let models = trailer_models.unwrap();
            for i in 1..=n {
                push_epigraph_pair(&mut asm, layout, i, t, 0.0, &[1.0, 0.0, 0.0]);
                let (c, g) = trailer_affine(&models[i - 1]);
                push_epigraph_pair(&mut asm, layout, i, t, c, &g);
            }
            push_tie_break(&mut asm, layout);
        }
        ObjectiveKind::SweptSides => {
            let t = layout.aux(0);
            asm.linear.push((t, 1.0));
            let models = side_models.unwrap();
            for i in 1..=n {
                for side in &models[i - 1] {
                    let g = [side.grad[0], side.grad[1], side.grad[2]];
                    push_epigraph_pair(&mut asm, layout, i, t, side.affine_constant(), &g);
                }
            }
            push_tie_break(&mut asm, layout);
        }
    }

    push_smoothness(&mut asm, layout, spec.smooth_weight);
    Ok(asm)
}

/// The infinity-norm objectives have non-unique minimizers (any trajectory
/// under the optimal bound ties). A vanishing quadratic on the inputs and
/// the bound variable makes the subproblem minimizer unique and
/// deterministic: among tied trajectories, the one with least steering
/// energy is returned. States carry no such term, so a trajectory that
/// stays off-center after a turn remains optimal rather than being pulled
/// back to the centerline.
const TIE_BREAK_WEIGHT: f64 = 1e-6;

fn push_tie_break(asm: &mut CostAssembly, layout: &VariableLayout) {
    for i in 0..layout.n_steps {
        let c = layout.input(i);
        asm.quad_upper.push((c, c, 2.0 * TIE_BREAK_WEIGHT));
    }
    let t = layout.aux(0);
    asm.quad_upper.push((t, t, 2.0 * TIE_BREAK_WEIGHT));
}

/// `(c + g . z_i)^2` expanded over the station's state columns.
fn push_affine_square(
    asm: &mut CostAssembly,
    layout: &VariableLayout,
    station: usize,
    c: f64,
    g: &[f64; 3],
) {
    for a in 0..3 {
        if g[a] == 0.0 {
            continue;
        }
        for b in a..3 {
            if g[b] == 0.0 {
                continue;
            }
            asm.quad_upper
                .push((layout.state(station, a), layout.state(station, b), 2.0 * g[a] * g[b]));
        }
        asm.linear.push((layout.state(station, a), 2.0 * c * g[a]));
    }
    asm.constant += c * c;
}

/// `|c + g . z_i| <= t` as the pair `g.z - t <= -c` and `g.z + t >= -c`.
fn push_epigraph_pair(
    asm: &mut CostAssembly,
    layout: &VariableLayout,
    station: usize,
    t: usize,
    c: f64,
    g: &[f64; 3],
) {
    let base: Vec<(usize, f64)> = (0..3)
        .filter(|&a| g[a] != 0.0)
        .map(|a| (layout.state(station, a), g[a]))
        .collect();
    let mut upper = base.clone();
    upper.push((t, -1.0));
    asm.aux_rows.push(AuxRow {
        coeffs: upper,
        lo: f64::NEG_INFINITY,
        hi: -c,
    });
    let mut lower = base;
    lower.push((t, 1.0));
    asm.aux_rows.push(AuxRow {
        coeffs: lower,
        lo: -c,
        hi: f64::INFINITY,
    });
}

fn push_smoothness(asm: &mut CostAssembly, layout: &VariableLayout, weight: f64) {
    if weight == 0.0 {
        return;
    }
    for i in 1..layout.n_steps {
        let a = layout.input(i - 1);
        let b = layout.input(i);
        asm.quad_upper.push((a, a, 2.0 * weight));
        asm.quad_upper.push((b, b, 2.0 * weight));
        asm.quad_upper.push((a, b, -2.0 * weight));
    }
}

/// True nonlinear objective value of a realized trajectory, recomputed with
/// the exact trailer map and body placement instead of the linear models.
/// Includes the smoothness term.
pub fn evaluate_objective(
    spec: &ObjectiveSpec,
    path: &ReferencePath,
    params: &VehicleParams,
    stations: &[f64],
    states: &[RoadState],
    inputs: &[f64],
    body_points: &BodyPointSet,
) -> Result<f64, PlanError> {
    spec.validate()?;
    assert_eq!(stations.len(), states.len());
    let mut j_e = 0.0f64;
    match spec.kind {
        ObjectiveKind::TractorCentering => {
            for z in &states[1..] {
                j_e += z.e_y * z.e_y;
            }
        }
        ObjectiveKind::TrailerCentering => {
            for (s, z) in stations[1..].iter().zip(&states[1..]) {
                let t = trailer_road_state(path, *s, z, params)?;
                j_e += t.e_y_tra * t.e_y_tra;
            }
        }
        ObjectiveKind::Blend => {
            let k = spec.k_blend.unwrap();
            for (s, z) in stations[1..].iter().zip(&states[1..]) {
                let t = trailer_road_state(path, *s, z, params)?;
                let blend = (1.0 - k) * z.e_y + k * t.e_y_tra;
                j_e += blend * blend;
            }
        }
        ObjectiveKind::MaxDeviation => {
            let mut worst = 0.0f64;
            for (s, z) in stations[1..].iter().zip(&states[1..]) {
                let t = trailer_road_state(path, *s, z, params)?;
                worst = worst.max(z.e_y.abs()).max(t.e_y_tra.abs());
            }
            j_e = worst;
        }
        ObjectiveKind::SweptSides => {
            let mut worst = 0.0f64;
            for (s, z) in stations[1..].iter().zip(&states[1..]) {
                for (_, offset) in body_offsets(path, params, body_points, *s, z)? {
                    worst = worst.max(offset.abs());
                }
            }
            j_e = worst;
        }
    }
    let mut j_kappa = 0.0f64;
    for w in inputs.windows(2) {
        j_kappa += (w[1] - w[0]) * (w[1] - w[0]);
    }
    Ok(j_e + spec.smooth_weight * j_kappa)
}
