//! The outer planning loop: linearize the vehicle model, trailer map, and
//! body offsets around the incumbent trajectory, assemble and solve the
//! structured QP, roll the optimized curvature sequence through the
//! nonlinear model, and iterate to a fixed point.

pub mod layout;
mod assembly;

use std::time::Instant;

use stageqp::{solve_qp, QpSettings, SolveStatus, WarmStart};

use crate::corridor::{
    body_offsets, collision_rows, free_interval, linearize_body_offsets, BodyPointSet, Corridor,
    Obstacle,
};
use crate::error::PlanError;
use crate::geometry::ReferencePath;
use crate::metrics::{compute_metrics, Metrics};
use crate::objectives::{build_cost, evaluate_objective, CostAssembly, ObjectiveSpec};
use crate::scenario::Scenario;
use crate::vehicle::{
    integrate_step, linearize_step, trailer_linearize, RoadState, TrailerLinearModel,
    VehicleParams, TRAILER_FD_DELTA,
};
use assembly::{assemble, AssembledQp, AssemblyInput, RowId};
use layout::VariableLayout;

/// Per-iteration box limiting how far the QP solution may move from the
/// linearization point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegion {
    pub e_y: f64,
    pub e_psi: f64,
    pub beta1: f64,
    pub kappa: f64,
}

impl Default for TrustRegion {
    fn default() -> Self {
        TrustRegion { e_y: 0.5, e_psi: 0.1, beta1: 0.1, kappa: 0.02 }
    }
}

impl TrustRegion {
    fn scaled(&self, f: f64) -> Self {
        TrustRegion {
            e_y: self.e_y * f,
            e_psi: self.e_psi * f,
            beta1: self.beta1 * f,
            kappa: self.kappa * f,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    /// Grid step along the path.
    pub ds: f64,
    /// Planning horizon; clamped to the path length.
    pub horizon: f64,
    pub max_sqp_iters: usize,
    /// Convergence threshold on the state update (infinity norm).
    pub step_tol_state: f64,
    /// Convergence threshold on the input update (infinity norm).
    pub step_tol_input: f64,
    pub trust_region: TrustRegion,
    /// Linear penalty on corridor slack variables.
    pub slack_weight: f64,
    pub objective: ObjectiveSpec,
    /// Body point spacing along each body side.
    pub body_spacing: f64,
    /// Safety margin subtracted from the free interval on both sides.
    pub safety_margin: f64,
    pub qp: QpSettings,
}

impl PlannerConfig {
    pub fn new(objective: ObjectiveSpec) -> Self {
        // Subproblem tolerances: the primal residual is held to a tight
        // absolute value (further tightened by the forcing sequence) with no
        // relative slack, or a warm start carried over from the previous
        // linearization could pass the exit test without tracking the
        // re-linearized problem. The dual residual scales with the 1e4
        // slack penalty weight, so its absolute tolerance is set to the
        // equivalent of 1e-6 relative to that scale; the active-set polish
        // sharpens accepted solutions well beyond it.
        let mut qp = QpSettings::default();
        qp.eps_rel = 0.0;
        qp.eps_dual_abs = 1e-2;
        PlannerConfig {
            ds: 0.1,
            horizon: f64::INFINITY,
            max_sqp_iters: 50,
            step_tol_state: 1e-4,
            step_tol_input: 1e-5,
            trust_region: TrustRegion::default(),
            slack_weight: 1e4,
            objective,
            body_spacing: crate::corridor::DEFAULT_BODY_SPACING,
            safety_margin: 0.0,
            qp,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.ds > 0.0) {
            return Err(PlanError::Configuration("ds must be positive".into()));
        }
        if !(self.horizon >= 2.0 * self.ds) {
            return Err(PlanError::Configuration("horizon must cover at least two steps".into()));
        }
        for (name, v) in [
            ("trust_region.e_y", self.trust_region.e_y),
            ("trust_region.e_psi", self.trust_region.e_psi),
            ("trust_region.beta1", self.trust_region.beta1),
            ("trust_region.kappa", self.trust_region.kappa),
            ("slack_weight", self.slack_weight),
            ("body_spacing", self.body_spacing),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(PlanError::Configuration(format!("{name} must be positive, got {v}")));
            }
        }
        if self.safety_margin < 0.0 {
            return Err(PlanError::Configuration("safety margin must be nonnegative".into()));
        }
        self.objective.validate()
    }
}

/// A discrete trajectory on the station grid. `slack[i]` reports the
/// largest nonlinear corridor violation of any body point at station `i`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub stations: Vec<f64>,
    pub states: Vec<RoadState>,
    pub inputs: Vec<f64>,
    pub slack: Vec<f64>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn max_slack(&self) -> f64 {
        self.slack.iter().fold(0.0f64, |m, &v| m.max(v))
    }
}

#[derive(Debug, Clone)]
pub struct IterationDiag {
    /// True nonlinear objective plus the slack penalty.
    pub objective: f64,
    pub step_norm_state: f64,
    pub step_norm_input: f64,
    pub qp_status: SolveStatus,
    pub qp_iterations: usize,
    pub trust_shrinks: usize,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub converged: bool,
    pub sqp_iterations: usize,
    pub diagnostics: Vec<IterationDiag>,
    pub wall_time_s: f64,
    pub metrics: Metrics,
}

/// Everything derived from the scenario that the iteration needs.
struct PlanContext {
    path: ReferencePath,
    corridor: Corridor,
    obstacles: Vec<Obstacle>,
    params: VehicleParams,
    body_points: BodyPointSet,
    stations: Vec<f64>,
    layout: VariableLayout,
    z_start: RoadState,
    kappa_start: f64,
    road_length: f64,
}

impl PlanContext {
    fn build(scenario: &Scenario, config: &PlannerConfig) -> Result<Self, PlanError> {
        config.validate()?;
        scenario.validate()?;
        let ds = config.ds;
        let params = scenario.vehicle_params(ds);
        params.validate()?;
        let path = scenario.build_path(ds)?;
        let horizon = config.horizon.min(path.total_length());
        let n_steps = (horizon / ds + 1e-9).floor() as usize;
        if n_steps < 2 {
            return Err(PlanError::Configuration(format!(
                "horizon {horizon} too short for ds {ds}"
            )));
        }
        let stations: Vec<f64> = (0..=n_steps).map(|i| i as f64 * ds).collect();
        let corridor = Corridor::new(stations.clone(), &scenario.corridor_spans())?;
        let body_points = BodyPointSet::uniform(&params, config.body_spacing)?;
        let layout = VariableLayout::new(n_steps, config.objective.aux_count());
        let road_length = path.total_length();
        Ok(PlanContext {
            path,
            corridor,
            obstacles: scenario.obstacles(),
            params,
            body_points,
            stations,
            layout,
            z_start: scenario.start_state(),
            kappa_start: scenario.kappa_start,
            road_length,
        })
    }

    fn n_steps(&self) -> usize {
        self.stations.len() - 1
    }

    /// Nonlinear rollout of an input sequence from the start state.
    fn rollout(&self, inputs: &[f64], ds: f64) -> Result<Vec<RoadState>, PlanError> {
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(self.z_start);
        for (i, &kappa) in inputs.iter().enumerate() {
            let z = states[i];
            states.push(integrate_step(
                &self.params,
                &self.path,
                self.stations[i],
                &z,
                kappa,
                ds,
            )?);
        }
        Ok(states)
    }

    /// Largest corridor violation of any body point, per station.
    fn violations(&self, states: &[RoadState]) -> Result<Vec<f64>, PlanError> {
        let mut out = Vec::with_capacity(states.len());
        for (i, z) in states.iter().enumerate() {
            let offsets = body_offsets(&self.path, &self.params, &self.body_points, self.stations[i], z)?;
            let mut worst = 0.0f64;
            for (s_j, off) in offsets {
                if s_j < 0.0 || s_j > self.road_length {
                    continue;
                }
                let (lo, hi) = free_interval(&self.corridor, &self.obstacles, s_j)?;
                worst = worst.max(lo - off).max(off - hi);
            }
            out.push(worst.max(0.0));
        }
        Ok(out)
    }

    fn true_objective(&self, config: &PlannerConfig, traj: &Trajectory) -> Result<f64, PlanError> {
        let j = evaluate_objective(
            &config.objective,
            &self.path,
            &self.params,
            &traj.stations,
            &traj.states,
            &traj.inputs,
            &self.body_points,
        )?;
        Ok(j + config.slack_weight * traj.slack.iter().sum::<f64>())
    }
}

/// Rate-limit and saturate an input sequence, holding the first entry.
fn project_inputs(params: &VehicleParams, kappa_start: f64, raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    out.push(kappa_start);
    for i in 1..raw.len() {
        let prev = out[i - 1];
        let v = raw[i]
            .clamp(prev - params.kappa_rate_max, prev + params.kappa_rate_max)
            .clamp(-params.kappa_max, params.kappa_max);
        out.push(v);
    }
    out
}

/// Centerline-tracking initial guess: the curvature profile follows the
/// road curvature (saturated and rate-limited from the start value) and the
/// states are its nonlinear rollout from the start state.
pub fn initialize_trajectory(
    scenario: &Scenario,
    config: &PlannerConfig,
) -> Result<Trajectory, PlanError> {
    let ctx = PlanContext::build(scenario, config)?;
    initialize_with(&ctx, config)
}

fn initialize_with(ctx: &PlanContext, config: &PlannerConfig) -> Result<Trajectory, PlanError> {
    let n = ctx.n_steps();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            ctx.path
                .curvature_at(ctx.stations[i])
                .map(|k| k.clamp(-ctx.params.kappa_max, ctx.params.kappa_max))
        })
        .collect::<Result<_, _>>()?;
    let inputs = project_inputs(&ctx.params, ctx.kappa_start, &raw);
    let states = ctx.rollout(&inputs, config.ds)?;
    let slack = ctx.violations(&states)?;
    Ok(Trajectory {
        stations: ctx.stations.clone(),
        states,
        inputs,
        slack,
    })
}

/// State carried across outer iterations: previous QP solution and its row
/// identity, for warm starting.
struct SqpState {
    warm: Option<(WarmStart, Vec<RowId>)>,
    /// Adapted dual step size carried between solves.
    rho: Option<f64>,
    /// Previous step norm, driving the inexact-subproblem forcing sequence.
    prev_step: Option<f64>,
    /// Current forcing tolerance; only ever tightens.
    forcing_eps: f64,
}

/// Linear models, cost, and screened corridor rows around an incumbent.
struct SubproblemParts {
    step_models: Vec<crate::vehicle::LinearStepModel>,
    cost: CostAssembly,
    /// Epigraph rows set aside by the pruning; re-added on demand when a
    /// solution violates them.
    dropped_aux: Vec<crate::objectives::AuxRow>,
    rows: Vec<(usize, crate::corridor::CollisionRow)>,
    x_incumbent: Vec<f64>,
}

fn build_parts(
    ctx: &PlanContext,
    config: &PlannerConfig,
    incumbent: &Trajectory,
) -> Result<SubproblemParts, PlanError> {
    let n = ctx.n_steps();
    let ds = config.ds;
    let layout = ctx.layout;

    let mut step_models = Vec::with_capacity(n);
    for i in 0..n {
        step_models.push(linearize_step(
            &ctx.params,
            &ctx.path,
            ctx.stations[i],
            &incumbent.states[i],
            incumbent.inputs[i],
            ds,
        )?);
    }
    let trailer_models: Option<Vec<TrailerLinearModel>> = if config.objective.needs_trailer_models()
    {
        let mut models = Vec::with_capacity(n);
        for i in 1..=n {
            models.push(trailer_linearize(
                &ctx.path,
                ctx.stations[i],
                &incumbent.states[i],
                &ctx.params,
                &TRAILER_FD_DELTA,
            )?);
        }
        Some(models)
    } else {
        None
    };
    let mut side_models = Vec::with_capacity(n);
    for i in 1..=n {
        side_models.push(linearize_body_offsets(
            &ctx.path,
            &ctx.params,
            &ctx.body_points,
            ctx.stations[i],
            &incumbent.states[i],
            &TRAILER_FD_DELTA,
        )?);
    }

    let mut cost = build_cost(
        &config.objective,
        &layout,
        trailer_models.as_deref(),
        if config.objective.needs_side_models() {
            Some(&side_models)
        } else {
            None
        },
    )?;

    // incumbent as a primal point (used for screening and warm starts)
    let x_incumbent = incumbent_vector(&layout, incumbent, &cost);

    let trust = config.trust_region;
    let dropped_aux = prune_epigraph_rows(&mut cost, &layout, &x_incumbent, &trust);

    // corridor rows, screened against the trust region
    let mut rows = Vec::new();
    for i in 1..=n {
        let station_rows = collision_rows(
            &ctx.corridor,
            &ctx.obstacles,
            &side_models[i - 1],
            ctx.road_length,
            config.safety_margin,
        )?;
        for cr in station_rows {
            let reach = cr.offset.grad[0].abs() * trust.e_y
                + cr.offset.grad[1].abs() * trust.e_psi
                + cr.offset.grad[2].abs() * trust.beta1;
            let keep_lo = cr.offset.base - cr.lo <= reach + SCREEN_SLACK;
            let keep_hi = cr.hi - cr.offset.base <= reach + SCREEN_SLACK;
            if keep_lo || keep_hi {
                rows.push((i, cr));
            }
        }
    }
    Ok(SubproblemParts {
        step_models,
        cost,
        dropped_aux,
        rows,
        x_incumbent,
    })
}

fn iterate(
    ctx: &PlanContext,
    config: &PlannerConfig,
    state: &mut SqpState,
    incumbent: &Trajectory,
) -> Result<(Trajectory, IterationDiag), PlanError> {
    let n = ctx.n_steps();
    let ds = config.ds;
    let layout = ctx.layout;
    let parts = build_parts(ctx, config, incumbent)?;
    let x_incumbent = &parts.x_incumbent;

    // Forcing sequence: each subproblem is solved to a small fraction of
    // the previous step norm, loose at first and tightening (never
    // loosening) as the outer iteration closes in, so a warm start from
    // the last linearization cannot pass the exit test without actually
    // tracking the re-linearized problem.
    if let Some(prev) = state.prev_step {
        state.forcing_eps = state.forcing_eps.min((0.05 * prev).clamp(1e-8, FORCING_CAP));
    }

    let incumbent_objective = ctx.true_objective(config, incumbent)?;

    // trust-region loop: shrink on rollout failure or non-descent
    let mut shrinks = 0usize;
    loop {
        let scaled_trust = config.trust_region.scaled(0.5f64.powi(shrinks as i32));
        let AssembledQp { problem, row_ids } = assemble(&AssemblyInput {
            layout,
            params: &ctx.params,
            step_models: &parts.step_models,
            cost: &parts.cost,
            corridor_rows: &parts.rows,
            incumbent,
            trust: scaled_trust,
            z_start: ctx.z_start,
            kappa_start: ctx.kappa_start,
            slack_weight: config.slack_weight,
            bound_shrink: BOUND_SHRINK,
        });

        let warm = make_warm_start(x_incumbent, &problem, state, &row_ids);
        let mut qp_settings = config.qp.clone();
        if let Some(rho) = state.rho {
            qp_settings.rho = rho;
        }
        qp_settings.eps_abs = state.forcing_eps;
        let solution = solve_qp(&problem, &qp_settings, Some(&warm))?;
        match solution.status {
            SolveStatus::Solved => {}
            SolveStatus::MaxIter
                if solution.primal_residual <= 1e-4
                    && solution.dual_residual <= config.qp.eps_dual_abs.max(1e-3) => {}
            status => {
                return Err(PlanError::QpAccuracy {
                    status,
                    primal: solution.primal_residual,
                })
            }
        }

        let raw_inputs: Vec<f64> = (0..n).map(|i| solution.x[layout.input(i)]).collect();
        let inputs = project_inputs(&ctx.params, ctx.kappa_start, &raw_inputs);
        match ctx.rollout(&inputs, ds) {
            Ok(states) => {
                let slack = ctx.violations(&states)?;
                let trajectory = Trajectory {
                    stations: ctx.stations.clone(),
                    states,
                    inputs,
                    slack,
                };
                let objective = ctx.true_objective(config, &trajectory)?;
                // a candidate that worsens the true merit is handled like a
                // rollout failure: shrink the trust region and re-solve
                if objective > incumbent_objective + 1e-10 * (1.0 + incumbent_objective.abs())
                    && shrinks < MAX_TRUST_SHRINKS
                {
                    shrinks += 1;
                    continue;
                }
                let mut step_state = 0.0f64;
                for i in 1..=n {
                    let d = trajectory.states[i].as_vector() - incumbent.states[i].as_vector();
                    step_state = step_state.max(d.abs().max());
                }
                let mut step_input = 0.0f64;
                for i in 0..n {
                    step_input = step_input.max((trajectory.inputs[i] - incumbent.inputs[i]).abs());
                }
                let diag = IterationDiag {
                    objective,
                    step_norm_state: step_state,
                    step_norm_input: step_input,
                    qp_status: solution.status,
                    qp_iterations: solution.iterations,
                    trust_shrinks: shrinks,
                };
                state.warm = Some((WarmStart::from(&solution), row_ids));
                state.rho = Some(solution.final_rho);
                state.prev_step = Some(step_state.max(step_input));
                return Ok((trajectory, diag));
            }
            Err(PlanError::ModelDomain(_)) if shrinks < MAX_TRUST_SHRINKS => {
                shrinks += 1;
                continue;
            }
            Err(e) => return Err(e),
        }
    }
}

const MAX_TRUST_SHRINKS: usize = 5;
const SCREEN_SLACK: f64 = 0.5;
/// Fraction of the trust-region reach honored by the epigraph pruning; the
/// violation check after each solve restores any row this discount loses.
const PRUNE_REACH_DISCOUNT: f64 = 0.3;
/// Loosest subproblem tolerance in the forcing sequence.
const FORCING_CAP: f64 = 1e-4;
/// Tightening of rate and saturation bounds inside the QP; keeps the exact
/// post-solve clamp of the inputs a no-op once subproblems are solved below
/// this accuracy.
const BOUND_SHRINK: f64 = 1e-5;

/// Primal point assembled from a trajectory: states, inputs, slacks set to
/// the measured violations, epigraph auxiliaries at their smallest feasible
/// value.
fn incumbent_vector(layout: &VariableLayout, traj: &Trajectory, cost: &CostAssembly) -> Vec<f64> {
    let mut x = vec![0.0; layout.total()];
    for i in 0..layout.n_stations {
        let z = traj.states[i].as_vector();
        for c in 0..3 {
            x[layout.state(i, c)] = z[c];
        }
        x[layout.slack_lo(i)] = traj.slack[i];
        x[layout.slack_hi(i)] = traj.slack[i];
    }
    for i in 0..layout.n_steps {
        x[layout.input(i)] = traj.inputs[i];
    }
    if layout.aux_count > 0 {
        let t = cost.min_feasible_aux(&x, layout.aux(0));
        x[layout.aux(0)] = if t.is_finite() { t } else { 0.0 };
    }
    x
}

fn make_warm_start(
    x_incumbent: &[f64],
    problem: &stageqp::QpProblem,
    state: &SqpState,
    row_ids: &[RowId],
) -> WarmStart {
    if let Some((prev, prev_ids)) = &state.warm {
        if prev.x.len() == problem.num_vars() && prev_ids == row_ids {
            return prev.clone();
        }
        if prev.x.len() == problem.num_vars() {
            return WarmStart {
                x: prev.x.clone(),
                y: vec![0.0; problem.num_constraints()],
            };
        }
    }
    WarmStart {
        x: x_incumbent.to_vec(),
        y: vec![0.0; problem.num_constraints()],
    }
}

/// Drop epigraph rows unlikely to attain the optimum within the trust
/// region: the best epigraph value is at least the incumbent's best row
/// minus its reach, and rows whose expressions cannot climb near that level
/// are set aside. The reach is deliberately discounted, so the subproblem
/// stays small; a verification pass re-adds any row the solution actually
/// violates before the result is accepted.
fn prune_epigraph_rows(
    cost: &mut CostAssembly,
    layout: &VariableLayout,
    x_incumbent: &[f64],
    trust: &TrustRegion,
) -> Vec<crate::objectives::AuxRow> {
    if cost.aux_count == 0 || cost.aux_rows.is_empty() {
        return Vec::new();
    }
    let aux_col = layout.aux(0);
    let trust_of = |col: usize| -> f64 {
        // columns of state components have per-component trust radii; other
        // columns do not appear in epigraph rows
        let states_end = 3 * layout.n_stations;
        if col < states_end {
            match col % 3 {
                0 => trust.e_y,
                1 => trust.e_psi,
                _ => trust.beta1,
            }
        } else {
            0.0
        }
    };

    // value and reach of the bounding expression of each row
    let mut info = Vec::with_capacity(cost.aux_rows.len());
    let mut t_lb = f64::NEG_INFINITY;
    for row in &cost.aux_rows {
        let mut val = 0.0;
        let mut reach = 0.0;
        let mut sign = 0.0;
        for &(col, v) in &row.coeffs {
            if col == aux_col {
                sign = v;
            } else {
                val += v * x_incumbent[col];
                reach += v.abs() * trust_of(col);
            }
        }
        // upper rows (t coeff -1): expr - t <= hi  =>  t >= expr - hi
        // lower rows (t coeff +1): expr + t >= lo  =>  t >= lo - expr
        let bound_now = if sign < 0.0 { val - row.hi } else { row.lo - val };
        t_lb = t_lb.max(bound_now - reach);
        info.push((bound_now, reach));
    }
    if !t_lb.is_finite() {
        return Vec::new();
    }
    let mut keep = Vec::with_capacity(cost.aux_rows.len());
    let mut dropped = Vec::new();
    for (row, (bound_now, reach)) in cost.aux_rows.drain(..).zip(info) {
        if bound_now + PRUNE_REACH_DISCOUNT * reach >= t_lb - 1e-9 {
            keep.push(row);
        } else {
            dropped.push(row);
        }
    }
    cost.aux_rows = keep;
    dropped
}

/// One outer iteration from an incumbent trajectory, built standalone.
pub fn sqp_iterate(
    incumbent: &Trajectory,
    scenario: &Scenario,
    config: &PlannerConfig,
) -> Result<(Trajectory, IterationDiag), PlanError> {
    let ctx = PlanContext::build(scenario, config)?;
    let mut state = SqpState { warm: None, rho: None, prev_step: None, forcing_eps: FORCING_CAP };
    iterate(&ctx, config, &mut state, incumbent)
}

/// Convex subproblem around a trajectory in the sparse dump format, for
/// cross-solver verification.
pub fn dump_final_qp(
    scenario: &Scenario,
    config: &PlannerConfig,
    incumbent: &Trajectory,
) -> Result<String, PlanError> {
    let ctx = PlanContext::build(scenario, config)?;
    let parts = build_parts(&ctx, config, incumbent)?;
    let AssembledQp { problem, .. } = assemble(&AssemblyInput {
        layout: ctx.layout,
        params: &ctx.params,
        step_models: &parts.step_models,
        cost: &parts.cost,
        corridor_rows: &parts.rows,
        incumbent,
        trust: config.trust_region,
        z_start: ctx.z_start,
        kappa_start: ctx.kappa_start,
        slack_weight: config.slack_weight,
        bound_shrink: BOUND_SHRINK,
    });
    let mut buf = Vec::new();
    stageqp::dump_problem(&problem, &mut buf)?;
    Ok(String::from_utf8(buf).expect("dump is ASCII"))
}

/// Plan a trajectory for the scenario.
pub fn plan(scenario: &Scenario, config: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let start = Instant::now();
    let ctx = PlanContext::build(scenario, config)?;
    let mut incumbent = initialize_with(&ctx, config)?;
    let mut state = SqpState { warm: None, rho: None, prev_step: None, forcing_eps: FORCING_CAP };
    let mut diagnostics = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_sqp_iters {
        let (next, diag) = iterate(&ctx, config, &mut state, &incumbent)?;
        let done = diag.step_norm_state <= config.step_tol_state
            && diag.step_norm_input <= config.step_tol_input;
        diagnostics.push(diag);
        incumbent = next;
        if done {
            converged = true;
            break;
        }
    }
    let wall = start.elapsed().as_secs_f64();
    let metrics = compute_metrics(
        &ctx.path,
        &ctx.params,
        &incumbent,
        &ctx.body_points,
        wall,
    )?;
    Ok(PlanResult {
        sqp_iterations: diagnostics.len(),
        trajectory: incumbent,
        converged,
        diagnostics,
        wall_time_s: wall,
        metrics,
    })
}

/// Discrete search over the blend parameter: plans every scenario for every
/// grid value and returns the value minimizing the worst absolute swept-area
/// difference, ties broken by the smaller parameter.
pub fn k_sweep(
    scenarios: &[Scenario],
    config: &PlannerConfig,
    k_grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>), PlanError> {
    if k_grid.is_empty() || scenarios.is_empty() {
        return Err(PlanError::Configuration("sweep needs scenarios and a K grid".into()));
    }
    let mut table = Vec::with_capacity(k_grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &k in k_grid {
        if !(0.0..=1.0).contains(&k) {
            return Err(PlanError::Configuration(format!("K = {k} outside [0, 1]")));
        }
        let mut worst = 0.0f64;
        let mut valid = true;
        for scenario in scenarios {
            let mut cfg = config.clone();
            cfg.objective = ObjectiveSpec {
                kind: crate::objectives::ObjectiveKind::Blend,
                k_blend: Some(k),
                smooth_weight: config.objective.smooth_weight,
            };
            match plan(scenario, &cfg) {
                Ok(result) if result.converged => {
                    worst = worst.max(result.metrics.area_diff.abs());
                }
                _ => {
                    valid = false;
                    break;
                }
            }
        }
        if valid {
            table.push((k, worst));
            if best.map_or(true, |(_, w)| worst < w) {
                best = Some((k, worst));
            }
        }
    }
    match best {
        Some((k, _)) => Ok((k, table)),
        None => Err(PlanError::Configuration("no K value produced a converged plan".into())),
    }
}
