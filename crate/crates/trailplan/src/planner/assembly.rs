//! Building the convex subproblem from the per-station linear models.
//!
//! Row blocks, in order: one identity row per variable (start conditions,
//! trust region, saturation, slack nonnegativity), dynamics equalities,
//! curvature-rate limits, corridor rows (two per surviving body point, with
//! per-station slacks), then epigraph rows from the cost assembly.

use stageqp::{CscMatrix, QpProblem};

use crate::corridor::CollisionRow;
use crate::objectives::CostAssembly;
use crate::planner::layout::VariableLayout;
use crate::planner::{Trajectory, TrustRegion};
use crate::vehicle::{LinearStepModel, RoadState, VehicleParams};

pub(super) struct AssemblyInput<'a> {
    pub layout: VariableLayout,
    pub params: &'a VehicleParams,
    pub step_models: &'a [LinearStepModel],
    pub cost: &'a CostAssembly,
    /// `(station, row)` pairs surviving the trust-region screening.
    pub corridor_rows: &'a [(usize, CollisionRow)],
    pub incumbent: &'a Trajectory,
    pub trust: TrustRegion,
    pub z_start: RoadState,
    pub kappa_start: f64,
    pub slack_weight: f64,
    /// Saturation and rate bounds are tightened by this much inside the QP,
    /// so that solver-tolerance-level violations vanish and the exact
    /// clamping of the returned inputs is a no-op rather than a cascade of
    /// adjustments along the horizon.
    pub bound_shrink: f64,
}

/// Identifier of a constraint row, used to decide whether dual warm starts
/// carry over between outer iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum RowId {
    VarBox(usize),
    Dynamics { step: usize, comp: usize },
    Rate(usize),
    CorridorLo { station: usize, point: usize },
    CorridorHi { station: usize, point: usize },
    Epigraph(usize),
}

pub(super) struct AssembledQp {
    pub problem: QpProblem,
    pub row_ids: Vec<RowId>,
}

pub(super) fn assemble(input: &AssemblyInput) -> AssembledQp {
    let layout = &input.layout;
    let n = layout.n_steps;
    let n_vars = layout.total();

    let mut a_trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut l = Vec::new();
    let mut u = Vec::new();
    let mut row_ids = Vec::new();
    let mut row = 0usize;

    // variable boxes
    for j in 0..n_vars {
        a_trips.push((row, j, 1.0));
        row_ids.push(RowId::VarBox(j));
        row += 1;
    }
    l.resize(n_vars, f64::NEG_INFINITY);
    u.resize(n_vars, f64::INFINITY);
    let z0 = input.z_start.as_vector();
    for c in 0..3 {
        l[layout.state(0, c)] = z0[c];
        u[layout.state(0, c)] = z0[c];
    }
    let tr = [input.trust.e_y, input.trust.e_psi, input.trust.beta1];
    for i in 1..layout.n_stations {
        let z_ref = input.incumbent.states[i].as_vector();
        for c in 0..3 {
            l[layout.state(i, c)] = z_ref[c] - tr[c];
            u[layout.state(i, c)] = z_ref[c] + tr[c];
        }
    }
    l[layout.input(0)] = input.kappa_start;
    u[layout.input(0)] = input.kappa_start;
    let sat = input.params.kappa_max - input.bound_shrink;
    for i in 1..n {
        let k_ref = input.incumbent.inputs[i];
        l[layout.input(i)] = (k_ref - input.trust.kappa).max(-sat);
        u[layout.input(i)] = (k_ref + input.trust.kappa).min(sat);
    }
    for i in 0..layout.n_stations {
        l[layout.slack_lo(i)] = 0.0;
        l[layout.slack_hi(i)] = 0.0;
    }

    // dynamics equalities: A_i z_i + B_i kappa_i - z_{i+1} = -g_i
    for (i, model) in input.step_models.iter().enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                let v = model.a[(r, c)];
                if v != 0.0 {
                    a_trips.push((row, layout.state(i, c), v));
                }
            }
            if model.b[r] != 0.0 {
                a_trips.push((row, layout.input(i), model.b[r]));
            }
            a_trips.push((row, layout.state(i + 1, r), -1.0));
            l.push(-model.g[r]);
            u.push(-model.g[r]);
            row_ids.push(RowId::Dynamics { step: i, comp: r });
            row += 1;
        }
    }

    // curvature-rate rows
    let rate = input.params.kappa_rate_max - input.bound_shrink;
    for i in 1..n {
        a_trips.push((row, layout.input(i), 1.0));
        a_trips.push((row, layout.input(i - 1), -1.0));
        l.push(-rate);
        u.push(rate);
        row_ids.push(RowId::Rate(i));
        row += 1;
    }

    // corridor rows with slacks
    for (station, cr) in input.corridor_rows {
        let c = cr.offset.affine_constant();
        let grad = cr.offset.grad;
        let state_cols: Vec<(usize, f64)> = (0..3)
            .filter(|&a| grad[a] != 0.0)
            .map(|a| (layout.state(*station, a), grad[a]))
            .collect();
        // lower side: grad . z + s_lo >= lo - c
        for &(col, v) in &state_cols {
            a_trips.push((row, col, v));
        }
        a_trips.push((row, layout.slack_lo(*station), 1.0));
        l.push(cr.lo - c);
        u.push(f64::INFINITY);
        row_ids.push(RowId::CorridorLo {
            station: *station,
            point: cr.offset.point,
        });
        row += 1;
        // upper side: grad . z - s_hi <= hi - c
        for &(col, v) in &state_cols {
            a_trips.push((row, col, v));
        }
        a_trips.push((row, layout.slack_hi(*station), -1.0));
        l.push(f64::NEG_INFINITY);
        u.push(cr.hi - c);
        row_ids.push(RowId::CorridorHi {
            station: *station,
            point: cr.offset.point,
        });
        row += 1;
    }

    // epigraph rows
    for (k, aux_row) in input.cost.aux_rows.iter().enumerate() {
        for &(col, v) in &aux_row.coeffs {
            a_trips.push((row, col, v));
        }
        l.push(aux_row.lo);
        u.push(aux_row.hi);
        row_ids.push(RowId::Epigraph(k));
        row += 1;
    }

    let m = row;
    let mut q = vec![0.0; n_vars];
    for &(j, v) in &input.cost.linear {
        q[j] += v;
    }
    for i in 0..layout.n_stations {
        q[layout.slack_lo(i)] += input.slack_weight;
        q[layout.slack_hi(i)] += input.slack_weight;
    }

    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(n_vars, n_vars, &input.cost.quad_upper),
        q,
        a: CscMatrix::from_triplets(m, n_vars, &a_trips),
        l,
        u,
        layout: Some(layout.stage_layout()),
    };
    AssembledQp { problem, row_ids }
}
