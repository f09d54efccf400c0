//! Active-set polish: re-solve the KKT conditions restricted to the
//! constraints detected active, with light regularization and iterative
//! refinement. The detected set is repaired over a few rounds (violated
//! rows join, wrong-sign multipliers leave), which copes with the noisy
//! duals of a first-order iterate. Accepted only when it reduces the worse
//! of the two residuals.

use std::collections::BTreeMap;

use crate::ldlt::LdltFactor;
use crate::sparse::CscMatrix;
use crate::{QpProblem, QpSettings, QpSolution, SolveStatus};

const REPAIR_ROUNDS: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
    Equality,
}

pub fn polish(problem: &QpProblem, settings: &QpSettings, solution: &mut QpSolution) {
    let n = problem.num_vars();
    let m = problem.num_constraints();

    // Initial active set: equality rows always; otherwise the dual sign
    // decides, falling back to primal proximity for rows whose multiplier
    // has not separated from zero yet (constraints that ride their bound,
    // like rate limits on a bang-bang tail, often converge primal-first).
    let mut ax = vec![0.0; m];
    problem.a.mul_vec(&solution.x, &mut ax);
    let mut active: BTreeMap<usize, Side> = BTreeMap::new();
    for i in 0..m {
        if problem.l[i] == problem.u[i] {
            active.insert(i, Side::Equality);
            continue;
        }
        if solution.y[i] < 0.0 && problem.l[i].is_finite() {
            active.insert(i, Side::Lower);
        } else if solution.y[i] > 0.0 && problem.u[i].is_finite() {
            active.insert(i, Side::Upper);
        } else {
            let near = 100.0 * settings.eps_abs;
            if problem.l[i].is_finite() && (ax[i] - problem.l[i]).abs() <= near * (1.0 + problem.l[i].abs()) {
                active.insert(i, Side::Lower);
            } else if problem.u[i].is_finite()
                && (ax[i] - problem.u[i]).abs() <= near * (1.0 + problem.u[i].abs())
            {
                active.insert(i, Side::Upper);
            }
        }
    }

    let mut best: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
    for _round in 0..REPAIR_ROUNDS {
        let Some((x_pol, y_pol)) = solve_active_set(problem, settings, &active) else {
            break;
        };

        problem.a.mul_vec(&x_pol, &mut ax);
        let mut prim = 0.0f64;
        let mut prim_argmax = 0usize;
        for i in 0..m {
            let z = ax[i].clamp(problem.l[i], problem.u[i]);
            let v = (ax[i] - z).abs();
            if v > prim {
                prim = v;
                prim_argmax = i;
            }
        }
        if settings.verbose && prim > settings.eps_abs {
            eprintln!(
                "stageqp polish round: prim {prim:.3e} at row {prim_argmax} (active: {}), {} actives",
                active.contains_key(&prim_argmax),
                active.len()
            );
        }
        let mut px = vec![0.0; n];
        problem.p_upper.mul_vec_sym_upper(&x_pol, &mut px);
        let mut aty = vec![0.0; n];
        problem.a.mul_vec_t(&y_pol, &mut aty);
        let mut dual = 0.0f64;
        for j in 0..n {
            dual = dual.max((px[j] + problem.q[j] + aty[j]).abs());
        }
        if !prim.is_finite() || !dual.is_finite() {
            break;
        }
        if best.as_ref().map_or(true, |b| prim.max(dual) < b.2.max(b.3)) {
            best = Some((x_pol, y_pol.clone(), prim, dual));
        }
        if prim <= settings.eps_abs && dual <= settings.eps_dual_abs.max(settings.eps_abs) {
            break;
        }

        // repair: add rows the polished point violates, drop actives whose
        // multiplier sign contradicts their side
        let mut changed = false;
        let tol = settings.eps_abs.max(1e-12);
        for i in 0..m {
            if active.contains_key(&i) {
                continue;
            }
            if ax[i] < problem.l[i] - tol {
                active.insert(i, Side::Lower);
                changed = true;
            } else if ax[i] > problem.u[i] + tol {
                active.insert(i, Side::Upper);
                changed = true;
            }
        }
        let wrong: Vec<usize> = active
            .iter()
            .filter(|(i, side)| match side {
                Side::Lower => y_pol[**i] > tol,
                Side::Upper => y_pol[**i] < -tol,
                Side::Equality => false,
            })
            .map(|(i, _)| *i)
            .collect();
        for i in wrong {
            active.remove(&i);
            changed = true;
        }
        if !changed {
            break;
        }
    }

    let Some((x_pol, y_pol, prim, dual)) = best else {
        if settings.verbose {
            eprintln!("stageqp polish: no usable active-set solve");
        }
        return;
    };
    let before = solution.primal_residual.max(solution.dual_residual);
    if prim.max(dual) < before {
        solution.x = x_pol;
        solution.y = y_pol;
        solution.primal_residual = prim;
        solution.dual_residual = dual;
        solution.polished = true;
        solution.status = SolveStatus::Solved;
    } else if settings.verbose {
        eprintln!("stageqp polish: no improvement (prim {prim:.3e} dual {dual:.3e})");
    }
}

/// Solve the equality-restricted KKT system for one active set. Returns the
/// polished primal and the full-length dual (zeros off the active set).
fn solve_active_set(
    problem: &QpProblem,
    settings: &QpSettings,
    active: &BTreeMap<usize, Side>,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let ma = active.len();
    let row_of: BTreeMap<usize, usize> =
        active.keys().enumerate().map(|(k, &i)| (i, k)).collect();

    let delta = settings.polish_delta;
    let mut trips: Vec<(usize, usize, f64)> =
        Vec::with_capacity(problem.p_upper.nnz() + problem.a.nnz() + n + ma);
    for (r, c, v) in problem.p_upper.triplet_iter() {
        trips.push((r, c, v));
    }
    for j in 0..n {
        trips.push((j, j, delta));
    }
    for (i, j, v) in problem.a.triplet_iter() {
        if let Some(&k) = row_of.get(&i) {
            trips.push((j, n + k, v));
        }
    }
    for k in 0..ma {
        trips.push((n + k, n + k, -delta));
    }
    let kkt = CscMatrix::from_triplets(n + ma, n + ma, &trips);
    let mut factor = match LdltFactor::new(&kkt) {
        Ok(f) => f,
        Err(e) => {
            if settings.verbose {
                eprintln!("stageqp polish: factorization failed ({e}), {ma} active rows");
            }
            return None;
        }
    };

    let mut rhs = vec![0.0f64; n + ma];
    for j in 0..n {
        rhs[j] = -problem.q[j];
    }
    for (k, (&i, side)) in active.iter().enumerate() {
        rhs[n + k] = match side {
            Side::Lower | Side::Equality => problem.l[i],
            Side::Upper => problem.u[i],
        };
    }

    // iterative refinement against the unregularized system; growing
    // corrections signal a singular reduced system and end refinement
    let mut sol = rhs.clone();
    factor.solve_in_place(&mut sol);
    let mut prev_corr = f64::INFINITY;
    for _ in 0..3 {
        let mut resid = rhs.clone();
        subtract_unregularized_product(problem, &row_of, &sol, &mut resid);
        let mut corr = resid;
        factor.solve_in_place(&mut corr);
        let corr_norm = corr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !corr_norm.is_finite() || corr_norm >= prev_corr {
            break;
        }
        prev_corr = corr_norm;
        for v in 0..sol.len() {
            sol[v] += corr[v];
        }
    }

    let x_pol = sol[0..n].to_vec();
    let mut y_pol = vec![0.0f64; m];
    for (k, &i) in active.keys().enumerate() {
        y_pol[i] = sol[n + k];
    }
    Some((x_pol, y_pol))
}

/// `out -= K0 * sol` where `K0` is the reduced KKT without regularization.
fn subtract_unregularized_product(
    problem: &QpProblem,
    row_of: &BTreeMap<usize, usize>,
    sol: &[f64],
    out: &mut [f64],
) {
    let n = problem.num_vars();
    let x = &sol[0..n];
    let nu = &sol[n..];
    let mut px = vec![0.0; n];
    problem.p_upper.mul_vec_sym_upper(x, &mut px);
    for j in 0..n {
        out[j] -= px[j];
    }
    for (i, j, v) in problem.a.triplet_iter() {
        if let Some(&k) = row_of.get(&i) {
            out[j] -= v * nu[k];
            out[n + k] -= v * x[j];
        }
    }
}
