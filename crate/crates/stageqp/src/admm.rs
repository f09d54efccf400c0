//! The operator-splitting iteration.

use crate::ldlt::LdltFactor;
use crate::polish;
use crate::scaling::{scale_problem, ScaledProblem};
use crate::sparse::{inf_norm, CscMatrix};
use crate::{QpError, QpProblem, QpSettings, QpSolution, SolveStatus, WarmStart};

/// Equality rows (`l == u`) get a stiffer dual step size.
const RHO_EQ_FACTOR: f64 = 1e3;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;

struct Iterates {
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
}

/// Unscaled residual information at a checkpoint.
struct Residuals {
    prim: f64,
    dual: f64,
    eps_prim: f64,
    eps_dual: f64,
    /// Normalized residuals used for rho adaptation.
    prim_rel: f64,
    dual_rel: f64,
    dual_argmax: usize,
}

pub fn solve(
    problem: &QpProblem,
    settings: &QpSettings,
    warm: Option<&WarmStart>,
) -> Result<QpSolution, QpError> {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let sp = scale_problem(problem, settings.scaling_iters);

    let mut rho_base = settings.rho;
    let mut rho = vec![0.0f64; m];
    set_rho(&mut rho, &sp, rho_base);
    let mut kkt = factor_kkt(&sp, &rho, settings.sigma)?;

    // iterates live in the scaled space
    let mut it = Iterates {
        x: vec![0.0; n],
        z: vec![0.0; m],
        y: vec![0.0; m],
    };
    if let Some(w) = warm {
        if w.x.len() == n && w.y.len() == m {
            for j in 0..n {
                it.x[j] = w.x[j] / sp.scaling.d[j];
            }
            for i in 0..m {
                it.y[i] = w.y[i] * sp.scaling.c / sp.scaling.e[i];
            }
        }
    }
    let mut ax = vec![0.0; m];
    sp.a.mul_vec(&it.x, &mut ax);
    for i in 0..m {
        it.z[i] = ax[i].clamp(sp.l[i], sp.u[i]);
    }

    let mut rhs = vec![0.0f64; n + m];
    let mut work_n = vec![0.0f64; n];
    let mut work_m = vec![0.0f64; m];
    let mut y_prev_check = unscale_y(&it.y, &sp);
    let mut status = SolveStatus::MaxIter;
    let mut iterations = settings.max_iter;
    let mut last_res: Option<Residuals> = None;
    let mut next_polish_attempt = settings.early_polish_interval;
    let mut polish_backoff = settings.early_polish_interval;

    for k in 1..=settings.max_iter {
        // x-update: KKT solve
        for j in 0..n {
            rhs[j] = settings.sigma * it.x[j] - sp.q[j];
        }
        for i in 0..m {
            rhs[n + i] = it.z[i] - it.y[i] / rho[i];
        }
        kkt.solve_in_place(&mut rhs);
        // rhs[0..n] = x_tilde, rhs[n..] = nu
        for j in 0..n {
            let xt = rhs[j];
            it.x[j] = settings.alpha * xt + (1.0 - settings.alpha) * it.x[j];
        }
        for i in 0..m {
            let z_tilde = it.z[i] + (rhs[n + i] - it.y[i]) / rho[i];
            let w = settings.alpha * z_tilde + (1.0 - settings.alpha) * it.z[i] + it.y[i] / rho[i];
            let z_new = w.clamp(sp.l[i], sp.u[i]);
            it.y[i] = rho[i] * (w - z_new);
            it.z[i] = z_new;
        }

        let check = k <= 5 || k % settings.check_interval == 0 || k == settings.max_iter;
        if !check {
            continue;
        }
        let res = compute_residuals(problem, &sp, &it, settings, &mut work_n, &mut work_m);
        if settings.verbose && k % (settings.check_interval * 50) == 0 {
            eprintln!(
                "stageqp iter {k}: prim {:.3e} (eps {:.3e})  dual {:.3e} (eps {:.3e}) dual argmax {}",
                res.prim, res.eps_prim, res.dual, res.eps_dual, res.dual_argmax
            );
        }
        if res.prim <= res.eps_prim && res.dual <= res.eps_dual {
            status = SolveStatus::Solved;
            iterations = k;
            last_res = Some(res);
            break;
        }

        // near the tolerance, an exact solve on the detected active set
        // often finishes the job immediately; failed attempts back off
        // exponentially since they cost a factorization each
        if settings.polish
            && k >= next_polish_attempt
            && res.prim <= res.eps_prim * settings.early_polish_factor
            && res.dual <= res.eps_dual * settings.early_polish_factor
        {
            next_polish_attempt = k + polish_backoff;
            polish_backoff *= 2;
            let x_un: Vec<f64> = (0..n).map(|j| it.x[j] * sp.scaling.d[j]).collect();
            let y_un = unscale_y(&it.y, &sp);
            let mut candidate = QpSolution {
                x: x_un,
                y: y_un,
                status: SolveStatus::Solved,
                iterations: k,
                primal_residual: res.prim,
                dual_residual: res.dual,
                polished: false,
                final_rho: rho_base,
            };
            // accept only sharply polished points (absolute tolerance);
            // sloppier ones would feed solution noise back to warm-started
            // re-solves of nearby problems
            let dual_cap = 10.0 * settings.eps_abs * (1.0 + inf_norm(&problem.q));
            polish::polish(problem, settings, &mut candidate);
            if candidate.polished
                && candidate.primal_residual <= settings.eps_abs
                && candidate.dual_residual <= dual_cap.min(res.eps_dual)
            {
                if settings.verbose {
                    eprintln!(
                        "stageqp iter {k}: early polish accepted (prim {:.3e} dual {:.3e})",
                        candidate.primal_residual, candidate.dual_residual
                    );
                }
                return Ok(candidate);
            } else if settings.verbose {
                eprintln!(
                    "stageqp iter {k}: early polish rejected (polished {} prim {:.3e} dual {:.3e})",
                    candidate.polished, candidate.primal_residual, candidate.dual_residual
                );
            }
        }

        // primal infeasibility certificate on the unscaled dual increment
        let y_un = unscale_y(&it.y, &sp);
        let dy: Vec<f64> = y_un
            .iter()
            .zip(y_prev_check.iter())
            .map(|(a, b)| a - b)
            .collect();
        if is_primal_infeasible(problem, &dy, settings.eps_prim_inf, &mut work_n) {
            status = SolveStatus::PrimalInfeasible;
            iterations = k;
            last_res = Some(res);
            break;
        }
        y_prev_check = y_un;

        if settings.adaptive_rho && k % settings.adaptive_rho_interval == 0 {
            let ratio = ((res.prim_rel + 1e-30) / (res.dual_rel + 1e-30)).sqrt();
            if ratio > 5.0 || ratio < 0.2 {
                rho_base = (rho_base * ratio).clamp(RHO_MIN, RHO_MAX);
                set_rho(&mut rho, &sp, rho_base);
                kkt = factor_kkt(&sp, &rho, settings.sigma)?;
            }
        }
        last_res = Some(res);
    }

    // unscale
    let x_un: Vec<f64> = (0..n).map(|j| it.x[j] * sp.scaling.d[j]).collect();
    let y_un = unscale_y(&it.y, &sp);
    let res = last_res.unwrap_or_else(|| {
        compute_residuals(problem, &sp, &it, settings, &mut work_n, &mut work_m)
    });

    let mut solution = QpSolution {
        x: x_un,
        y: y_un,
        status,
        iterations,
        primal_residual: res.prim,
        dual_residual: res.dual,
        polished: false,
        final_rho: rho_base,
    };

    if settings.polish && solution.status == SolveStatus::Solved {
        polish::polish(problem, settings, &mut solution);
    }
    Ok(solution)
}

fn set_rho(rho: &mut [f64], sp: &ScaledProblem, base: f64) {
    for i in 0..rho.len() {
        let eq = sp.l[i] == sp.u[i];
        rho[i] = if eq { base * RHO_EQ_FACTOR } else { base };
    }
}

fn factor_kkt(sp: &ScaledProblem, rho: &[f64], sigma: f64) -> Result<LdltFactor, QpError> {
    let n = sp.q.len();
    let m = rho.len();
    let mut trips: Vec<(usize, usize, f64)> =
        Vec::with_capacity(sp.p_upper.nnz() + sp.a.nnz() + n + m);
    for (r, c, v) in sp.p_upper.triplet_iter() {
        trips.push((r, c, v));
    }
    for j in 0..n {
        trips.push((j, j, sigma));
    }
    for (i, j, v) in sp.a.triplet_iter() {
        trips.push((j, n + i, v));
    }
    for i in 0..m {
        trips.push((n + i, n + i, -1.0 / rho[i]));
    }
    let upper = CscMatrix::from_triplets(n + m, n + m, &trips);
    Ok(LdltFactor::new(&upper)?)
}

fn unscale_y(y_scaled: &[f64], sp: &ScaledProblem) -> Vec<f64> {
    y_scaled
        .iter()
        .enumerate()
        .map(|(i, &v)| v * sp.scaling.e[i] / sp.scaling.c)
        .collect()
}

fn compute_residuals(
    problem: &QpProblem,
    sp: &ScaledProblem,
    it: &Iterates,
    settings: &QpSettings,
    work_n: &mut [f64],
    work_m: &mut [f64],
) -> Residuals {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let x_un: Vec<f64> = (0..n).map(|j| it.x[j] * sp.scaling.d[j]).collect();
    let z_un: Vec<f64> = (0..m).map(|i| it.z[i] / sp.scaling.e[i]).collect();
    let y_un = unscale_y(&it.y, sp);

    problem.a.mul_vec(&x_un, work_m);
    let norm_ax = inf_norm(work_m);
    let mut prim = 0.0f64;
    for i in 0..m {
        prim = prim.max((work_m[i] - z_un[i]).abs());
    }
    let norm_z = inf_norm(&z_un);

    problem.p_upper.mul_vec_sym_upper(&x_un, work_n);
    let norm_px = inf_norm(work_n);
    let mut aty = vec![0.0; n];
    problem.a.mul_vec_t(&y_un, &mut aty);
    let norm_aty = inf_norm(&aty);
    let mut dual = 0.0f64;
    let mut dual_argmax = 0usize;
    for j in 0..n {
        let v = (work_n[j] + problem.q[j] + aty[j]).abs();
        if v > dual {
            dual = v;
            dual_argmax = j;
        }
    }

    let scale_p = norm_ax.max(norm_z).max(1e-30);
    let scale_d = norm_px.max(norm_aty).max(inf_norm(&problem.q)).max(1e-30);
    Residuals {
        prim,
        dual,
        eps_prim: settings.eps_abs + settings.eps_rel * scale_p,
        eps_dual: settings.eps_dual_abs + settings.eps_rel * scale_d,
        prim_rel: prim / scale_p,
        dual_rel: dual / scale_d,
        dual_argmax,
    }
}

/// OSQP-style certificate: a dual direction `dy` with `A' dy ~ 0` whose
/// support function over the constraint set is negative proves that no
/// feasible point exists.
fn is_primal_infeasible(
    problem: &QpProblem,
    dy: &[f64],
    eps: f64,
    work_n: &mut [f64],
) -> bool {
    let norm_dy = inf_norm(dy);
    if norm_dy <= eps {
        return false;
    }
    let m = problem.num_constraints();
    let mut support = 0.0f64;
    for i in 0..m {
        let d = dy[i];
        if d > 0.0 {
            if problem.u[i].is_infinite() {
                if d > eps * norm_dy {
                    return false;
                }
            } else {
                support += problem.u[i] * d;
            }
        } else if d < 0.0 {
            if problem.l[i].is_infinite() {
                if -d > eps * norm_dy {
                    return false;
                }
            } else {
                support += problem.l[i] * d;
            }
        }
    }
    problem.a.mul_vec_t(dy, work_n);
    inf_norm(work_n) <= eps * norm_dy && support < -eps * norm_dy
}
