//! Ruiz equilibration of the problem data.

use crate::sparse::{inf_norm, CscMatrix};
use crate::QpProblem;

/// Diagonal scalings mapping the original problem to the scaled one:
/// `P_s = c D P D`, `q_s = c D q`, `A_s = E A D`, `l_s = E l`, `u_s = E u`.
/// A solution of the scaled problem maps back as `x = D x_s`,
/// `y = E y_s / c`.
pub struct Scaling {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub c: f64,
}

pub struct ScaledProblem {
    pub p_upper: CscMatrix,
    pub q: Vec<f64>,
    pub a: CscMatrix,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub scaling: Scaling,
}

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

pub fn scale_problem(problem: &QpProblem, iters: usize) -> ScaledProblem {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let mut p = problem.p_upper.clone();
    let mut q = problem.q.clone();
    let mut a = problem.a.clone();
    let mut l = problem.l.clone();
    let mut u = problem.u.clone();
    let mut d = vec![1.0f64; n];
    let mut e = vec![1.0f64; m];
    let mut c = 1.0f64;

    let mut p_cols = vec![0.0f64; n];
    let mut p_rows_full = vec![0.0f64; n];
    let mut a_cols = vec![0.0f64; n];
    let mut a_rows = vec![0.0f64; m];

    for _ in 0..iters {
        // column norms of [P; A] (P taken as full symmetric) and row norms of A
        p.col_inf_norms(&mut p_cols);
        p_rows_full.fill(0.0);
        for (r, _, v) in p.triplet_iter() {
            p_rows_full[r] = p_rows_full[r].max(v.abs());
        }
        for j in 0..n {
            p_cols[j] = p_cols[j].max(p_rows_full[j]);
        }
        a.col_inf_norms(&mut a_cols);
        a.row_inf_norms(&mut a_rows);

        let mut dj = vec![1.0f64; n];
        for j in 0..n {
            let norm = p_cols[j].max(a_cols[j]);
            dj[j] = if norm > 0.0 {
                (1.0 / norm.sqrt()).clamp(MIN_SCALE, MAX_SCALE)
            } else {
                1.0
            };
        }
        let mut ei = vec![1.0f64; m];
        for i in 0..m {
            ei[i] = if a_rows[i] > 0.0 {
                (1.0 / a_rows[i].sqrt()).clamp(MIN_SCALE, MAX_SCALE)
            } else {
                1.0
            };
        }

        p.scale(&dj, &dj);
        a.scale(&ei, &dj);
        for j in 0..n {
            q[j] *= dj[j];
            d[j] *= dj[j];
        }
        for i in 0..m {
            if l[i].is_finite() {
                l[i] *= ei[i];
            }
            if u[i].is_finite() {
                u[i] *= ei[i];
            }
            e[i] *= ei[i];
        }

        // cost normalization
        p.col_inf_norms(&mut p_cols);
        let mean_p = if n > 0 {
            p_cols.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        let norm_q = inf_norm(&q);
        let denom = mean_p.max(norm_q);
        if denom > 0.0 {
            let gamma = (1.0 / denom).clamp(MIN_SCALE, MAX_SCALE);
            if gamma != 1.0 {
                for v in p.values.iter_mut() {
                    *v *= gamma;
                }
                for v in q.iter_mut() {
                    *v *= gamma;
                }
                c *= gamma;
            }
        }
    }

    ScaledProblem {
        p_upper: p,
        q,
        a,
        l,
        u,
        scaling: Scaling { d, e, c },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_disabled() {
        let problem = QpProblem {
            p_upper: CscMatrix::from_triplets(2, 2, &[(0, 0, 100.0), (1, 1, 0.01)]),
            q: vec![1.0, -1.0],
            a: CscMatrix::identity(2),
            l: vec![0.0, 0.0],
            u: vec![1.0, 1.0],
            layout: None,
        };
        let s = scale_problem(&problem, 0);
        assert_eq!(s.scaling.d, vec![1.0, 1.0]);
        assert_eq!(s.scaling.c, 1.0);
        assert_eq!(s.p_upper.values, problem.p_upper.values);
    }

    #[test]
    fn equilibrates_badly_scaled_problem() {
        let problem = QpProblem {
            p_upper: CscMatrix::from_triplets(2, 2, &[(0, 0, 1e6), (1, 1, 1e-6)]),
            q: vec![1.0, 1.0],
            a: CscMatrix::from_triplets(2, 2, &[(0, 0, 1e3), (1, 1, 1e-3)]),
            l: vec![-1.0, -1.0],
            u: vec![1.0, 1.0],
            layout: None,
        };
        let s = scale_problem(&problem, 10);
        let mut cols = vec![0.0; 2];
        s.a.col_inf_norms(&mut cols);
        let ratio = cols[0].max(cols[1]) / cols[0].min(cols[1]);
        assert!(ratio < 10.0, "columns still unbalanced: {cols:?}");
    }
}
