//! Sparse convex quadratic programming by operator splitting.
//!
//! Solves problems of the form
//!
//! ```text
//!     minimize    1/2 x' P x + q' x
//!     subject to  l <= A x <= u
//! ```
//!
//! with `P` symmetric positive semidefinite, using an ADMM scheme with Ruiz
//! equilibration, per-row dual step sizes, and an optional active-set polish
//! that sharpens the returned solution to near machine precision. Equality
//! rows are expressed as `l_i == u_i`.
//!
//! The solver is deterministic: identical inputs and settings produce
//! bit-identical outputs. A single sparse LDL^T factorization is reused
//! across iterations and warm starts make repeated solves of the same
//! problem cheap, which suits sequential-programming outer loops.

mod admm;
mod dump;
mod ldlt;
mod polish;
mod scaling;
mod sparse;

pub use dump::{dump_problem, parse_problem};
pub use sparse::{inf_norm, CscMatrix};

/// Grouping of decision variables by stage, for consumers that lay a
/// multistage problem out as contiguous per-stage blocks followed by global
/// auxiliaries. Purely descriptive metadata; carried through dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageLayout {
    pub num_stages: usize,
    pub states_per_stage: usize,
    pub inputs_per_stage: usize,
    pub slacks_per_stage: usize,
    /// Global auxiliary variables (e.g. epigraph bounds) at the tail.
    pub aux_vars: usize,
}

/// Problem data. `p_upper` stores the upper triangle of `P` (diagonal
/// included); `a` is the full `m x n` constraint matrix.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub p_upper: CscMatrix,
    pub q: Vec<f64>,
    pub a: CscMatrix,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub layout: Option<StageLayout>,
}

impl QpProblem {
    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.l.len()
    }

    fn validate(&self) -> Result<(), QpError> {
        let n = self.num_vars();
        let m = self.num_constraints();
        if self.p_upper.nrows != n || self.p_upper.ncols != n {
            return Err(QpError::InvalidProblem("P dimension mismatch".into()));
        }
        if self.a.nrows != m || self.a.ncols != n {
            return Err(QpError::InvalidProblem("A dimension mismatch".into()));
        }
        if self.u.len() != m {
            return Err(QpError::InvalidProblem("bound length mismatch".into()));
        }
        for (r, c, v) in self.p_upper.triplet_iter() {
            if r > c {
                return Err(QpError::InvalidProblem(
                    "P must be given as its upper triangle".into(),
                ));
            }
            if !v.is_finite() {
                return Err(QpError::InvalidProblem("non-finite entry in P".into()));
            }
        }
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(QpError::InvalidProblem("non-finite entry in q".into()));
        }
        if self.a.values.iter().any(|v| !v.is_finite()) {
            return Err(QpError::InvalidProblem("non-finite entry in A".into()));
        }
        for i in 0..m {
            if self.l[i].is_nan() || self.u[i].is_nan() {
                return Err(QpError::InvalidProblem("NaN bound".into()));
            }
            if self.l[i] > self.u[i] {
                return Err(QpError::InvalidProblem(format!(
                    "row {i}: lower bound {} exceeds upper bound {}",
                    self.l[i], self.u[i]
                )));
            }
        }
        Ok(())
    }
}

/// Solver tolerances and iteration controls.
#[derive(Debug, Clone)]
pub struct QpSettings {
    /// Absolute primal residual tolerance.
    pub eps_abs: f64,
    /// Absolute dual residual tolerance. Useful on its own when the cost
    /// vector carries penalty weights orders of magnitude above the
    /// constraint data.
    pub eps_dual_abs: f64,
    /// Relative residual tolerance applied to both residuals.
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Base dual step size; equality rows use `1e3` times this value.
    pub rho: f64,
    /// Primal regularization in the KKT system.
    pub sigma: f64,
    /// Over-relaxation parameter.
    pub alpha: f64,
    /// Ruiz equilibration sweeps (0 disables scaling).
    pub scaling_iters: usize,
    /// Run the active-set polish after convergence.
    pub polish: bool,
    /// Regularization used inside the polish KKT solve.
    pub polish_delta: f64,
    /// Residuals are checked every this many iterations (and always during
    /// the first five, so warm starts at the solution exit immediately).
    pub check_interval: usize,
    /// Tolerance of the primal infeasibility certificate test.
    pub eps_prim_inf: f64,
    /// Rescale rho (and refactor) when the residual ratio drifts.
    pub adaptive_rho: bool,
    pub adaptive_rho_interval: usize,
    /// Once residuals come within this factor of their targets, try the
    /// polish early; an exact active-set solve often finishes the job long
    /// before the first-order iteration would.
    pub early_polish_factor: f64,
    pub early_polish_interval: usize,
    /// Print residual progress to stderr.
    pub verbose: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            eps_abs: 1e-6,
            eps_dual_abs: 1e-6,
            eps_rel: 1e-6,
            max_iter: 20_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            scaling_iters: 10,
            polish: true,
            polish_delta: 1e-7,
            check_interval: 10,
            eps_prim_inf: 1e-9,
            adaptive_rho: true,
            adaptive_rho_interval: 100,
            early_polish_factor: 1e4,
            early_polish_interval: 250,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    MaxIter,
    PrimalInfeasible,
}

/// Primal/dual solution with termination diagnostics. Residuals are reported
/// in the original (unscaled) problem data.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub polished: bool,
    /// Dual step size in effect at termination; passing it back in as
    /// `rho` speeds up re-solves of related problems.
    pub final_rho: f64,
}

/// Primal/dual iterates carried between solves of structurally identical
/// problems. Ignored when dimensions do not match the problem.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl From<&QpSolution> for WarmStart {
    fn from(sol: &QpSolution) -> Self {
        WarmStart {
            x: sol.x.clone(),
            y: sol.y.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("KKT factorization failed: {0}")]
    Factorization(#[from] ldlt::FactorError),
}

/// Solve the QP. `warm` supplies starting primal/dual iterates; it is used
/// only when its dimensions match the problem.
pub fn solve_qp(
    problem: &QpProblem,
    settings: &QpSettings,
    warm: Option<&WarmStart>,
) -> Result<QpSolution, QpError> {
    problem.validate()?;
    admm::solve(problem, settings, warm)
}
