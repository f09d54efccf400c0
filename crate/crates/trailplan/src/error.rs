//! Error types shared across the crate.

use thiserror::Error;

/// Failure of projecting a Cartesian point onto the reference path.
#[derive(Debug, Clone, Error)]
pub enum ProjectionError {
    #[error("point ({x:.3}, {y:.3}) projects beyond the path ends")]
    BeyondEnds { x: f64, y: f64 },
    #[error("point ({x:.3}, {y:.3}) lies outside the unique-projection tube")]
    OutsideTube { x: f64, y: f64 },
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("arc length {s} outside path domain [0, {total_length}]")]
    PathDomain { s: f64, total_length: f64 },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("vehicle model domain violated: {0}")]
    ModelDomain(String),
    #[error("infeasible corridor at s = {s:.2}: free interval [{lo:.3}, {hi:.3}] is empty")]
    InfeasibleCorridor { s: f64, lo: f64, hi: f64 },
    #[error("configuration: {0}")]
    Configuration(String),
    #[error(transparent)]
    Qp(#[from] stageqp::QpError),
    #[error("QP subproblem unusable: status {status:?}, primal residual {primal:.3e}")]
    QpAccuracy {
        status: stageqp::SolveStatus,
        primal: f64,
    },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}
