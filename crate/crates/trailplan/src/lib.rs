//! Path planning for tractor-trailer vehicles on road corridors.
//!
//! The planner works in road-aligned coordinates along a piecewise line/arc
//! reference path. A spatial kinematic model of the articulated vehicle is
//! discretized and repeatedly linearized; each outer iteration solves a
//! structured convex QP over lateral deviations, joint angle, and tractor
//! curvature, subject to corridor and actuation constraints. Swept-path
//! metrics summarize how far the vehicle bodies stray from the road center.

pub mod corridor;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod objectives;
pub mod output;
pub mod planner;
pub mod plot;
pub mod scenario;
pub mod vehicle;

pub use error::{PlanError, ProjectionError};
