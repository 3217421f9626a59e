//! ODE problem definitions, training domains, trajectories and error metrics.

mod catalog_systems;
mod domain;
mod system;
mod trajectory;

pub use domain::{TrainingDomain, XiSign};
pub use system::{fd_jac_t, fd_jac_y, Dynamics, IvpSystem, SystemSpec};
pub use trajectory::{error_metrics, uniform_grid, ErrorReport, Trajectory, TIME_TOLERANCE};

use crate::error::Result;

/// `f(y, t)` for `system`.
pub fn eval_rhs(system: &IvpSystem, y: &[f64], t: f64) -> Result<Vec<f64>> {
    system.eval_rhs(y, t)
}
