//! Classical reference integrators and the small dense solvers they share.

mod adaptive;
mod dopri;
mod linear;
mod newton;
mod rk4;
mod sdirk;

pub use adaptive::{AdaptiveOptions, SolverStats, Tolerances};
pub use dopri::{dp54_adaptive, dp54_flow, dp54_with};
pub use linear::{solve_linear, solve_linear_diagnosed, LinearSolution, Lu, Matrix, ILL_CONDITIONED};
pub use newton::{newton_root, NewtonResult};
pub use rk4::{rk4_fixed, rk4_step};
pub use sdirk::{sdirk2_adaptive, sdirk2_step, sdirk2_with, SDIRK_GAMMA};
