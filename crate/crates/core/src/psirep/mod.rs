//! Representations of the flow map ψ and the training residual.

mod assemble;
mod model;
mod stages;

pub use assemble::{
    assemble_jacobian, assemble_residual, flow_residual, Assembler, CollocationSet, FlowApprox,
};
pub use model::{eval_F, eval_psi, Baseline, NetConfig, PsiKind, PsiModel};
pub use stages::{
    solve_dirk_stage_derivatives, solve_dirk_stages, solve_dk_dxi, solve_stage_k, STAGE_MAX_ITER, STAGE_TOL,
};
