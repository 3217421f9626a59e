//! Implicit Runge–Kutta stages `K` and their ξ-derivatives.

use crate::error::{Error, Result};
use crate::odecore::IvpSystem;
use crate::refsolve::{newton_root, solve_linear, Matrix, SDIRK_GAMMA};

pub const STAGE_TOL: f64 = 1e-12;
pub const STAGE_MAX_ITER: usize = 50;

/// Solves `K = f(base + a·K, t)` by Newton from `guess`.
pub(crate) fn solve_stage(system: &IvpSystem, base: &[f64], a: f64, t: f64, guess: &[f64]) -> Result<Vec<f64>> {
    let n = base.len();
    let mut arg = vec![0.0; n];
    let mut arg_j = vec![0.0; n];
    newton_root(
        |k, out| {
            for i in 0..n {
                arg[i] = base[i] + a * k[i];
            }
            system.rhs_into(&arg, t, out);
            for i in 0..n {
                out[i] = k[i] - out[i];
            }
        },
        |k, jm: &mut Matrix| {
            for i in 0..n {
                arg_j[i] = base[i] + a * k[i];
            }
            system.jac_y_into(&arg_j, t, jm);
            for v in jm.as_mut_slice() {
                *v *= -a;
            }
            for i in 0..n {
                jm[(i, i)] += 1.0;
            }
        },
        guess,
        STAGE_TOL,
        STAGE_MAX_ITER,
    )
    .map(|r| r.x)
    .map_err(|e| Error::StageSolverFailure(format!("stage at t = {t}: {e}")))
}

/// `K = f(y0 + ξK, t0 + ξ)`, started from `K = f(y0, t0)`.
pub fn solve_stage_k(system: &IvpSystem, y0: &[f64], t0: f64, xi: f64) -> Result<Vec<f64>> {
    system.check_dim(y0)?;
    let guess = system.eval_rhs(y0, t0)?;
    if xi == 0.0 {
        return Ok(guess);
    }
    solve_stage(system, y0, xi, t0 + xi, &guess)
}

/// Solves `(I − c·J) x = rhs` with `J = ∂f/∂y` at `(g, t)`; returns `(x, J)`.
fn implicit_derivative(
    system: &IvpSystem,
    g: &[f64],
    t: f64,
    c: f64,
    rhs_of: impl FnOnce(&Matrix, &[f64]) -> Vec<f64>,
) -> Result<Vec<f64>> {
    let n = g.len();
    let j = system.eval_jac_y(g, t)?;
    let ft = system.eval_jac_t(g, t)?;
    let rhs = rhs_of(&j, &ft);
    let mut a = Matrix::identity(n);
    for r in 0..n {
        for col in 0..n {
            a[(r, col)] -= c * j[(r, col)];
        }
    }
    solve_linear(&a, &rhs)
}

/// `∂K/∂ξ` from `(I − ξ J) K' = J K + f_t` at `G = y0 + ξK`, `t = t0 + ξ`.
pub fn solve_dk_dxi(system: &IvpSystem, y0: &[f64], t0: f64, xi: f64, k: &[f64]) -> Result<Vec<f64>> {
    system.check_dim(y0)?;
    let g: Vec<f64> = y0.iter().zip(k).map(|(y, k)| y + xi * k).collect();
    implicit_derivative(system, &g, t0 + xi, xi, |j, ft| {
        let jk = j.mul_vec(k);
        jk.iter().zip(ft).map(|(a, b)| a + b).collect()
    })
}

/// Both DIRK stages.
pub fn solve_dirk_stages(system: &IvpSystem, y0: &[f64], t0: f64, xi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    system.check_dim(y0)?;
    let g = SDIRK_GAMMA;
    let f0 = system.eval_rhs(y0, t0)?;
    let k1 = if xi == 0.0 { f0 } else { solve_stage(system, y0, g * xi, t0 + g * xi, &f0)? };
    let base: Vec<f64> = y0.iter().zip(&k1).map(|(y, k)| y + (1.0 - g) * xi * k).collect();
    let k2 = if xi == 0.0 { system.eval_rhs(&base, t0)? } else { solve_stage(system, &base, g * xi, t0 + xi, &k1)? };
    Ok((k1, k2))
}

/// ξ-derivatives of the DIRK stages:
/// `(I − γξJ₁) K₁' = γ (J₁K₁ + f_t₁)` and
/// `(I − γξJ₂) K₂' = J₂((1−γ)(K₁ + ξK₁') + γK₂) + f_t₂`.
pub fn solve_dirk_stage_derivatives(
    system: &IvpSystem,
    y0: &[f64],
    t0: f64,
    xi: f64,
    k1: &[f64],
    k2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = SDIRK_GAMMA;
    let n = y0.len();
    let g1: Vec<f64> = (0..n).map(|i| y0[i] + g * xi * k1[i]).collect();
    let dk1 = implicit_derivative(system, &g1, t0 + g * xi, g * xi, |j, ft| {
        let jk = j.mul_vec(k1);
        (0..n).map(|i| g * (jk[i] + ft[i])).collect()
    })?;
    let g2: Vec<f64> = (0..n).map(|i| y0[i] + (1.0 - g) * xi * k1[i] + g * xi * k2[i]).collect();
    let dk2 = implicit_derivative(system, &g2, t0 + xi, g * xi, |j, ft| {
        let v: Vec<f64> = (0..n).map(|i| (1.0 - g) * (k1[i] + xi * dk1[i]) + g * k2[i]).collect();
        let jv = j.mul_vec(&v);
        (0..n).map(|i| jv[i] + ft[i]).collect()
    })?;
    Ok((dk1, dk2))
}
