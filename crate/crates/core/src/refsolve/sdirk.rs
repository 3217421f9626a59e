use super::adaptive::{drive, AdaptiveOptions, EmbeddedStepper, SolverStats, Tolerances};
use super::linear::Matrix;
use super::newton::newton_root;
use crate::error::{Error, Result};
use crate::odecore::{IvpSystem, Trajectory};

/// `γ = 1 − √2/2`, the L-stable two-stage SDIRK coefficient.
pub const SDIRK_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

const STAGE_TOL: f64 = 1e-12;
const STAGE_ITERS: usize = 50;

/// Solves `K = f(base + a·h·K, tc)` by Newton from `guess`.
fn stage(system: &IvpSystem, base: &[f64], ah: f64, tc: f64, guess: &[f64]) -> Result<Vec<f64>> {
    let n = base.len();
    let mut arg = vec![0.0; n];
    let mut arg_j = vec![0.0; n];
    let r = newton_root(
        |k, out| {
            for i in 0..n {
                arg[i] = base[i] + ah * k[i];
            }
            system.rhs_into(&arg, tc, out);
            for i in 0..n {
                out[i] = k[i] - out[i];
            }
        },
        |k, jm: &mut Matrix| {
            for i in 0..n {
                arg_j[i] = base[i] + ah * k[i];
            }
            system.jac_y_into(&arg_j, tc, jm);
            for v in jm.as_mut_slice() {
                *v *= -ah;
            }
            for i in 0..n {
                jm[(i, i)] += 1.0;
            }
        },
        guess,
        STAGE_TOL,
        STAGE_ITERS,
    )?;
    Ok(r.x)
}

/// One SDIRK2 step. Returns `(y_{k+1}, K1, K2)`.
fn sdirk2_stages(system: &IvpSystem, y: &[f64], t: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let g = SDIRK_GAMMA;
    let n = y.len();
    let f0 = system.eval_rhs(y, t)?;
    let k1 = stage(system, y, g * h, t + g * h, &f0)?;
    let base2: Vec<f64> = (0..n).map(|i| y[i] + h * (1.0 - g) * k1[i]).collect();
    let k2 = stage(system, &base2, g * h, t + h, &k1)?;
    let y1 = (0..n).map(|i| base2[i] + h * g * k2[i]).collect();
    Ok((y1, k1, k2))
}

/// A single SDIRK2 step of size `h`.
pub fn sdirk2_step(system: &IvpSystem, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    system.check_dim(y)?;
    sdirk2_stages(system, y, t, h)
        .map(|s| s.0)
        .map_err(|e| Error::StageSolverFailure(format!("t = {t}, h = {h}: {e}")))
}

struct Sdirk<'a> {
    system: &'a IvpSystem,
}

impl EmbeddedStepper for Sdirk<'_> {
    const ORDER: f64 = 2.0;

    fn attempt(&mut self, y: &[f64], t: f64, h: f64, y_new: &mut [f64], err: &mut [f64]) -> Result<()> {
        let (y1, k1, k2) = sdirk2_stages(self.system, y, t, h)?;
        y_new.copy_from_slice(&y1);
        // difference to the first-order solution y + h·K2
        for i in 0..y.len() {
            err[i] = h * (1.0 - SDIRK_GAMMA) * (k1[i] - k2[i]);
        }
        Ok(())
    }
}

/// Adaptive SDIRK2 with Newton stage solves, reporting the state at every
/// time in `grid`. Suitable for stiff problems.
pub fn sdirk2_adaptive(system: &IvpSystem, y0: &[f64], grid: &[f64], tol: Tolerances) -> Result<Trajectory> {
    let mut opts = AdaptiveOptions::new(tol);
    opts.max_steps = 2_000_000;
    Ok(sdirk2_with(system, y0, grid, &opts)?.0)
}

pub fn sdirk2_with(
    system: &IvpSystem,
    y0: &[f64],
    grid: &[f64],
    opts: &AdaptiveOptions,
) -> Result<(Trajectory, SolverStats)> {
    drive(system, y0, grid, opts, &mut Sdirk { system }).map_err(|e| match e {
        Error::StiffnessFailure { t } => {
            Error::StageSolverFailure(format!("step size collapsed at t = {t} (stage solves keep failing)"))
        }
        other => other,
    })
}
