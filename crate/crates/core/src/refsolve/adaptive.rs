//! Step-size control shared by the embedded-pair integrators.

use crate::error::{Error, Result};
use crate::odecore::{IvpSystem, Trajectory};

/// Absolute and relative error tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Tolerances {
    pub fn new(atol: f64, rtol: f64) -> Result<Self> {
        if !(atol > 0.0) || !(rtol > 0.0) {
            return Err(Error::invalid(format!("tolerances must be positive, got atol={atol}, rtol={rtol}")));
        }
        Ok(Tolerances { atol, rtol })
    }

    /// `atol = rtol = tol`.
    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, tol)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub tol: Tolerances,
    /// Total attempted steps before giving up with a stiffness failure.
    pub max_steps: usize,
    pub h_init: Option<f64>,
}

impl AdaptiveOptions {
    pub fn new(tol: Tolerances) -> Self {
        AdaptiveOptions { tol, max_steps: 200_000, h_init: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

pub(crate) fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], tol: &Tolerances) -> f64 {
    let n = err.len();
    let s: f64 = (0..n)
        .map(|i| {
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (s / n as f64).sqrt()
}

/// Starting step from the usual two-evaluation heuristic.
fn initial_step(system: &IvpSystem, y0: &[f64], t0: f64, span: f64, p: f64, tol: &Tolerances) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut f0 = vec![0.0; n];
    system.rhs_into(y0, t0, &mut f0);
    let d0 = rms(y0);
    let d1 = rms(&f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(&f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    system.rhs_into(&y1, t0 + h0, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    if d1.max(d2) <= 1e-15 {
        return span;
    }
    let h1 = (0.01 / d1.max(d2)).powf(1.0 / (p + 1.0));
    (100.0 * h0).min(h1).min(span)
}

/// One trial step: writes the new state and the local error estimate.
pub(crate) trait EmbeddedStepper {
    /// Order used in the controller exponents.
    const ORDER: f64;
    fn attempt(&mut self, y: &[f64], t: f64, h: f64, y_new: &mut [f64], err: &mut [f64]) -> Result<()>;
}

/// Integrates over `grid` (whose first entry is the initial time), clamping
/// steps so each grid time is hit exactly.
pub(crate) fn drive<S: EmbeddedStepper>(
    system: &IvpSystem,
    y0: &[f64],
    grid: &[f64],
    opts: &AdaptiveOptions,
    stepper: &mut S,
) -> Result<(Trajectory, SolverStats)> {
    system.check_dim(y0)?;
    if grid.is_empty() {
        return Err(Error::invalid("empty output grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("output grid must be strictly increasing"));
    }
    let n = y0.len();
    let t0 = grid[0];
    let tf = *grid.last().unwrap();
    let mut traj = Trajectory::start(t0, y0.to_vec());
    let mut stats = SolverStats::default();
    if grid.len() == 1 {
        return Ok((traj, stats));
    }
    let p = S::ORDER;
    let mut h = opts.h_init.unwrap_or_else(|| initial_step(system, y0, t0, tf - t0, p, &opts.tol));
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut t = t0;
    let mut err_prev = 1e-4f64;
    let mut attempts = 0usize;
    for &target in &grid[1..] {
        while t < target {
            attempts += 1;
            if attempts > opts.max_steps {
                return Err(Error::StiffnessFailure { t });
            }
            let remaining = target - t;
            let clamped = h >= remaining * (1.0 - 1e-12);
            let h_try = if clamped { remaining } else { h };
            if h_try < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StiffnessFailure { t });
            }
            let outcome = stepper.attempt(&y, t, h_try, &mut y_new, &mut err);
            let en = match outcome {
                Ok(()) => error_norm(&err, &y, &y_new, &opts.tol),
                Err(Error::NewtonFailure { .. }) | Err(Error::LinearSolverFailure(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if en <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                stats.accepted += 1;
                t = if clamped { target } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                let en = en.max(1e-10);
                let fac = (SAFETY * en.powf(-0.7 / p) * err_prev.powf(0.4 / p)).clamp(MIN_FACTOR, MAX_FACTOR);
                err_prev = en;
                // a clamped step says nothing about the natural step size
                h = if clamped { h.max(h_try * fac) } else { h_try * fac };
            } else {
                stats.rejected += 1;
                let fac = if en.is_finite() {
                    (SAFETY * en.powf(-1.0 / p)).clamp(MIN_FACTOR, 1.0)
                } else {
                    0.25
                };
                h = h_try * fac;
            }
        }
        traj.push(target, y.clone());
    }
    Ok((traj, stats))
}
