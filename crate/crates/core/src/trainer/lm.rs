//! Levenberg–Marquardt least squares on top of a thin SVD of the Jacobian.
//!
//! One SVD per accepted iterate serves every damping trial: for `J = U S Vᵀ`
//! the solution of the stacked problem `[J; √μ I] δ ≈ [−r; 0]` is
//! `δ = −V diag(s/(s² + μ)) Uᵀ r`. Each iterate first tries the undamped
//! minimum-norm step (singular values below `ε·s_max` dropped), then falls
//! back to damped steps with `μ = λ·s_max²`.

use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{svd, svd_scratch, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::randnet::rng::{SeededRng, Stream};
use crate::refsolve::Matrix;

const LAMBDA_ACCEPT: f64 = 0.3;
const LAMBDA_REJECT: f64 = 2.0;
const LAMBDA_MAX: f64 = 1e16;
const STALL_REDUCTION: f64 = 1e-4;

/// Restart policy for [`nllsq_perturb`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    /// Consecutive low-progress iterations that count as a stall.
    pub trigger: usize,
    /// Half-width of the uniform noise; `None` means `0.5·Rm` of the model
    /// (or 0.5 for bare least-squares problems).
    pub magnitude: Option<f64>,
    pub max_restarts: usize,
    /// Stalls at or below this loss `½‖r‖²` do not trigger a restart.
    pub target_loss: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig { trigger: 3, magnitude: None, max_restarts: 4, target_loss: 0.0 }
    }
}

/// Solver and sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Number of collocation points `Q`.
    #[serde(rename = "Q", alias = "q")]
    pub q: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub gtol: f64,
    pub xtol: f64,
    /// Stop once `‖r‖₂` falls to this value.
    pub residual_tol: f64,
    pub damping_init: f64,
    pub perturb: PerturbConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            q: 1000,
            seed: 0,
            max_iterations: 100,
            gtol: 1e-10,
            xtol: 1e-10,
            residual_tol: 0.0,
            damping_init: 1e-3,
            perturb: PerturbConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    Step,
    Residual,
    MaxIterations,
    /// No damping value produced a decrease.
    NoProgress,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `‖r‖₂` at the returned `β`.
    pub residual_norm: f64,
    /// `‖r‖∞` at the returned `β`.
    pub residual_max: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// Best `‖r‖₂` of each run, initial run first.
    pub run_bests: Vec<f64>,
    pub termination: Termination,
    pub wall_time_seconds: f64,
}

struct Run {
    beta: Vec<f64>,
    r: Vec<f64>,
    loss: f64,
    iterations: usize,
    termination: Termination,
}

fn loss_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct Factored {
    v: Mat<f64>,
    s: Vec<f64>,
    /// `Uᵀ r`
    g: Vec<f64>,
    /// `‖Jᵀ r‖∞`
    grad_inf: f64,
}

fn factor(jac: &Matrix, r: &[f64]) -> Result<Factored> {
    let (m, n) = (jac.rows(), jac.cols());
    let a = Mat::from_fn(m, n, |i, j| jac[(i, j)]);
    let k = m.min(n);
    let mut u = Mat::zeros(m, k);
    let mut v = Mat::zeros(n, k);
    let mut sd = Diag::zeros(k);
    // sequential so results do not depend on the surrounding thread pool
    let par = Par::Seq;
    let thin = ComputeSvdVectors::Thin;
    let mut buf = MemBuffer::new(svd_scratch::<f64>(m, n, thin, thin, par, Default::default()));
    svd(a.as_ref(), sd.as_mut(), Some(u.as_mut()), Some(v.as_mut()), par, MemStack::new(&mut buf), Default::default())
        .map_err(|e| Error::LinearSolverFailure(format!("SVD did not converge: {e:?}")))?;
    let s: Vec<f64> = (0..k).map(|i| sd.column_vector()[i]).collect();
    let g: Vec<f64> = (0..k).map(|c| (0..m).map(|i| u[(i, c)] * r[i]).sum()).collect();
    let grad_inf = (0..n).map(|j| (0..m).map(|i| a[(i, j)] * r[i]).sum::<f64>().abs()).fold(0.0, f64::max);
    Ok(Factored { v, s, g, grad_inf })
}

impl Factored {
    /// `δ = −V diag(w) Uᵀ r`.
    fn step(&self, weight: impl Fn(f64) -> f64) -> Vec<f64> {
        let c: Vec<f64> = self.s.iter().zip(&self.g).map(|(&s, &g)| weight(s) * g).collect();
        let mut d = vec![0.0; self.v.nrows()];
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0.0 {
                for (i, di) in d.iter_mut().enumerate() {
                    *di -= self.v[(i, j)] * cj;
                }
            }
        }
        d
    }

    fn gauss_newton_step(&self) -> Vec<f64> {
        let cut = f64::EPSILON * self.s.first().copied().unwrap_or(0.0);
        self.step(|s| if s > cut { 1.0 / s } else { 0.0 })
    }

    fn damped_step(&self, lambda: f64) -> Vec<f64> {
        let s0 = self.s.first().copied().unwrap_or(0.0);
        let mu = lambda * s0 * s0;
        self.step(|s| if s > 0.0 { s / (s * s + mu) } else { 0.0 })
    }
}

fn telemetry(restart: usize, iteration: usize, loss: f64, lambda: f64) {
    info!(
        target: "elmflow::telemetry",
        "{}",
        serde_json::json!({ "restart": restart, "iteration": iteration, "loss": loss, "damping": lambda })
    );
}

fn lm_run<R, J>(
    residual: &mut R,
    jacobian: &mut J,
    beta0: Vec<f64>,
    cfg: &TrainConfig,
    stall_detection: bool,
    restart: usize,
) -> Result<Run>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<Matrix>,
{
    let mut beta = beta0;
    let mut r = residual(&beta)?;
    if !all_finite(&r) {
        return Err(Error::NumericFailure { iteration: 0, message: "non-finite residual at the initial guess".into() });
    }
    let mut loss = loss_of(&r);
    let mut lambda = cfg.damping_init;
    let mut stall = 0;
    telemetry(restart, 0, loss, lambda);
    for it in 1..=cfg.max_iterations {
        if norm2(&r) <= cfg.residual_tol {
            return Ok(Run { beta, r, loss, iterations: it - 1, termination: Termination::Residual });
        }
        let jac = jacobian(&beta)?;
        if !all_finite(jac.as_slice()) {
            return Err(Error::NumericFailure { iteration: it, message: "non-finite Jacobian entry".into() });
        }
        if jac.cols() != beta.len() || jac.rows() != r.len() {
            return Err(Error::invalid(format!(
                "Jacobian is {}x{}, expected {}x{}",
                jac.rows(),
                jac.cols(),
                r.len(),
                beta.len()
            )));
        }
        let fac = factor(&jac, &r)?;
        if fac.grad_inf <= cfg.gtol {
            return Ok(Run { beta, r, loss, iterations: it - 1, termination: Termination::Gradient });
        }
        let trial = |delta: &[f64], residual: &mut R| -> Result<(Vec<f64>, Vec<f64>, f64)> {
            let b: Vec<f64> = beta.iter().zip(delta).map(|(b, d)| b + d).collect();
            let rn = residual(&b)?;
            let l = if all_finite(&rn) { loss_of(&rn) } else { f64::INFINITY };
            Ok((b, rn, l))
        };
        let mut delta = fac.gauss_newton_step();
        let mut accepted = trial(&delta, residual)?;
        while !(accepted.2 < loss) {
            if lambda > LAMBDA_MAX {
                return Ok(Run { beta, r, loss, iterations: it, termination: Termination::NoProgress });
            }
            delta = fac.damped_step(lambda);
            accepted = trial(&delta, residual)?;
            if !(accepted.2 < loss) {
                lambda *= LAMBDA_REJECT;
            }
        }
        lambda = (lambda * LAMBDA_ACCEPT).max(f64::MIN_POSITIVE);
        let (new_beta, new_r, new_loss) = accepted;
        let reduction = (loss - new_loss) / loss;
        let step_small = norm2(&delta) <= cfg.xtol * (cfg.xtol + norm2(&beta));
        beta = new_beta;
        r = new_r;
        loss = new_loss;
        telemetry(restart, it, loss, lambda);
        if step_small {
            return Ok(Run { beta, r, loss, iterations: it, termination: Termination::Step });
        }
        if stall_detection {
            stall = if reduction < STALL_REDUCTION { stall + 1 } else { 0 };
            if stall >= cfg.perturb.trigger.max(1) && loss > cfg.perturb.target_loss {
                return Ok(Run { beta, r, loss, iterations: it, termination: Termination::Stalled });
            }
        }
    }
    let termination = if norm2(&r) <= cfg.residual_tol { Termination::Residual } else { Termination::MaxIterations };
    Ok(Run { beta, r, loss, iterations: cfg.max_iterations, termination })
}

fn report(run: &Run, iterations: usize, restarts: usize, run_bests: Vec<f64>, start: Instant) -> TrainReport {
    TrainReport {
        residual_norm: norm2(&run.r),
        residual_max: run.r.iter().fold(0.0, |a, v| a.max(v.abs())),
        iterations,
        restarts,
        run_bests,
        termination: run.termination,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Damped Gauss–Newton from `beta0`; returns the best iterate.
pub fn gauss_newton<R, J>(mut residual: R, mut jacobian: J, beta0: &[f64], cfg: &TrainConfig) -> Result<(Vec<f64>, TrainReport)>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<Matrix>,
{
    let start = Instant::now();
    let run = lm_run(&mut residual, &mut jacobian, beta0.to_vec(), cfg, false, 0)?;
    let rep = report(&run, run.iterations, 0, vec![norm2(&run.r)], start);
    Ok((run.beta, rep))
}

/// [`gauss_newton`] with perturbation restarts. A run that stalls (relative
/// loss reduction below 1e-4 for `trigger` consecutive iterations, loss above
/// target) is restarted from the best `β` so far plus `U[−mag, mag]` noise.
/// Collocation data stay fixed; the best `β` over all runs is returned.
pub fn nllsq_perturb<R, J>(mut residual: R, mut jacobian: J, beta0: &[f64], cfg: &TrainConfig) -> Result<(Vec<f64>, TrainReport)>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<Matrix>,
{
    let start = Instant::now();
    let detect = cfg.perturb.max_restarts > 0;
    let mag = cfg.perturb.magnitude.unwrap_or(0.5);
    let mut rng = SeededRng::new(cfg.seed, Stream::Perturbation);
    let mut best = lm_run(&mut residual, &mut jacobian, beta0.to_vec(), cfg, detect, 0)?;
    let mut iterations = best.iterations;
    let mut bests = vec![norm2(&best.r)];
    let mut restarts = 0;
    let mut stalled = best.termination == Termination::Stalled;
    while stalled && restarts < cfg.perturb.max_restarts {
        restarts += 1;
        let start_beta: Vec<f64> = best.beta.iter().map(|b| b + rng.uniform(-mag, mag)).collect();
        let run = lm_run(&mut residual, &mut jacobian, start_beta, cfg, detect, restarts)?;
        iterations += run.iterations;
        bests.push(norm2(&run.r));
        stalled = run.termination == Termination::Stalled;
        if run.loss < best.loss {
            best = run;
        }
    }
    let rep = report(&best, iterations, restarts, bests, start);
    Ok((best.beta, rep))
}
