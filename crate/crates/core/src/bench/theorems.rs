//! Numerical checks of the flow-map periodicity properties that the
//! marcher relies on, using a tight DP54 flow as ground truth.

use serde::{Deserialize, Serialize};

use super::catalog::entry;
use crate::error::{Error, Result};
use crate::odecore::IvpSystem;
use crate::randnet::rng::{SeededRng, Stream};
use crate::refsolve::{dp54_flow, newton_root, Tolerances};

/// Flow tolerances for the checks.
pub fn flow_tolerances() -> Tolerances {
    Tolerances { atol: 1e-15, rtol: 1e-13 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: String, samples: usize, max_deviation: f64, tol: f64) -> Self {
        CheckResult { name, samples, max_deviation, tol, passed: max_deviation <= tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub problem: String,
    pub checks: Vec<CheckResult>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Sample points `(y0, t0, ξ)` from a box, a `t0` interval and `[0, h]`.
pub struct Sampler {
    rng: SeededRng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: SeededRng::new(seed, Stream::Collocation) }
    }

    pub fn draw(&mut self, y_box: &[(f64, f64)], t0: (f64, f64), h: f64) -> (Vec<f64>, f64, f64) {
        let y = y_box.iter().map(|&(a, b)| self.rng.uniform(a, b)).collect();
        (y, self.rng.uniform(t0.0, t0.1), self.rng.uniform(0.0, h))
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `‖Φ(y0, t0+T, ξ) − Φ(y0, t0, ξ)‖∞` over random samples.
pub fn check_temporal(
    sys: &IvpSystem,
    y_box: &[(f64, f64)],
    h: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let period = sys
        .temporal_period()
        .ok_or_else(|| Error::MetadataAbsent(format!("{} has no temporal period", sys.name())))?;
    let mut s = Sampler::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (y, t0, xi) = s.draw(y_box, (0.0, period), h);
        let a = dp54_flow(sys, &y, t0 + period, xi, flow_tolerances())?;
        let b = dp54_flow(sys, &y, t0, xi, flow_tolerances())?;
        worst = worst.max(max_abs_diff(&a, &b));
    }
    Ok(CheckResult::new("temporal".into(), samples, worst, tol))
}

/// `‖Φ(y0 + L_i e_i, t0, ξ) − Φ(y0, t0, ξ) − L_i e_i‖∞` for one periodic axis.
pub fn check_state_axis(
    sys: &IvpSystem,
    axis: usize,
    y_box: &[(f64, f64)],
    t0: (f64, f64),
    h: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let l = sys.periodicity().get(axis).copied().filter(|&l| l > 0.0).ok_or_else(|| {
        Error::MetadataAbsent(format!("{} has no state period on axis {axis}", sys.name()))
    })?;
    let mut s = Sampler::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (y, t, xi) = s.draw(y_box, t0, h);
        let mut shifted = y.clone();
        shifted[axis] += l;
        let a = dp54_flow(sys, &shifted, t, xi, flow_tolerances())?;
        let b = dp54_flow(sys, &y, t, xi, flow_tolerances())?;
        let mut d = 0.0f64;
        for k in 0..y.len() {
            let off = if k == axis { l } else { 0.0 };
            d = d.max((a[k] - b[k] - off).abs());
        }
        worst = worst.max(d);
    }
    Ok(CheckResult::new(format!("state axis {axis}"), samples, worst, tol))
}

/// Finds a point on a `T`-periodic orbit by shooting from `guess`, then
/// checks that the solution through it repeats after one period at
/// `samples` times: `‖y(s+T) − y(s)‖∞`.
pub fn check_periodic_orbit(sys: &IvpSystem, guess: &[f64], samples: usize, tol: f64, seed: u64) -> Result<CheckResult> {
    let period = sys
        .temporal_period()
        .ok_or_else(|| Error::MetadataAbsent(format!("{} has no temporal period", sys.name())))?;
    let n = sys.dim();
    let shoot = |y: &[f64]| dp54_flow(sys, y, 0.0, period, flow_tolerances());
    let residual = |y: &[f64], out: &mut [f64]| match shoot(y) {
        Ok(p) => out.iter_mut().zip(p.iter().zip(y)).for_each(|(o, (a, b))| *o = a - b),
        Err(_) => out.fill(f64::NAN),
    };
    let jac = |y: &[f64], m: &mut crate::refsolve::Matrix| {
        let mut base = vec![0.0; n];
        residual(y, &mut base);
        let mut yp = y.to_vec();
        let mut fp = vec![0.0; n];
        for j in 0..n {
            let d = 1e-7 * (1.0 + y[j].abs());
            yp[j] = y[j] + d;
            residual(&yp, &mut fp);
            yp[j] = y[j];
            for i in 0..n {
                m.as_mut_slice()[i * n + j] = (fp[i] - base[i]) / d;
            }
        }
    };
    let orbit = newton_root(residual, jac, guess, 1e-12, 30)?.x;
    let mut rng = SeededRng::new(seed, Stream::Collocation);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = rng.uniform(0.0, 2.0 * period);
        let a = dp54_flow(sys, &orbit, 0.0, s + period, flow_tolerances())?;
        let b = dp54_flow(sys, &orbit, 0.0, s, flow_tolerances())?;
        worst = worst.max(max_abs_diff(&a, &b));
    }
    Ok(CheckResult::new("periodic orbit".into(), samples, worst, tol))
}

/// Runs every check the problem's metadata allows. A problem with neither a
/// temporal period nor a periodic state axis gives `MetadataAbsent`.
pub fn verify_flow_theorems(problem: &str, samples: usize, tol: f64) -> Result<TheoremReport> {
    let e = entry(problem)?;
    let sys = e.system();
    let dom = e.config.training_domain()?;
    let y_box: Vec<(f64, f64)> = dom.y0_box().to_vec();
    let h = dom.h_max();
    let seed = e.config.training.seed;
    let mut checks = Vec::new();
    if sys.temporal_period().is_some() {
        checks.push(check_temporal(&sys, &y_box, h, samples, tol, seed)?);
        let centre: Vec<f64> = vec![0.0; sys.dim()];
        checks.push(check_periodic_orbit(&sys, &centre, samples, tol, seed)?);
    }
    let t0 = (0.0, sys.temporal_period().unwrap_or(1.0));
    for (k, &l) in sys.periodicity().iter().enumerate() {
        if l > 0.0 {
            checks.push(check_state_axis(&sys, k, &y_box, t0, h, samples, tol, seed)?);
        }
    }
    if checks.is_empty() {
        return Err(Error::MetadataAbsent(format!("{problem} has no periodicity metadata")));
    }
    Ok(TheoremReport { problem: problem.to_string(), checks })
}
