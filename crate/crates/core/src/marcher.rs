//! Time marching with trained models.
//!
//! A step is one evaluation of ψ at `ξ = h`. Decomposed models pick the local
//! model from the sub-domain holding the current state. Models trained on
//! `ξ ∈ [−h_max, 0]` are marched by solving `ψ(y_{k+1}, t_{k+1}, −h) = y_k`.

use serde::{Deserialize, Serialize};

use crate::decomp::DecomposedModel;
use crate::error::{Error, Result};
use crate::odecore::{uniform_grid, Trajectory, XiSign, TIME_TOLERANCE};
use crate::psirep::PsiModel;
use crate::randnet::{compile_evaluator, CompiledEvaluator};
use crate::refsolve::{newton_root, Matrix};

/// Default safety factor of quasi-adaptive stepping.
pub const QUASI_ADAPTIVE_SAFETY: f64 = 0.95;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepMode {
    Fixed { dt: f64 },
    QuasiAdaptive { safety: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarchConfig {
    pub mode: StepMode,
    pub t_span: (f64, f64),
    /// `None` wraps whenever the system carries periodicity metadata.
    #[serde(default)]
    pub periodicity_exploit: Option<bool>,
}

impl MarchConfig {
    pub fn fixed(t0: f64, tf: f64, dt: f64) -> Self {
        MarchConfig { mode: StepMode::Fixed { dt }, t_span: (t0, tf), periodicity_exploit: None }
    }

    pub fn quasi_adaptive(t0: f64, tf: f64) -> Self {
        MarchConfig {
            mode: StepMode::QuasiAdaptive { safety: QUASI_ADAPTIVE_SAFETY },
            t_span: (t0, tf),
            periodicity_exploit: None,
        }
    }

    pub fn with_periodicity(mut self, on: bool) -> Self {
        self.periodicity_exploit = Some(on);
        self
    }
}

/// One executed step: start time, governing sub-domain and step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub subdomain: usize,
    pub h: f64,
}

/// `T0 + mod(t − T0, T)`
pub fn wrap_time(t: f64, t_origin: f64, period: f64) -> f64 {
    t_origin + (t - t_origin).rem_euclid(period)
}

/// Maps `y` into the window `[c − L/2, c + L/2)` and returns the wrapped value
/// and the number `q` of periods removed, so that `y = y* + q L`.
pub fn wrap_state(y: f64, period: f64, center: f64) -> (f64, f64) {
    let lo = center - 0.5 * period;
    let mut q = ((y - lo) / period).floor();
    let mut w = lo + (y - lo).rem_euclid(period);
    if w >= lo + period {
        w -= period;
        q += 1.0;
    }
    (w, q)
}

/// Stateful stepper over one decomposed model. Holds per-model scratch, so
/// concurrent marches each need their own `Marcher`.
pub struct Marcher<'a> {
    model: &'a DecomposedModel,
    evals: Vec<CompiledEvaluator>,
    t_origin: f64,
    centers: Vec<f64>,
}

impl<'a> Marcher<'a> {
    pub fn new(model: &'a DecomposedModel) -> Self {
        let dom = model.partition().domain();
        Marcher {
            model,
            evals: model.models().iter().map(compile_evaluator).collect(),
            t_origin: dom.t0_interval().map_or(0.0, |(a, _)| a),
            centers: dom.y0_box().iter().map(|&(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    pub fn model(&self) -> &DecomposedModel {
        self.model
    }

    fn system_has_metadata(&self) -> bool {
        let m = &self.model.models()[0];
        let sys = m.system();
        (sys.temporal_period().is_some() && !m.is_autonomous()) || sys.has_state_periodicity()
    }

    /// `y_{k+1}` from `(y_k, t_k)` with step `h`.
    pub fn step(&mut self, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
        self.step_located(y, t, h).map(|(y, _)| y)
    }

    fn step_located(&mut self, y: &[f64], t: f64, h: f64) -> Result<(Vec<f64>, usize)> {
        let id = self.model.locate(y, t)?;
        let h_max = self.model.h_max(id);
        if !(h > 0.0) || h > h_max * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("step {h} outside (0, {h_max}] of sub-domain {id}")));
        }
        let out = match self.model.model(id).domain().xi_sign() {
            XiSign::Forward => self.evals[id].eval(y, t, h)?,
            XiSign::Backward => self.solve_backward(id, y, t, h)?,
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure { iteration: 0, message: format!("non-finite state {out:?}") });
        }
        Ok((out, id))
    }

    /// Solves `ψ(z, t + h, −h) = y` by Newton with a finite-difference
    /// Jacobian, starting from the forward Euler predictor.
    fn solve_backward(&mut self, id: usize, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
        let n = y.len();
        let t1 = t + h;
        let f0 = self.model.model(id).system().eval_rhs(y, t)?;
        let guess: Vec<f64> = (0..n).map(|i| y[i] + h * f0[i]).collect();
        let ev = std::cell::RefCell::new(&mut self.evals[id]);
        let failure = std::cell::RefCell::new(None);
        let eval = |z: &[f64], out: &mut [f64]| {
            if let Err(e) = ev.borrow_mut().eval_into(z, t1, -h, out) {
                failure.borrow_mut().get_or_insert(e);
                out.fill(f64::NAN);
            }
        };
        let resid = |z: &[f64], out: &mut [f64]| {
            eval(z, out);
            for i in 0..n {
                out[i] -= y[i];
            }
        };
        let jac = |z: &[f64], jm: &mut Matrix| {
            let mut zp = z.to_vec();
            let mut fp = vec![0.0; n];
            let mut fm = vec![0.0; n];
            for j in 0..n {
                let d = 1e-7 * (1.0 + z[j].abs());
                zp[j] = z[j] + d;
                eval(&zp, &mut fp);
                zp[j] = z[j] - d;
                eval(&zp, &mut fm);
                zp[j] = z[j];
                for i in 0..n {
                    jm[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
                }
            }
        };
        let res = newton_root(resid, jac, &guess, NEWTON_TOL, NEWTON_MAX_ITER);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(res?.x)
    }

    /// Step through the periodic reduction: time is wrapped by the temporal
    /// period and each periodic state component into the window of width `L`
    /// centred on the domain box, then the removed periods are added back.
    pub fn step_periodic(&mut self, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
        self.step_periodic_located(y, t, h).map(|(y, _)| y)
    }

    fn step_periodic_located(&mut self, y: &[f64], t: f64, h: f64) -> Result<(Vec<f64>, usize)> {
        if !self.system_has_metadata() {
            return Err(Error::MetadataAbsent(format!(
                "{} has no temporal period or periodicity vector",
                self.model.models()[0].system().name()
            )));
        }
        let first = &self.model.models()[0];
        let ts = match first.system().temporal_period() {
            Some(p) if !first.is_autonomous() => wrap_time(t, self.t_origin, p),
            _ => t,
        };
        let periods = first.system().periodicity().to_vec();
        let mut ys = y.to_vec();
        let mut shift = vec![0.0; y.len()];
        for (i, &l) in periods.iter().enumerate() {
            if l > 0.0 {
                let (w, q) = wrap_state(y[i], l, self.centers[i]);
                ys[i] = w;
                shift[i] = q * l;
            }
        }
        let (mut out, id) = self.step_located(&ys, ts, h)?;
        for (o, s) in out.iter_mut().zip(&shift) {
            *o += s;
        }
        Ok((out, id))
    }

    fn advance(&mut self, y: &[f64], t: f64, h: f64, periodic: bool) -> Result<(Vec<f64>, usize)> {
        if periodic {
            self.step_periodic_located(y, t, h)
        } else {
            self.step_located(y, t, h)
        }
    }

    fn governing(&self, y: &[f64], t: f64, periodic: bool) -> Result<usize> {
        if !periodic {
            return self.model.locate(y, t);
        }
        let first = &self.model.models()[0];
        let ts = match first.system().temporal_period() {
            Some(p) if !first.is_autonomous() => wrap_time(t, self.t_origin, p),
            _ => t,
        };
        let ys: Vec<f64> = y
            .iter()
            .zip(first.system().periodicity())
            .zip(&self.centers)
            .map(|((&v, &l), &c)| if l > 0.0 { wrap_state(v, l, c).0 } else { v })
            .collect();
        self.model.locate(&ys, ts)
    }

    fn resolve_periodic(&self, cfg: &MarchConfig) -> bool {
        cfg.periodicity_exploit.unwrap_or_else(|| self.system_has_metadata())
    }

    /// Marches `y0` over `cfg.t_span`, recording every state.
    pub fn march(&mut self, y0: &[f64], cfg: &MarchConfig) -> Result<Trajectory> {
        match cfg.mode {
            StepMode::Fixed { dt } => self.march_fixed(y0, cfg, dt),
            StepMode::QuasiAdaptive { safety } => self.march_adaptive(y0, cfg, safety).map(|(tr, _)| tr),
        }
    }

    fn march_fixed(&mut self, y0: &[f64], cfg: &MarchConfig, dt: f64) -> Result<Trajectory> {
        let (t0, tf) = cfg.t_span;
        let h_min = self.model.min_h_max();
        if !(dt > 0.0) || dt > h_min * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("Δt = {dt} must lie in (0, {h_min}]")));
        }
        let grid = uniform_grid(t0, tf, dt)?;
        let periodic = self.resolve_periodic(cfg);
        let mut traj = Trajectory::start(t0, y0.to_vec());
        let mut y = y0.to_vec();
        for (k, w) in grid.windows(2).enumerate() {
            let next = self.advance(&y, w[0], w[1] - w[0], periodic).map_err(|e| Error::AtStep {
                step: k,
                t: w[0],
                state: y.clone(),
                source: Box::new(e),
            })?;
            y = next.0;
            traj.push(w[1], y.clone());
        }
        Ok(traj)
    }

    fn march_adaptive(&mut self, y0: &[f64], cfg: &MarchConfig, safety: f64) -> Result<(Trajectory, Vec<StepRecord>)> {
        let (t0, tf) = cfg.t_span;
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::invalid(format!("safety factor must lie in (0, 1], got {safety}")));
        }
        if !(tf >= t0) {
            return Err(Error::invalid(format!("need tf >= t0, got [{t0}, {tf}]")));
        }
        let periodic = self.resolve_periodic(cfg);
        let mut traj = Trajectory::start(t0, y0.to_vec());
        let mut log = Vec::new();
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut k = 0;
        while tf - t > TIME_TOLERANCE * tf.abs().max(1.0) {
            let at = |e: Error, y: &[f64]| Error::AtStep { step: k, t, state: y.to_vec(), source: Box::new(e) };
            let id = self.governing(&y, t, periodic).map_err(|e| at(e, &y))?;
            let mut h = safety * self.model.h_max(id);
            let last = t + h >= tf - TIME_TOLERANCE * tf.abs().max(1.0);
            if last {
                h = tf - t;
            }
            let (next, used) = self.advance(&y, t, h, periodic).map_err(|e| at(e, &y))?;
            debug_assert_eq!(used, id);
            log.push(StepRecord { t, subdomain: id, h });
            y = next;
            t = if last { tf } else { t + h };
            traj.push(t, y.clone());
            k += 1;
        }
        Ok((traj, log))
    }
}

/// `ψ`-step of a single model.
pub fn step(model: &PsiModel, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    let d = DecomposedModel::single(model.clone());
    Marcher::new(&d).step(y, t, h)
}

/// Periodicity-reduced step of a single model.
pub fn step_periodic(model: &PsiModel, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    let d = DecomposedModel::single(model.clone());
    Marcher::new(&d).step_periodic(y, t, h)
}

pub fn march(model: &DecomposedModel, y0: &[f64], cfg: &MarchConfig) -> Result<Trajectory> {
    Marcher::new(model).march(y0, cfg)
}

/// Quasi-adaptive march: each step uses `h = safety · h_max` of the sub-domain
/// holding its start state; the last step lands on `tf`. Returns the step log.
pub fn march_quasi_adaptive(
    model: &DecomposedModel,
    y0: &[f64],
    t0: f64,
    tf: f64,
    safety: f64,
) -> Result<(Trajectory, Vec<StepRecord>)> {
    let cfg = MarchConfig { mode: StepMode::QuasiAdaptive { safety }, t_span: (t0, tf), periodicity_exploit: None };
    Marcher::new(model).march_adaptive(y0, &cfg, safety)
}
