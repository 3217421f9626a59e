//! Parameter sweeps comparing learned integrators with classical ones.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::{entry, reference_trajectory, CatalogEntry};
use super::config::ProblemConfig;
use crate::decomp::DecomposedModel;
use crate::error::{Error, Result};
use crate::marcher::{march, MarchConfig, StepMode};
use crate::odecore::{error_metrics, uniform_grid, Trajectory};
use crate::psirep::PsiKind;
use crate::refsolve::{dp54_adaptive, rk4_fixed, sdirk2_adaptive, Tolerances};
use crate::trainer::{train_decomposed, TrainReport};

/// Default tolerance of the adaptive baselines.
pub const DEFAULT_BASELINE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    M,
    Q,
    #[serde(rename = "h_max")]
    HMax,
    #[serde(rename = "tolerance")]
    Tolerance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Learned(PsiKind),
    Rk4,
    Dp54,
    Sdirk2,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Learned(k) => k.label(),
            Method::Rk4 => "RK4",
            Method::Dp54 => "DP54",
            Method::Sdirk2 => "SDIRK2",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        if let Some(k) = PsiKind::from_label(s) {
            return Some(Method::Learned(k));
        }
        match s.to_ascii_uppercase().as_str() {
            "RK4" => Some(Method::Rk4),
            "DP54" => Some(Method::Dp54),
            "SDIRK2" => Some(Method::Sdirk2),
            _ => None,
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Method::from_label(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Catalog id; selects the exact or reference solution.
    pub problem: String,
    /// Problem file replacing the catalog defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_config: Option<PathBuf>,
    pub sweep: SweepVariable,
    #[serde(default)]
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    /// CSV path; the JSON table goes next to it with a `.json` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Shortens the marching span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Adds wall-time columns to the CSV (they always go to the JSON).
    #[serde(default)]
    pub csv_timings: bool,
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        // relative paths resolve against the experiment file
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.problem_config, &mut cfg.output].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_value: f64,
    pub e_max: Option<f64>,
    pub e_rms: Option<f64>,
    pub train_wall_time: Option<f64>,
    pub march_wall_time: Option<f64>,
    /// Largest training residual over sub-domains.
    pub residual_max: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(method: Method, sweep_value: f64, e: &Error) -> Self {
        ResultRow {
            method,
            sweep_value,
            e_max: None,
            e_rms: None,
            train_wall_time: None,
            march_wall_time: None,
            residual_max: None,
            error: Some(e.to_string()),
        }
    }
}

/// Trains every sub-domain model of `cfg`.
pub fn train_problem(cfg: &ProblemConfig, jobs: usize) -> Result<(DecomposedModel, Vec<TrainReport>)> {
    train_decomposed(&cfg.system(), &cfg.partition()?, cfg.network.kind, &cfg.net_config(), &cfg.training, jobs)
}

fn apply_sweep(cfg: &mut ProblemConfig, var: SweepVariable, v: f64) -> Result<()> {
    let count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Config(format!("sweep value {v} is not a positive integer")))
        }
    };
    match var {
        SweepVariable::M => cfg.network.m = count(v)?,
        SweepVariable::Q => cfg.training.q = count(v)?,
        SweepVariable::HMax => {
            cfg.domain.h_max = v;
            if let Some(dt) = cfg.march.dt {
                cfg.march.dt = Some(dt.min(v));
            }
            cfg.subdomains.band_h_max = None;
        }
        SweepVariable::Tolerance => {
            cfg.training.gtol = v;
            cfg.training.xtol = v;
        }
    }
    Ok(())
}

fn run_learned(kind: PsiKind, cfg: &ProblemConfig, entry: &CatalogEntry) -> Result<ResultRow> {
    let mut cfg = cfg.clone();
    cfg.network.kind = kind;
    cfg.validate()?;
    let t = Instant::now();
    let (model, reports) = train_problem(&cfg, 1)?;
    let train_time = t.elapsed().as_secs_f64();
    let mc: MarchConfig = cfg.march_config();
    let t = Instant::now();
    let traj = march(&model, &cfg.problem.y0, &mc)?;
    let march_time = t.elapsed().as_secs_f64();
    let reference = reference_trajectory(entry, &cfg.problem.y0, traj.times())?;
    let err = error_metrics(&traj, &reference)?;
    Ok(ResultRow {
        method: Method::Learned(kind),
        sweep_value: 0.0,
        e_max: Some(err.e_max),
        e_rms: Some(err.e_rms),
        train_wall_time: Some(train_time),
        march_wall_time: Some(march_time),
        residual_max: Some(reports.iter().map(|r| r.residual_max).fold(0.0, f64::max)),
        error: None,
    })
}

fn run_classical(method: Method, cfg: &ProblemConfig, entry: &CatalogEntry, var: SweepVariable, v: f64) -> Result<ResultRow> {
    let sys = cfg.system();
    let y0 = &cfg.problem.y0;
    let (t0, tf) = cfg.problem.t_span;
    let dt = match (var, cfg.march_config().mode) {
        (SweepVariable::HMax, _) => v,
        (_, StepMode::Fixed { dt }) => dt,
        (_, StepMode::QuasiAdaptive { .. }) => cfg.domain.h_max,
    };
    let tol = if var == SweepVariable::Tolerance { v } else { DEFAULT_BASELINE_TOL };
    let grid = uniform_grid(t0, tf, dt)?;
    let t = Instant::now();
    let traj: Trajectory = match method {
        Method::Rk4 => rk4_fixed(&sys, y0, t0, tf, dt)?,
        Method::Dp54 => dp54_adaptive(&sys, y0, &grid, Tolerances::uniform(tol)?)?,
        Method::Sdirk2 => sdirk2_adaptive(&sys, y0, &grid, Tolerances::uniform(tol)?)?,
        Method::Learned(_) => unreachable!(),
    };
    let march_time = t.elapsed().as_secs_f64();
    let reference = reference_trajectory(entry, y0, traj.times())?;
    let err = error_metrics(&traj, &reference)?;
    Ok(ResultRow {
        method,
        sweep_value: 0.0,
        e_max: Some(err.e_max),
        e_rms: Some(err.e_rms),
        train_wall_time: None,
        march_wall_time: Some(march_time),
        residual_max: None,
        error: None,
    })
}

fn run_point(method: Method, v: f64, base: &ProblemConfig, entry: &CatalogEntry, var: SweepVariable) -> ResultRow {
    let res = (|| {
        let mut cfg = base.clone();
        apply_sweep(&mut cfg, var, v)?;
        match method {
            Method::Learned(k) => run_learned(k, &cfg, entry),
            m => run_classical(m, &cfg, entry, var, v),
        }
    })();
    match res {
        Ok(mut row) => {
            row.sweep_value = v;
            row
        }
        Err(e) => {
            log::warn!("{} at {v}: {e}", method.label());
            ResultRow::failed(method, v, &e)
        }
    }
}

/// Runs the sweep. Rows come out ordered by sweep value, then method, and
/// failures are recorded in their row. Files are written when `output` is set.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRow>> {
    let entry = entry(&cfg.problem)?;
    let mut base = match &cfg.problem_config {
        Some(p) => ProblemConfig::load(p)?,
        None => entry.config.clone(),
    };
    base.network.seed = cfg.seed;
    base.training.seed = cfg.seed;
    if let Some(tf) = cfg.t_final {
        base.problem.t_span.1 = tf;
    }
    if cfg.methods.is_empty() {
        return Err(Error::Config("experiment lists no methods".into()));
    }
    let tasks: Vec<(f64, Method)> =
        cfg.values.iter().flat_map(|&v| cfg.methods.iter().map(move |&m| (v, m))).collect();
    let run = |&(v, m): &(f64, Method)| run_point(m, v, &base, &entry, cfg.sweep);
    let rows: Vec<ResultRow> = if jobs <= 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    if let Some(path) = &cfg.output {
        write_results(&rows, path, cfg.csv_timings)?;
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// CSV table with a header row; floats carry 17 significant digits.
pub fn write_csv<W: Write>(rows: &[ResultRow], mut w: W, timings: bool) -> Result<()> {
    let mut header = vec!["method", "sweep_value", "e_max", "e_rms", "residual_max"];
    if timings {
        header.extend(["train_wall_time", "march_wall_time"]);
    }
    header.push("error");
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut cells = vec![
            r.method.label().to_string(),
            format!("{:.16e}", r.sweep_value),
            fmt_opt(r.e_max),
            fmt_opt(r.e_rms),
            fmt_opt(r.residual_max),
        ];
        if timings {
            cells.push(fmt_opt(r.train_wall_time));
            cells.push(fmt_opt(r.march_wall_time));
        }
        // keep the message inside one quoted cell
        cells.push(r.error.as_ref().map(|e| format!("\"{}\"", e.replace('"', "'"))).unwrap_or_default());
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_results(rows: &[ResultRow], csv_path: &Path, timings: bool) -> Result<()> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(rows, std::io::BufWriter::new(std::fs::File::create(csv_path)?), timings)?;
    std::fs::write(csv_path.with_extension("json"), serde_json::to_string_pretty(rows)?)?;
    Ok(())
}
