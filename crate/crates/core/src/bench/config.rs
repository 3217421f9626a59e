//! TOML problem configuration: system, training domain, decomposition,
//! network, training and marching settings in one file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decomp::{build_partition, Partition};
use crate::error::{Error, Result};
use crate::marcher::{MarchConfig, StepMode, QUASI_ADAPTIVE_SAFETY};
use crate::odecore::{IvpSystem, SystemSpec, TrainingDomain, XiSign};
use crate::psirep::{NetConfig, PsiKind};
use crate::randnet::Activation;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSection {
    pub system: SystemSpec,
    pub y0: Vec<f64>,
    pub t_span: (f64, f64),
    /// Integrate the reference with the stiff solver.
    #[serde(default)]
    pub stiff: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSection {
    pub y0_box: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<(f64, f64)>,
    pub h_max: f64,
    #[serde(default)]
    pub xi_sign: XiSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandHMax {
    pub axis: usize,
    pub values: Vec<f64>,
}

/// Decomposition of the `(y0, [t0])` box. Axis indices count the state axes
/// first and then `t0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubdomainSection {
    /// Equal-width band counts per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<Vec<usize>>,
    /// Explicit boundary lists per axis (endpoints included).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<Vec<f64>>>,
    /// Enlargement ratio on every decomposed axis.
    #[serde(default)]
    pub r: f64,
    /// Per-axis enlargement ratios; overrides `r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_per_axis: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_h_max: Option<BandHMax>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSection {
    pub kind: PsiKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Rm")]
    pub rm: f64,
    #[serde(default = "one")]
    pub delta_m: f64,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn safety() -> f64 {
    QUASI_ADAPTIVE_SAFETY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarchSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub quasi_adaptive: bool,
    #[serde(default = "safety")]
    pub safety: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodicity_exploit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub problem: ProblemSection,
    pub domain: DomainSection,
    #[serde(default)]
    pub subdomains: SubdomainSection,
    pub network: NetworkSection,
    #[serde(default)]
    pub training: TrainConfig,
    pub march: MarchSection,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ProblemConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ProblemConfig = toml::from_str(s).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Builds every derived object once so that errors surface as
    /// configuration errors.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system();
        if self.problem.y0.len() != sys.dim() {
            return Err(Error::Config(format!("y0 has {} entries, system dimension is {}", self.problem.y0.len(), sys.dim())));
        }
        let (t0, tf) = self.problem.t_span;
        if !(tf >= t0) {
            return Err(Error::Config(format!("t_span needs tf >= t0, got [{t0}, {tf}]")));
        }
        if self.network.m == 0 || !(self.network.rm > 0.0) || !(self.network.delta_m > 0.0) {
            return Err(Error::Config("network needs M > 0, Rm > 0 and delta_m > 0".into()));
        }
        if self.training.q == 0 {
            return Err(Error::Config("training needs Q > 0".into()));
        }
        let part = self.partition().map_err(config_err)?;
        if part.domain().dim() != sys.dim() {
            return Err(Error::Config(format!("domain has {} axes, system dimension is {}", part.domain().dim(), sys.dim())));
        }
        if !self.march.quasi_adaptive {
            match self.march.dt {
                Some(dt) if dt > 0.0 && dt <= part.subdomains().iter().map(|s| s.h_max_local).fold(f64::INFINITY, f64::min) => {}
                _ => return Err(Error::Config("march needs 0 < dt <= h_max, or quasi_adaptive = true".into())),
            }
        } else if !(self.march.safety > 0.0 && self.march.safety <= 1.0) {
            return Err(Error::Config("quasi-adaptive safety must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> IvpSystem {
        self.problem.system.build()
    }

    pub fn training_domain(&self) -> Result<TrainingDomain> {
        let d = &self.domain;
        TrainingDomain::with_sign(d.y0_box.clone(), d.t0, d.h_max, d.xi_sign)
    }

    pub fn partition(&self) -> Result<Partition> {
        let dom = self.training_domain()?;
        let s = &self.subdomains;
        let mut part = match (&s.uniform, &s.boundaries) {
            (Some(_), Some(_)) => return Err(Error::Config("give either uniform or boundaries, not both".into())),
            (Some(u), None) => Partition::uniform(&dom, u)?,
            (None, Some(b)) => build_partition(&dom, b.clone())?,
            (None, None) => Partition::single(&dom),
        };
        part = match &s.r_per_axis {
            Some(rs) => {
                if rs.len() != part.boundaries().len() {
                    return Err(Error::Config(format!("r_per_axis needs {} entries", part.boundaries().len())));
                }
                rs.iter().enumerate().try_fold(part, |p, (k, &r)| p.with_axis_enlargement(k, r))?
            }
            None => part.with_enlargement(s.r)?,
        };
        if let Some(b) = &s.band_h_max {
            part = part.with_band_h_max(b.axis, &b.values)?;
        }
        part.with_delta_m(self.network.delta_m)
    }

    pub fn net_config(&self) -> NetConfig {
        let n = &self.network;
        NetConfig { hidden: vec![n.m], rm: n.rm, delta_m: n.delta_m, activation: n.activation, seed: n.seed }
    }

    pub fn march_config(&self) -> MarchConfig {
        let m = &self.march;
        let (t0, tf) = self.problem.t_span;
        let mode = if m.quasi_adaptive {
            StepMode::QuasiAdaptive { safety: m.safety }
        } else {
            StepMode::Fixed { dt: m.dt.unwrap_or(self.domain.h_max) }
        };
        MarchConfig { mode, t_span: (t0, tf), periodicity_exploit: m.periodicity_exploit }
    }
}
