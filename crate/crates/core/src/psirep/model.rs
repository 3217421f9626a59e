use serde::{Deserialize, Serialize};

use super::stages::{solve_dirk_stage_derivatives, solve_dirk_stages, solve_dk_dxi, solve_stage_k};
use crate::error::{Error, Result};
use crate::odecore::{IvpSystem, TrainingDomain};
use crate::randnet::{init_subnet_with, Activation, FeatureScratch, Normalizer, SubnetParams};
use crate::refsolve::SDIRK_GAMMA;

/// The five baseline-plus-correction forms of ψ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PsiKind {
    ExpS0,
    ExpS1,
    ExpS2,
    ImpS1,
    ImpS2,
}

impl PsiKind {
    pub const ALL: [PsiKind; 5] = [PsiKind::ExpS0, PsiKind::ExpS1, PsiKind::ExpS2, PsiKind::ImpS1, PsiKind::ImpS2];

    /// Order `s` of the baseline; the correction is scaled by `ξ^{s+1}`.
    pub fn order(self) -> i32 {
        match self {
            PsiKind::ExpS0 => 0,
            PsiKind::ExpS1 | PsiKind::ImpS1 => 1,
            PsiKind::ExpS2 | PsiKind::ImpS2 => 2,
        }
    }

    pub fn is_implicit(self) -> bool {
        matches!(self, PsiKind::ImpS1 | PsiKind::ImpS2)
    }

    pub fn label(self) -> &'static str {
        match self {
            PsiKind::ExpS0 => "ExpS0",
            PsiKind::ExpS1 => "ExpS1",
            PsiKind::ExpS2 => "ExpS2",
            PsiKind::ImpS1 => "ImpS1",
            PsiKind::ImpS2 => "ImpS2",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        PsiKind::ALL.into_iter().find(|k| k.label().eq_ignore_ascii_case(s))
    }

    pub fn dirk_gamma() -> f64 {
        SDIRK_GAMMA
    }
}

/// Network hyper-parameters for a new model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Hidden layer widths; the last one is `M`.
    pub hidden: Vec<usize>,
    pub rm: f64,
    pub delta_m: f64,
    pub activation: Activation,
    pub seed: u64,
}

impl NetConfig {
    /// One hidden layer of width `m`, `δm = 1`, gaussian activation.
    pub fn single(m: usize, rm: f64, seed: u64) -> Self {
        NetConfig { hidden: vec![m], rm, delta_m: 1.0, activation: Activation::Gaussian, seed }
    }

    pub fn with_delta_m(mut self, delta_m: f64) -> Self {
        self.delta_m = delta_m;
        self
    }
}

/// Baseline `F` and, optionally, `∂F/∂ξ` at one point.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub value: Vec<f64>,
    pub dxi: Option<Vec<f64>>,
}

/// A learned approximation of the flow map: `ψ = F + ξ^{s+1} β φ`.
#[derive(Debug, Clone)]
pub struct PsiModel {
    kind: PsiKind,
    subnet: SubnetParams,
    normalizer: Normalizer,
    system: IvpSystem,
    domain: TrainingDomain,
    trained: bool,
}

impl PsiModel {
    /// Fresh model with `β = 0`. The network drops `t0` from its input when
    /// the domain has no `t0` interval.
    pub fn new(system: IvpSystem, domain: TrainingDomain, kind: PsiKind, net: &NetConfig) -> Result<Self> {
        let n = system.dim();
        let m0 = if domain.is_autonomous() { n + 1 } else { n + 2 };
        let mut arch = vec![m0];
        arch.extend_from_slice(&net.hidden);
        arch.push(n);
        let subnet = init_subnet_with(&arch, net.rm, net.seed, net.activation)?;
        let normalizer = Normalizer::for_domain(&domain, net.delta_m)?;
        Self::from_parts(kind, subnet, normalizer, system, domain)
    }

    pub fn from_parts(
        kind: PsiKind,
        subnet: SubnetParams,
        normalizer: Normalizer,
        system: IvpSystem,
        domain: TrainingDomain,
    ) -> Result<Self> {
        let n = system.dim();
        if domain.dim() != n {
            return Err(Error::invalid(format!("domain has {} axes, system dimension is {n}", domain.dim())));
        }
        if domain.is_autonomous() && !system.is_autonomous() {
            return Err(Error::invalid(format!(
                "{} is non-autonomous; the training domain needs a t0 interval",
                system.name()
            )));
        }
        let m0 = if domain.is_autonomous() { n + 1 } else { n + 2 };
        if subnet.input_dim() != m0 || subnet.output_dim() != n {
            return Err(Error::invalid(format!(
                "architecture {:?} inconsistent with n = {n} (expects input {m0})",
                subnet.arch()
            )));
        }
        if normalizer.input_dim() != m0 {
            return Err(Error::invalid("normalizer dimension does not match the network input"));
        }
        Ok(PsiModel { kind, subnet, normalizer, system, domain, trained: false })
    }

    pub fn kind(&self) -> PsiKind {
        self.kind
    }

    pub fn order(&self) -> i32 {
        self.kind.order()
    }

    pub fn subnet(&self) -> &SubnetParams {
        &self.subnet
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn system(&self) -> &IvpSystem {
        &self.system
    }

    pub fn domain(&self) -> &TrainingDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// `M`
    pub fn width(&self) -> usize {
        self.subnet.width()
    }

    /// True when the network ignores `t0`.
    pub fn is_autonomous(&self) -> bool {
        self.domain.is_autonomous()
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn beta(&self) -> &[f64] {
        self.subnet.beta()
    }

    pub fn set_beta(&mut self, beta: &[f64]) -> Result<()> {
        self.subnet.set_beta(beta)
    }

    pub(crate) fn set_trained(&mut self, trained: bool) {
        self.trained = trained;
    }

    pub fn h_max(&self) -> f64 {
        self.domain.h_max()
    }

    /// Raw network input `(y0, [t0], ξ)` into `buf`.
    #[inline]
    pub(crate) fn net_input(&self, y0: &[f64], t0: f64, xi: f64, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend_from_slice(y0);
        if !self.is_autonomous() {
            buf.push(t0);
        }
        buf.push(xi);
    }

    /// Baseline `F(y0, t0, ξ)` and optionally `∂F/∂ξ`.
    pub fn baseline(&self, y0: &[f64], t0: f64, xi: f64, with_dxi: bool) -> Result<Baseline> {
        self.system.check_dim(y0)?;
        let sys = &self.system;
        let n = y0.len();
        match self.kind {
            PsiKind::ExpS0 => Ok(Baseline { value: y0.to_vec(), dxi: with_dxi.then(|| vec![0.0; n]) }),
            PsiKind::ExpS1 => {
                let f0 = sys.eval_rhs(y0, t0)?;
                let value = (0..n).map(|i| y0[i] + xi * f0[i]).collect();
                Ok(Baseline { value, dxi: with_dxi.then_some(f0) })
            }
            PsiKind::ExpS2 => {
                let f0 = sys.eval_rhs(y0, t0)?;
                let g: Vec<f64> = (0..n).map(|i| y0[i] + 0.5 * xi * f0[i]).collect();
                let tm = t0 + 0.5 * xi;
                let fm = sys.eval_rhs(&g, tm)?;
                let value = (0..n).map(|i| y0[i] + xi * fm[i]).collect();
                let dxi = if with_dxi {
                    // d/dξ [ξ f(G, t0+ξ/2)] = f + ξ (J·f0/2 + f_t/2)
                    let j = sys.eval_jac_y(&g, tm)?;
                    let ft = sys.eval_jac_t(&g, tm)?;
                    let jf = j.mul_vec(&f0);
                    Some((0..n).map(|i| fm[i] + xi * 0.5 * (jf[i] + ft[i])).collect())
                } else {
                    None
                };
                Ok(Baseline { value, dxi })
            }
            PsiKind::ImpS1 => {
                let k = solve_stage_k(sys, y0, t0, xi)?;
                let value = (0..n).map(|i| y0[i] + xi * k[i]).collect();
                let dxi = if with_dxi {
                    let dk = solve_dk_dxi(sys, y0, t0, xi, &k)?;
                    Some((0..n).map(|i| k[i] + xi * dk[i]).collect())
                } else {
                    None
                };
                Ok(Baseline { value, dxi })
            }
            PsiKind::ImpS2 => {
                let g = SDIRK_GAMMA;
                let (k1, k2) = solve_dirk_stages(sys, y0, t0, xi)?;
                let value = (0..n).map(|i| y0[i] + (1.0 - g) * xi * k1[i] + g * xi * k2[i]).collect();
                let dxi = if with_dxi {
                    let (d1, d2) = solve_dirk_stage_derivatives(sys, y0, t0, xi, &k1, &k2)?;
                    Some((0..n).map(|i| (1.0 - g) * (k1[i] + xi * d1[i]) + g * (k2[i] + xi * d2[i])).collect())
                } else {
                    None
                };
                Ok(Baseline { value, dxi })
            }
        }
    }

    /// `ψ` and `∂ψ/∂ξ` with the model's current `β`.
    pub fn psi_with_dxi(&self, y0: &[f64], t0: f64, xi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let b = self.baseline(y0, t0, xi, true)?;
        let m = self.width();
        let n = self.dim();
        let mut input = Vec::with_capacity(n + 2);
        self.net_input(y0, t0, xi, &mut input);
        let mut phi = vec![0.0; m];
        let mut dphi = vec![0.0; m];
        self.subnet.features_into(&self.normalizer, &input, &mut phi, Some(&mut dphi), &mut FeatureScratch::default());
        let mut v = vec![0.0; n];
        let mut dv = vec![0.0; n];
        self.subnet.apply_beta(self.beta(), &phi, &mut v);
        self.subnet.apply_beta(self.beta(), &dphi, &mut dv);
        let s = self.order();
        let p1 = xi.powi(s + 1);
        let ps = (s + 1) as f64 * xi.powi(s);
        let mut psi = b.value;
        let mut dpsi = b.dxi.unwrap();
        for i in 0..n {
            psi[i] += p1 * v[i];
            dpsi[i] += ps * v[i] + p1 * dv[i];
        }
        Ok((psi, dpsi))
    }
}

/// The baseline `F(y0, t0, ξ)` of the model's representation.
#[allow(non_snake_case)]
pub fn eval_F(model: &PsiModel, y0: &[f64], t0: f64, xi: f64) -> Result<Vec<f64>> {
    Ok(model.baseline(y0, t0, xi, false)?.value)
}

/// `ψ(y0, t0, ξ) = F + ξ^{s+1} varphi` through the generic layered path.
pub fn eval_psi(model: &PsiModel, y0: &[f64], t0: f64, xi: f64) -> Result<Vec<f64>> {
    let f = eval_F(model, y0, t0, xi)?;
    let mut input = Vec::with_capacity(y0.len() + 2);
    model.net_input(y0, t0, xi, &mut input);
    let varphi = crate::randnet::eval_varphi(model.subnet(), model.normalizer(), &input)?;
    let c = xi.powi(model.order() + 1);
    Ok(f.iter().zip(&varphi).map(|(f, v)| f + c * v).collect())
}
