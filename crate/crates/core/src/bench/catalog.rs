//! Benchmark problems with their default training and marching settings.

use std::f64::consts::PI;

use super::config::{BandHMax, DomainSection, MarchSection, NetworkSection, ProblemConfig, ProblemSection, SubdomainSection};
use crate::error::{Error, Result};
use crate::odecore::{uniform_grid, IvpSystem, SystemSpec, Trajectory, XiSign};
use crate::psirep::PsiKind;
use crate::randnet::Activation;
use crate::refsolve::{dp54_adaptive, sdirk2_adaptive, Tolerances};
use crate::trainer::TrainConfig;

/// Closed-form solution of `dy/dt = −λ(y − cos πt)`, `y(t0) = y0`.
pub fn exact_linear_solution(lambda: f64, y0: f64, t0: f64, t: f64) -> f64 {
    let d = lambda * lambda + PI * PI;
    let a = lambda * lambda / d;
    let b = lambda * PI / d;
    (y0 - a * (PI * t0).cos() - b * (PI * t0).sin()) * (-lambda * (t - t0)).exp() + a * (PI * t).cos() + b * (PI * t).sin()
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub config: ProblemConfig,
}

impl CatalogEntry {
    pub fn system(&self) -> IvpSystem {
        self.config.system()
    }

    /// Exact solution at `t` from `(y0, t0)`, when one is known.
    pub fn exact(&self, y0: &[f64], t0: f64, t: f64) -> Option<Vec<f64>> {
        match self.config.problem.system {
            SystemSpec::Linear { lambda } => Some(vec![exact_linear_solution(lambda, y0[0], t0, t)]),
            _ => None,
        }
    }

    pub fn has_exact(&self) -> bool {
        matches!(self.config.problem.system, SystemSpec::Linear { .. })
    }

    pub fn is_stiff(&self) -> bool {
        self.config.problem.stiff
    }
}

/// Reference trajectory on `grid`: the exact solution if `entry` has one,
/// otherwise DP54 at rtol 1e-12 or, for stiff problems, SDIRK2 at 1e-10.
pub fn reference_trajectory(entry: &CatalogEntry, y0: &[f64], grid: &[f64]) -> Result<Trajectory> {
    if entry.has_exact() {
        let states = grid.iter().map(|&t| entry.exact(y0, grid[0], t).unwrap()).collect();
        return Trajectory::new(grid.to_vec(), states);
    }
    reference_for_system(&entry.system(), y0, grid, entry.is_stiff())
}

pub fn reference_for_system(system: &IvpSystem, y0: &[f64], grid: &[f64], stiff: bool) -> Result<Trajectory> {
    if stiff {
        sdirk2_adaptive(system, y0, grid, Tolerances::new(1e-12, 1e-10)?)
    } else {
        dp54_adaptive(system, y0, grid, Tolerances::new(1e-14, 1e-12)?)
    }
}

/// Grid of a fixed-step march over the entry's span.
pub fn default_grid(entry: &CatalogEntry) -> Result<Vec<f64>> {
    let (t0, tf) = entry.config.problem.t_span;
    uniform_grid(t0, tf, entry.config.march.dt.unwrap_or(entry.config.domain.h_max))
}

struct Spec {
    system: SystemSpec,
    y0: Vec<f64>,
    t_span: (f64, f64),
    stiff: bool,
    y0_box: Vec<(f64, f64)>,
    t0: Option<(f64, f64)>,
    h_max: f64,
    sub: SubdomainSection,
    kind: PsiKind,
    m: usize,
    rm: f64,
    delta_m: f64,
    q: usize,
    dt: Option<f64>,
}

fn build(s: Spec) -> ProblemConfig {
    ProblemConfig {
        problem: ProblemSection { system: s.system, y0: s.y0, t_span: s.t_span, stiff: s.stiff },
        domain: DomainSection { y0_box: s.y0_box, t0: s.t0, h_max: s.h_max, xi_sign: XiSign::Forward },
        subdomains: s.sub,
        network: NetworkSection {
            kind: s.kind,
            m: s.m,
            rm: s.rm,
            delta_m: s.delta_m,
            activation: Activation::Gaussian,
            seed: 1,
        },
        training: TrainConfig { q: s.q, seed: 1, ..TrainConfig::default() },
        march: MarchSection { dt: s.dt, quasi_adaptive: s.dt.is_none(), safety: 0.95, periodicity_exploit: None },
    }
}

fn uniform(cuts: Vec<usize>, r: f64) -> SubdomainSection {
    SubdomainSection { uniform: Some(cuts), r, ..SubdomainSection::default() }
}

/// All catalog problems.
pub fn catalog() -> Vec<CatalogEntry> {
    let none = SubdomainSection::default;
    vec![
        CatalogEntry {
            id: "linear",
            description: "dy/dt = -λ(y - cos πt), λ = 100",
            config: build(Spec {
                system: SystemSpec::Linear { lambda: 100.0 },
                y0: vec![0.0],
                t_span: (0.0, 1.0),
                stiff: false,
                y0_box: vec![(-1.1, 1.1)],
                t0: Some((-0.05, 1.05)),
                h_max: 0.03,
                sub: none(),
                kind: PsiKind::ExpS1,
                m: 800,
                rm: 0.5,
                delta_m: 1.0,
                q: 2500,
                dt: Some(0.02),
            }),
        },
        CatalogEntry {
            id: "linear_stiff",
            description: "dy/dt = -λ(y - cos πt), λ = 1e6",
            config: build(Spec {
                system: SystemSpec::Linear { lambda: 1e6 },
                y0: vec![0.0],
                t_span: (0.0, 1.0),
                stiff: true,
                y0_box: vec![(-1.1, 1.1)],
                t0: Some((-0.05, 1.05)),
                h_max: 0.025,
                sub: uniform(vec![1, 2], 0.05),
                kind: PsiKind::ExpS0,
                m: 1000,
                rm: 0.4,
                delta_m: 0.02,
                q: 1000,
                dt: Some(0.02),
            }),
        },
        CatalogEntry {
            id: "free_pendulum",
            description: "y1' = y2, y2' = -α y2 - β sin y1",
            config: build(Spec {
                system: SystemSpec::FreePendulum { alpha: 0.1, beta: 9.8 },
                y0: vec![1.0, -1.0],
                t_span: (0.0, 200.0),
                stiff: false,
                y0_box: vec![(-2.0, 2.0), (-4.0, 4.0)],
                t0: None,
                h_max: 0.25,
                sub: uniform(vec![3, 1], 0.1),
                kind: PsiKind::ExpS1,
                m: 800,
                rm: 0.6,
                delta_m: 1.0,
                q: 1000,
                dt: Some(0.2),
            }),
        },
        CatalogEntry {
            id: "forced_pendulum",
            description: "free pendulum with γ cos πt forcing",
            config: build(Spec {
                system: SystemSpec::ForcedPendulum { alpha: 0.1, beta: 9.8, gamma: 0.2 },
                y0: vec![1.0, -1.0],
                t_span: (0.0, 200.0),
                stiff: false,
                y0_box: vec![(-2.0, 2.0), (-4.0, 4.0)],
                t0: Some((0.0, 2.01)),
                h_max: 0.11,
                sub: uniform(vec![3, 1, 1], 0.1),
                kind: PsiKind::ExpS1,
                m: 1200,
                rm: 0.4,
                delta_m: 5.0,
                q: 2000,
                dt: Some(0.1),
            }),
        },
        CatalogEntry {
            id: "van_der_pol",
            description: "van der Pol oscillator, μ = 5",
            config: build(Spec {
                system: SystemSpec::VanDerPol { mu: 5.0 },
                y0: vec![2.0, 0.0],
                t_span: (0.0, 120.0),
                stiff: false,
                y0_box: vec![(-2.05, 2.05), (-8.0, 8.0)],
                t0: None,
                h_max: 0.035,
                sub: uniform(vec![3, 1], 0.1),
                kind: PsiKind::ExpS1,
                m: 1100,
                rm: 0.5,
                delta_m: 1.0,
                q: 1500,
                dt: Some(0.03),
            }),
        },
        CatalogEntry {
            id: "van_der_pol_stiff",
            description: "van der Pol oscillator, μ = 100, quasi-adaptive steps",
            config: build(Spec {
                system: SystemSpec::VanDerPol { mu: 100.0 },
                y0: vec![2.0, 0.0],
                t_span: (0.0, 300.0),
                stiff: true,
                y0_box: vec![(-2.05, 2.05), (-140.0, 140.0)],
                t0: None,
                h_max: 0.018,
                sub: SubdomainSection {
                    boundaries: Some(vec![
                        vec![-2.05, -2.05 + 4.1 / 3.0, -2.05 + 8.2 / 3.0, 2.05],
                        vec![-140.0, -0.5, -0.03, 0.03, 0.5, 140.0],
                    ]),
                    r_per_axis: Some(vec![0.1, 0.05]),
                    band_h_max: Some(BandHMax { axis: 1, values: vec![0.002, 0.011, 0.018, 0.011, 0.002] }),
                    ..SubdomainSection::default()
                },
                kind: PsiKind::ExpS0,
                m: 800,
                rm: 0.75,
                delta_m: 1.0,
                q: 1400,
                dt: None,
            }),
        },
        CatalogEntry {
            id: "lorenz63",
            description: "Lorenz63, σ = 10, ρ = 28, β = 8/3",
            config: build(Spec {
                system: SystemSpec::Lorenz63 { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 },
                y0: vec![-10.0, -10.0, 25.0],
                t_span: (0.0, 17.0),
                stiff: false,
                y0_box: vec![(-20.0, 20.0), (-25.0, 25.0), (2.0, 46.0)],
                t0: None,
                h_max: 0.012,
                sub: none(),
                kind: PsiKind::ExpS0,
                m: 900,
                rm: 0.12,
                delta_m: 0.2,
                q: 1200,
                dt: Some(0.01),
            }),
        },
        CatalogEntry {
            id: "hindmarsh_rose",
            description: "Hindmarsh-Rose neuron, I = 3.1, α = 0.006",
            config: build(Spec {
                system: SystemSpec::HindmarshRose { current: 3.1, alpha: 0.006 },
                y0: vec![-1.0, -3.5, 3.0],
                t_span: (0.0, 499.8),
                stiff: false,
                y0_box: vec![(-1.5, 1.8), (-8.0, 0.7), (2.7, 3.3)],
                t0: None,
                h_max: 0.065,
                sub: SubdomainSection {
                    boundaries: Some(vec![vec![-1.5, -0.8, 0.0, 0.9, 1.8], vec![-8.0, 0.7], vec![2.7, 3.3]]),
                    ..SubdomainSection::default()
                },
                kind: PsiKind::ExpS1,
                m: 1200,
                rm: 0.39,
                delta_m: 1.0,
                q: 2000,
                dt: Some(0.06),
            }),
        },
        CatalogEntry {
            id: "lorenz96",
            description: "Lorenz96 in 5 dimensions, F = 8",
            config: build(Spec {
                system: SystemSpec::Lorenz96 { forcing: 8.0, dim: 5 },
                y0: vec![-0.99, -1.0, -1.0, -1.0, -1.0],
                t_span: (0.0, 5.0),
                stiff: false,
                y0_box: vec![(-5.0, 10.0); 5],
                t0: None,
                h_max: 0.011,
                sub: uniform(vec![2, 1, 1, 1, 1], 0.0),
                kind: PsiKind::ExpS1,
                m: 800,
                rm: 0.15,
                delta_m: 1.0,
                q: 1500,
                dt: Some(0.01),
            }),
        },
    ]
}

pub fn entry(id: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::Config(format!("unknown problem '{id}'; known: {}", ids().join(", "))))
}

pub fn ids() -> Vec<&'static str> {
    catalog().iter().map(|e| e.id).collect()
}
