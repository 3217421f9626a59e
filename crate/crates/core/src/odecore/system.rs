use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::catalog_systems as cs;
use crate::error::{Error, Result};
use crate::refsolve::Matrix;

/// Right-hand side `f(y, t)` of `dy/dt = f(y, t)` with its derivatives.
///
/// Implementations write into caller-provided buffers so the hot paths of
/// training and time marching stay allocation free.
pub trait Dynamics: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, y: &[f64], t: f64, out: &mut [f64]);

    /// `∂f/∂y`. Defaults to central differences.
    fn jac_y(&self, y: &[f64], t: f64, out: &mut Matrix) {
        fd_jac_y(self, y, t, out);
    }

    /// `∂f/∂t`. Defaults to central differences.
    fn jac_t(&self, y: &[f64], t: f64, out: &mut [f64]) {
        fd_jac_t(self, y, t, out);
    }
}

fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Central-difference `∂f/∂y` with step `1e-6·max(1,|y_j|)`.
pub fn fd_jac_y<D: Dynamics + ?Sized>(d: &D, y: &[f64], t: f64, out: &mut Matrix) {
    let n = y.len();
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = fd_step(y[j]);
        yp[j] = y[j] + h;
        d.rhs(&yp, t, &mut fp);
        yp[j] = y[j] - h;
        d.rhs(&yp, t, &mut fm);
        yp[j] = y[j];
        for i in 0..n {
            out[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// Central-difference `∂f/∂t`.
pub fn fd_jac_t<D: Dynamics + ?Sized>(d: &D, y: &[f64], t: f64, out: &mut [f64]) {
    let n = y.len();
    let h = fd_step(t);
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    d.rhs(y, t + h, &mut fp);
    d.rhs(y, t - h, &mut fm);
    for i in 0..n {
        out[i] = (fp[i] - fm[i]) / (2.0 * h);
    }
}

/// Serializable description of a built-in system, so that model files can
/// rebuild the dynamics they were trained for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `dy/dt = -λ (y - cos πt)`
    Linear { lambda: f64 },
    /// `y1' = y2, y2' = -α y2 - β sin y1`
    FreePendulum { alpha: f64, beta: f64 },
    /// free pendulum plus `γ cos πt` forcing on `y2'`
    ForcedPendulum { alpha: f64, beta: f64, gamma: f64 },
    VanDerPol { mu: f64 },
    Lorenz63 { sigma: f64, rho: f64, beta: f64 },
    HindmarshRose { current: f64, alpha: f64 },
    /// Cyclic Lorenz96 in `dim` dimensions.
    Lorenz96 { forcing: f64, dim: usize },
    /// `dy/dt = rate · y`
    Exponential { rate: f64 },
    /// `dy/dt = amplitude · cos πt`
    Forcing { amplitude: f64 },
    /// `dy/dt = 0`
    Zero { dim: usize },
}

impl SystemSpec {
    pub fn build(&self) -> IvpSystem {
        use std::f64::consts::TAU;
        match *self {
            SystemSpec::Linear { lambda } => {
                IvpSystem::from_dynamics("linear", cs::Linear { lambda })
                    .non_autonomous()
                    .with_temporal_period(2.0)
                    .with_spec(self.clone())
            }
            SystemSpec::FreePendulum { alpha, beta } => {
                IvpSystem::from_dynamics("free_pendulum", cs::Pendulum { alpha, beta, gamma: 0.0 })
                    .with_periodicity(vec![TAU, 0.0])
                    .with_spec(self.clone())
            }
            SystemSpec::ForcedPendulum { alpha, beta, gamma } => {
                IvpSystem::from_dynamics("forced_pendulum", cs::Pendulum { alpha, beta, gamma })
                    .non_autonomous()
                    .with_temporal_period(2.0)
                    .with_periodicity(vec![TAU, 0.0])
                    .with_spec(self.clone())
            }
            SystemSpec::VanDerPol { mu } => {
                IvpSystem::from_dynamics("van_der_pol", cs::VanDerPol { mu }).with_spec(self.clone())
            }
            SystemSpec::Lorenz63 { sigma, rho, beta } => {
                IvpSystem::from_dynamics("lorenz63", cs::Lorenz63 { sigma, rho, beta })
                    .with_spec(self.clone())
            }
            SystemSpec::HindmarshRose { current, alpha } => {
                IvpSystem::from_dynamics("hindmarsh_rose", cs::HindmarshRose { current, alpha })
                    .with_spec(self.clone())
            }
            SystemSpec::Lorenz96 { forcing, dim } => {
                IvpSystem::from_dynamics("lorenz96", cs::Lorenz96 { forcing, dim }).with_spec(self.clone())
            }
            SystemSpec::Exponential { rate } => {
                IvpSystem::from_dynamics("exponential", cs::Exponential { rate }).with_spec(self.clone())
            }
            SystemSpec::Forcing { amplitude } => {
                IvpSystem::from_dynamics("forcing", cs::Forcing { amplitude })
                    .non_autonomous()
                    .with_temporal_period(2.0)
                    .with_spec(self.clone())
            }
            SystemSpec::Zero { dim } => {
                IvpSystem::from_dynamics("zero", cs::Zero { dim }).with_spec(self.clone())
            }
        }
    }
}

/// An ODE system together with the metadata the learning and marching code
/// relies on. Cheap to clone; the dynamics are shared.
#[derive(Clone)]
pub struct IvpSystem {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    autonomous: bool,
    temporal_period: Option<f64>,
    periodicity: Vec<f64>,
    spec: Option<SystemSpec>,
}

impl fmt::Debug for IvpSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpSystem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("autonomous", &self.autonomous)
            .field("temporal_period", &self.temporal_period)
            .field("periodicity", &self.periodicity)
            .finish()
    }
}

struct ClosureDynamics<F> {
    dim: usize,
    f: F,
}

impl<F> Dynamics for ClosureDynamics<F>
where
    F: Fn(&[f64], f64, &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, y: &[f64], t: f64, out: &mut [f64]) {
        (self.f)(y, t, out)
    }
}

impl IvpSystem {
    /// Wraps a [`Dynamics`] implementation. The system starts out autonomous
    /// with no periodicity; use the builder methods to adjust.
    pub fn from_dynamics(name: impl Into<String>, dynamics: impl Dynamics + 'static) -> Self {
        let n = dynamics.dim();
        IvpSystem {
            name: name.into(),
            dynamics: Arc::new(dynamics),
            autonomous: true,
            temporal_period: None,
            periodicity: vec![0.0; n],
            spec: None,
        }
    }

    /// A user-defined system from a closure. Jacobians fall back to central
    /// finite differences.
    pub fn custom<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self::from_dynamics(name, ClosureDynamics { dim, f })
    }

    pub fn non_autonomous(mut self) -> Self {
        self.autonomous = false;
        self
    }

    pub fn with_autonomous(mut self, autonomous: bool) -> Self {
        self.autonomous = autonomous;
        self
    }

    pub fn with_temporal_period(mut self, period: f64) -> Self {
        assert!(period > 0.0, "temporal period must be positive");
        self.temporal_period = Some(period);
        self
    }

    pub fn with_periodicity(mut self, periods: Vec<f64>) -> Self {
        assert_eq!(periods.len(), self.dim(), "periodicity vector length");
        assert!(periods.iter().all(|&l| l >= 0.0), "periods must be non-negative");
        self.periodicity = periods;
        self
    }

    fn with_spec(mut self, spec: SystemSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn temporal_period(&self) -> Option<f64> {
        self.temporal_period
    }

    /// Per-component periods `L_i` (0 marks a non-periodic component).
    pub fn periodicity(&self) -> &[f64] {
        &self.periodicity
    }

    pub fn has_state_periodicity(&self) -> bool {
        self.periodicity.iter().any(|&l| l > 0.0)
    }

    pub fn spec(&self) -> Option<&SystemSpec> {
        self.spec.as_ref()
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    /// Checked evaluation of `f(y, t)`.
    pub fn eval_rhs(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let mut out = vec![0.0; y.len()];
        self.dynamics.rhs(y, t, &mut out);
        Ok(out)
    }

    pub fn eval_jac_y(&self, y: &[f64], t: f64) -> Result<Matrix> {
        self.check_dim(y)?;
        let mut m = Matrix::zeros(y.len(), y.len());
        self.dynamics.jac_y(y, t, &mut m);
        Ok(m)
    }

    pub fn eval_jac_t(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let mut out = vec![0.0; y.len()];
        self.dynamics.jac_t(y, t, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a buffer.
    #[inline]
    pub fn rhs_into(&self, y: &[f64], t: f64, out: &mut [f64]) {
        self.dynamics.rhs(y, t, out)
    }

    #[inline]
    pub fn jac_y_into(&self, y: &[f64], t: f64, out: &mut Matrix) {
        self.dynamics.jac_y(y, t, out)
    }

    #[inline]
    pub fn jac_t_into(&self, y: &[f64], t: f64, out: &mut [f64]) {
        self.dynamics.jac_t(y, t, out)
    }

    pub(crate) fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{}: state has length {}, system dimension is {}",
                self.name,
                y.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}
