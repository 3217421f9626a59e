//! Residual `r = ∂ψ/∂ξ − f(ψ, t0+ξ)` and its Jacobian in `β` on collocation points.

use rayon::prelude::*;

use super::model::PsiModel;
use crate::error::{Error, Result};
use crate::odecore::IvpSystem;
use crate::randnet::FeatureScratch;
use crate::refsolve::Matrix;

/// `Q` points `(y0, [t0], ξ)`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub(crate) data: Vec<f64>,
    pub(crate) width: usize,
    pub(crate) has_t0: bool,
    pub(crate) seed: u64,
}

impl CollocationSet {
    /// Points given as rows `(y0, [t0], ξ)`.
    pub fn from_points(points: &[Vec<f64>], has_t0: bool, seed: u64) -> Result<Self> {
        let width = points.first().map_or(0, Vec::len);
        if width < 2 || points.iter().any(|p| p.len() != width) {
            return Err(Error::invalid("collocation points need a common length of at least 2"));
        }
        Ok(CollocationSet { data: points.concat(), width, has_t0, seed })
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn has_t0(&self) -> bool {
        self.has_t0
    }

    /// Raw row `(y0, [t0], ξ)`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// `(y0, t0, ξ)` with `t0 = 0` when the set has no time column.
    pub fn split(&self, i: usize) -> (&[f64], f64, f64) {
        let p = self.point(i);
        let n = if self.has_t0 { self.width - 2 } else { self.width - 1 };
        let t0 = if self.has_t0 { p[n] } else { 0.0 };
        (&p[..n], t0, p[self.width - 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width)
    }
}

/// Anything that provides `ψ` and `∂ψ/∂ξ` for a system, so the residual can
/// be evaluated for hand-made flow maps as well as trained models.
pub trait FlowApprox: Sync {
    fn system(&self) -> &IvpSystem;
    fn psi_and_dxi(&self, y0: &[f64], t0: f64, xi: f64) -> Result<(Vec<f64>, Vec<f64>)>;
}

impl FlowApprox for PsiModel {
    fn system(&self) -> &IvpSystem {
        PsiModel::system(self)
    }
    fn psi_and_dxi(&self, y0: &[f64], t0: f64, xi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.psi_with_dxi(y0, t0, xi)
    }
}

/// Residual of any [`FlowApprox`] on `points`.
pub fn flow_residual(approx: &dyn FlowApprox, points: &CollocationSet) -> Result<Vec<f64>> {
    let sys = approx.system();
    let n = sys.dim();
    let mut out = vec![0.0; n * points.len()];
    let mut f = vec![0.0; n];
    for i in 0..points.len() {
        let (y0, t0, xi) = points.split(i);
        let (psi, dpsi) =
            approx.psi_and_dxi(y0, t0, xi).map_err(|e| Error::AtPoint { index: i, source: Box::new(e) })?;
        sys.rhs_into(&psi, t0 + xi, &mut f);
        for c in 0..n {
            out[i * n + c] = dpsi[c] - f[c];
        }
    }
    Ok(out)
}

/// Per-point quantities that do not depend on `β`.
#[derive(Debug, Clone)]
struct PointData {
    phi: Vec<f64>,
    dphi: Vec<f64>,
    f: Vec<f64>,
    df: Vec<f64>,
    t: f64,
    /// `ξ^{s+1}`
    p1: f64,
    /// `(s+1) ξ^s`
    ps: f64,
}

/// Precomputes features and baselines once so that each residual and
/// Jacobian evaluation only needs `f(ψ)` and `∂f/∂ψ`.
pub struct Assembler<'m> {
    model: &'m PsiModel,
    points: Vec<PointData>,
}

impl<'m> Assembler<'m> {
    pub fn new(model: &'m PsiModel, set: &CollocationSet) -> Result<Self> {
        let n = model.dim();
        if set.width != model.subnet().input_dim() || set.has_t0 == model.is_autonomous() {
            return Err(Error::invalid(format!(
                "collocation rows have {} entries, model input expects {}",
                set.width,
                model.subnet().input_dim()
            )));
        }
        let m = model.width();
        let s = model.order();
        let points = (0..set.len())
            .into_par_iter()
            .map_init(FeatureScratch::default, |scratch, i| {
                let (y0, t0, xi) = set.split(i);
                let b = model
                    .baseline(y0, t0, xi, true)
                    .map_err(|e| Error::AtPoint { index: i, source: Box::new(e) })?;
                let mut phi = vec![0.0; m];
                let mut dphi = vec![0.0; m];
                model.subnet().features_into(model.normalizer(), set.point(i), &mut phi, Some(&mut dphi), scratch);
                debug_assert_eq!(b.value.len(), n);
                Ok(PointData {
                    phi,
                    dphi,
                    f: b.value,
                    df: b.dxi.unwrap(),
                    t: t0 + xi,
                    p1: xi.powi(s + 1),
                    ps: (s + 1) as f64 * xi.powi(s),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Assembler { model, points })
    }

    pub fn rows(&self) -> usize {
        self.points.len() * self.model.dim()
    }

    pub fn cols(&self) -> usize {
        self.model.dim() * self.model.width()
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.cols() {
            return Err(Error::invalid(format!("β has {} entries, expected {}", beta.len(), self.cols())));
        }
        Ok(())
    }

    /// `ψ`, `∂ψ/∂ξ` at point `p` for `beta`.
    #[inline]
    fn psi_at(&self, p: &PointData, beta: &[f64], psi: &mut [f64], dpsi: &mut [f64]) {
        let sub = self.model.subnet();
        sub.apply_beta(beta, &p.phi, psi);
        sub.apply_beta(beta, &p.dphi, dpsi);
        for i in 0..psi.len() {
            let v = psi[i];
            psi[i] = p.f[i] + p.p1 * v;
            dpsi[i] = p.df[i] + p.ps * v + p.p1 * dpsi[i];
        }
    }

    pub fn residual(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        let n = self.model.dim();
        let sys = self.model.system();
        let mut out = vec![0.0; self.rows()];
        out.par_chunks_mut(n).zip(self.points.par_iter()).for_each_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(psi, dpsi, f), (r, p)| {
                self.psi_at(p, beta, psi, dpsi);
                sys.rhs_into(psi, p.t, f);
                for i in 0..n {
                    r[i] = dpsi[i] - f[i];
                }
            },
        );
        Ok(out)
    }

    /// Row `(point, i)`, column `(j, k)`:
    /// `δ_ij((s+1)ξ^s φ_k + ξ^{s+1} φ'_k) − ξ^{s+1} J_ij(ψ) φ_k`.
    pub fn jacobian(&self, beta: &[f64]) -> Result<Matrix> {
        self.check_beta(beta)?;
        let n = self.model.dim();
        let m = self.model.width();
        let sys = self.model.system();
        let cols = n * m;
        let mut jac = Matrix::zeros(self.rows(), cols);
        jac.as_mut_slice().par_chunks_mut(n * cols).zip(self.points.par_iter()).for_each_init(
            || (vec![0.0; n], vec![0.0; n], Matrix::zeros(n, n)),
            |(psi, dpsi, jm), (block, p)| {
                self.psi_at(p, beta, psi, dpsi);
                sys.jac_y_into(psi, p.t, jm);
                for i in 0..n {
                    let row = &mut block[i * cols..(i + 1) * cols];
                    for j in 0..n {
                        let c = -p.p1 * jm[(i, j)];
                        let seg = &mut row[j * m..(j + 1) * m];
                        if i == j {
                            for k in 0..m {
                                seg[k] = p.ps * p.phi[k] + p.p1 * p.dphi[k] + c * p.phi[k];
                            }
                        } else {
                            for k in 0..m {
                                seg[k] = c * p.phi[k];
                            }
                        }
                    }
                }
            },
        );
        Ok(jac)
    }
}

/// Residual vector of length `n·Q` for the given `β`.
pub fn assemble_residual(model: &PsiModel, beta: &[f64], points: &CollocationSet) -> Result<Vec<f64>> {
    Assembler::new(model, points)?.residual(beta)
}

/// Jacobian `∂r/∂β` of shape `nQ × nM`.
pub fn assemble_jacobian(model: &PsiModel, beta: &[f64], points: &CollocationSet) -> Result<Matrix> {
    Assembler::new(model, points)?.jacobian(beta)
}
