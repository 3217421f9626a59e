//! Single-point ψ evaluator on flat arrays.
//!
//! The generic path allocates per layer and per call and goes through checked
//! system calls. This evaluator keeps every buffer, folds the affine input
//! normalization into the first-layer weights, stores them column-major so the
//! feature loop vectorizes, and uses a branch-free exponential for the
//! gaussian activation.

use super::activation::Activation;
use super::fastmath::gauss;
use super::subnet::DenseLayer;
use crate::error::Result;
use crate::odecore::IvpSystem;
use crate::psirep::{PsiKind, PsiModel};

#[derive(Debug, Clone)]
pub struct CompiledEvaluator {
    model: PsiModel,
    kind: PsiKind,
    n: usize,
    m: usize,
    m0: usize,
    autonomous: bool,
    simd: Simd,
    /// first layer weights times the normalizer scale, `m0 × rows`
    /// (column-major in the layer's sense); biases absorb the offsets
    w1t: Vec<f64>,
    b1: Vec<f64>,
    deeper: Vec<DenseLayer>,
    beta: Vec<f64>,
    activation: Activation,
    system: IvpSystem,
    input: Vec<f64>,
    z: Vec<f64>,
    z2: Vec<f64>,
    f0: Vec<f64>,
    g: Vec<f64>,
    fm: Vec<f64>,
}

/// Builds the flat evaluator for `model` (current `β`).
pub fn compile_evaluator(model: &PsiModel) -> CompiledEvaluator {
    let sub = model.subnet();
    let nrm = model.normalizer();
    let first = &sub.hidden_layers()[0];
    let (rows, cols) = (first.rows, first.cols);
    // x̂_k = scale_k x_k + offset_k
    let mut scale = vec![0.0; cols];
    let mut offset = vec![0.0; cols];
    for (k, (a, b)) in nrm.bounds().enumerate() {
        scale[k] = 2.0 / (b - a);
        offset[k] = -1.0 - 2.0 * a / (b - a);
    }
    scale[cols - 1] = nrm.xi_scale();
    let mut w1t = vec![0.0; rows * cols];
    let mut b1 = first.biases.clone();
    for j in 0..rows {
        for k in 0..cols {
            let w = first.weights[j * cols + k];
            w1t[k * rows + j] = w * scale[k];
            b1[j] += w * offset[k];
        }
    }
    let n = model.dim();
    let max_width = sub.arch().iter().copied().max().unwrap_or(0);
    CompiledEvaluator {
        model: model.clone(),
        kind: model.kind(),
        n,
        m: sub.width(),
        m0: sub.input_dim(),
        autonomous: model.is_autonomous(),
        simd: detect_simd(),
        w1t,
        b1,
        deeper: sub.hidden_layers()[1..].to_vec(),
        beta: sub.beta().to_vec(),
        activation: sub.activation(),
        system: model.system().clone(),
        input: vec![0.0; cols],
        z: vec![0.0; max_width],
        z2: vec![0.0; max_width],
        f0: vec![0.0; n],
        g: vec![0.0; n],
        fm: vec![0.0; n],
    }
}

#[inline(always)]
fn first_layer_gauss_portable(w1t: &[f64], b1: &[f64], xhat: &[f64], z: &mut [f64]) {
    let m = b1.len();
    let z = &mut z[..m];
    z.copy_from_slice(b1);
    for (k, &x) in xhat.iter().enumerate() {
        let col = &w1t[k * m..(k + 1) * m];
        for j in 0..m {
            z[j] += col[j] * x;
        }
    }
    for v in z.iter_mut() {
        *v = gauss(*v);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four partial sums so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Simd {
    Portable,
    Avx2,
    Avx512,
}

fn detect_simd() -> Simd {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            return Simd::Avx512;
        }
        if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            return Simd::Avx2;
        }
    }
    Simd::Portable
}

impl CompiledEvaluator {
    pub fn model(&self) -> &PsiModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Features of the last hidden layer into `self.z`.
    fn features(&mut self, y: &[f64], t: f64, xi: f64) {
        self.input[..self.n].copy_from_slice(&y[..self.n]);
        if !self.autonomous {
            self.input[self.n] = t;
        }
        self.input[self.m0 - 1] = xi;
        let rows = self.b1.len();
        match self.activation {
            Activation::Gaussian => match self.simd {
                // SAFETY (both arms): the CPU features were detected at construction.
                #[cfg(target_arch = "x86_64")]
                Simd::Avx512 => unsafe {
                    super::fastmath::avx512::gauss_layer(&self.w1t, &self.b1, &self.input, &mut self.z)
                },
                #[cfg(target_arch = "x86_64")]
                Simd::Avx2 => unsafe {
                    super::fastmath::avx2::gauss_layer(&self.w1t, &self.b1, &self.input, &mut self.z)
                },
                _ => first_layer_gauss_portable(&self.w1t, &self.b1, &self.input, &mut self.z),
            },
            Activation::Tanh => {
                let z = &mut self.z[..rows];
                z.copy_from_slice(&self.b1);
                for (k, &x) in self.input.iter().enumerate() {
                    let col = &self.w1t[k * rows..(k + 1) * rows];
                    for j in 0..rows {
                        z[j] += col[j] * x;
                    }
                }
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
        }
        for layer in &self.deeper {
            for j in 0..layer.rows {
                let z = layer.pre_activation(j, &self.z[..layer.cols]);
                self.z2[j] = self.activation.eval(z);
            }
            std::mem::swap(&mut self.z, &mut self.z2);
        }
    }

    /// Network correction `varphi` into `out`.
    pub fn varphi(&mut self, y: &[f64], t: f64, xi: f64, out: &mut [f64]) {
        self.features(y, t, xi);
        let m = self.m;
        for i in 0..self.n {
            let row = &self.beta[i * m..(i + 1) * m];
            let phi = &self.z[..m];
            out[i] = match self.simd {
                // SAFETY (both arms): the CPU features were detected at construction.
                #[cfg(target_arch = "x86_64")]
                Simd::Avx512 => unsafe { super::fastmath::avx512::dot(row, phi) },
                #[cfg(target_arch = "x86_64")]
                Simd::Avx2 => unsafe { super::fastmath::avx2::dot(row, phi) },
                _ => dot(row, phi),
            };
        }
    }

    /// `ψ(y, t, ξ)` into `out`. Explicit baselines are computed in place;
    /// implicit ones fall back to the stage solvers.
    pub fn eval_into(&mut self, y: &[f64], t: f64, xi: f64, out: &mut [f64]) -> Result<()> {
        let n = self.n;
        match self.kind {
            PsiKind::ExpS0 => out[..n].copy_from_slice(y),
            PsiKind::ExpS1 => {
                self.system.rhs_into(y, t, &mut self.f0);
                for i in 0..n {
                    out[i] = y[i] + xi * self.f0[i];
                }
            }
            PsiKind::ExpS2 => {
                self.system.rhs_into(y, t, &mut self.f0);
                for i in 0..n {
                    self.g[i] = y[i] + 0.5 * xi * self.f0[i];
                }
                self.system.rhs_into(&self.g, t + 0.5 * xi, &mut self.fm);
                for i in 0..n {
                    out[i] = y[i] + xi * self.fm[i];
                }
            }
            PsiKind::ImpS1 | PsiKind::ImpS2 => {
                let b = self.model.baseline(y, t, xi, false)?;
                out[..n].copy_from_slice(&b.value);
            }
        }
        let c = xi.powi(self.kind.order() + 1);
        let mut v = std::mem::take(&mut self.fm);
        if v.len() != n {
            v.resize(n, 0.0);
        }
        self.varphi(y, t, xi, &mut v);
        for i in 0..n {
            out[i] += c * v[i];
        }
        self.fm = v;
        Ok(())
    }

    pub fn eval(&mut self, y: &[f64], t: f64, xi: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.eval_into(y, t, xi, &mut out)?;
        Ok(out)
    }
}
