use super::activation::Activation;
use super::normalizer::Normalizer;
use super::rng::{SeededRng, Stream};
use crate::error::{Error, Result};

/// A frozen dense layer `z = W x + b`, `W` row-major `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
}

impl DenseLayer {
    /// Layer with `rows` outputs and `cols` inputs; `weights` is row-major.
    pub fn from_parts(rows: usize, cols: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols || biases.len() != rows {
            return Err(Error::invalid(format!("layer {rows}x{cols}: got {} weights, {} biases", weights.len(), biases.len())));
        }
        Ok(DenseLayer { rows, cols, weights, biases })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    #[inline]
    pub(crate) fn pre_activation(&self, j: usize, x: &[f64]) -> f64 {
        let row = &self.weights[j * self.cols..(j + 1) * self.cols];
        let mut z = self.biases[j];
        for k in 0..self.cols {
            z += row[k] * x[k];
        }
        z
    }

    #[inline]
    pub(crate) fn directional(&self, j: usize, dx: &[f64]) -> f64 {
        let row = &self.weights[j * self.cols..(j + 1) * self.cols];
        let mut z = 0.0;
        for k in 0..self.cols {
            z += row[k] * dx[k];
        }
        z
    }
}

/// Randomized network: frozen hidden layers plus a trainable linear output
/// `β` (`n × M`, row-major, no bias, no activation).
#[derive(Debug, Clone, PartialEq)]
pub struct SubnetParams {
    pub(crate) arch: Vec<usize>,
    pub(crate) hidden: Vec<DenseLayer>,
    pub(crate) beta: Vec<f64>,
    pub(crate) activation: Activation,
    pub(crate) rm: f64,
    pub(crate) seed: u64,
}

/// Draws hidden weights and biases from `U[−Rm, Rm]`; `β` starts at zero.
pub fn init_subnet(arch: &[usize], rm: f64, seed: u64) -> Result<SubnetParams> {
    init_subnet_with(arch, rm, seed, Activation::Gaussian)
}

pub fn init_subnet_with(arch: &[usize], rm: f64, seed: u64, activation: Activation) -> Result<SubnetParams> {
    if arch.len() < 3 {
        return Err(Error::invalid(format!("architecture needs at least 3 entries, got {arch:?}")));
    }
    if arch.contains(&0) {
        return Err(Error::invalid(format!("architecture has an empty layer: {arch:?}")));
    }
    if !(rm > 0.0) || !rm.is_finite() {
        return Err(Error::invalid(format!("Rm must be positive, got {rm}")));
    }
    let mut rng = SeededRng::new(seed, Stream::HiddenParams);
    let mut hidden = Vec::with_capacity(arch.len() - 2);
    for w in arch[..arch.len() - 1].windows(2) {
        let (cols, rows) = (w[0], w[1]);
        let weights = (0..rows * cols).map(|_| rng.uniform(-rm, rm)).collect();
        let biases = (0..rows).map(|_| rng.uniform(-rm, rm)).collect();
        hidden.push(DenseLayer { rows, cols, weights, biases });
    }
    let n = arch[arch.len() - 1];
    let m = arch[arch.len() - 2];
    Ok(SubnetParams { arch: arch.to_vec(), hidden, beta: vec![0.0; n * m], activation, rm, seed })
}

/// Reusable buffers for the feature pass.
#[derive(Debug, Clone, Default)]
pub struct FeatureScratch {
    xhat: Vec<f64>,
    a: Vec<f64>,
    da: Vec<f64>,
    z_next: Vec<f64>,
    dz_next: Vec<f64>,
}

impl SubnetParams {
    pub fn arch(&self) -> &[usize] {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.arch[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.arch.last().unwrap()
    }

    /// `M`, the width of the last hidden layer.
    pub fn width(&self) -> usize {
        self.arch[self.arch.len() - 2]
    }

    pub fn hidden_layers(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn set_beta(&mut self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.beta.len() {
            return Err(Error::invalid(format!("β has {} entries, expected {}", beta.len(), self.beta.len())));
        }
        self.beta.copy_from_slice(beta);
        Ok(())
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn rm(&self) -> f64 {
        self.rm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Replaces the hidden parameters, e.g. to build hand-made test nets.
    pub fn with_hidden(mut self, hidden: Vec<DenseLayer>) -> Result<Self> {
        if hidden.len() != self.hidden.len()
            || hidden.iter().zip(&self.hidden).any(|(a, b)| {
                a.rows != b.rows || a.cols != b.cols || a.weights.len() != a.rows * a.cols || a.biases.len() != a.rows
            })
        {
            return Err(Error::invalid("hidden layer shapes do not match the architecture"));
        }
        self.hidden = hidden;
        Ok(self)
    }

    pub(crate) fn check_input(&self, nrm: &Normalizer, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() || nrm.input_dim() != self.input_dim() {
            return Err(Error::invalid(format!(
                "network expects {} inputs, got {} (normalizer {})",
                self.input_dim(),
                input.len(),
                nrm.input_dim()
            )));
        }
        Ok(())
    }

    /// Features `φ` and, when `dphi` is given, `∂φ/∂ξ` for a raw input.
    /// The ξ-derivative is propagated in forward mode through every layer.
    pub fn features_into(
        &self,
        nrm: &Normalizer,
        input: &[f64],
        phi: &mut [f64],
        dphi: Option<&mut [f64]>,
        s: &mut FeatureScratch,
    ) {
        let m0 = self.input_dim();
        s.xhat.resize(m0, 0.0);
        nrm.normalize_into(input, &mut s.xhat);
        let act = self.activation;
        let last = self.hidden.len() - 1;
        let xi_k = m0 - 1;
        let scale = nrm.xi_scale();
        match dphi {
            None => {
                s.a.clear();
                s.a.extend_from_slice(&s.xhat);
                for (l, layer) in self.hidden.iter().enumerate() {
                    let out: &mut Vec<f64> = &mut s.z_next;
                    out.resize(layer.rows, 0.0);
                    for j in 0..layer.rows {
                        out[j] = act.eval(layer.pre_activation(j, &s.a));
                    }
                    if l == last {
                        phi.copy_from_slice(out);
                    } else {
                        std::mem::swap(&mut s.a, &mut s.z_next);
                    }
                }
            }
            Some(dphi) => {
                s.a.clear();
                s.a.extend_from_slice(&s.xhat);
                s.da.clear();
                s.da.resize(m0, 0.0);
                s.da[xi_k] = scale;
                for (l, layer) in self.hidden.iter().enumerate() {
                    s.z_next.resize(layer.rows, 0.0);
                    s.dz_next.resize(layer.rows, 0.0);
                    for j in 0..layer.rows {
                        let z = layer.pre_activation(j, &s.a);
                        // first layer: only the ξ column carries a derivative
                        let dz = if l == 0 { layer.weights[j * layer.cols + xi_k] * scale } else { layer.directional(j, &s.da) };
                        let (v, d) = act.eval_with_deriv(z);
                        s.z_next[j] = v;
                        s.dz_next[j] = d * dz;
                    }
                    if l == last {
                        phi.copy_from_slice(&s.z_next);
                        dphi.copy_from_slice(&s.dz_next);
                    } else {
                        std::mem::swap(&mut s.a, &mut s.z_next);
                        std::mem::swap(&mut s.da, &mut s.dz_next);
                    }
                }
            }
        }
    }

    /// `varphi_i = β_i · φ` into `out`.
    #[inline]
    pub fn apply_beta(&self, beta: &[f64], phi: &[f64], out: &mut [f64]) {
        let m = phi.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &beta[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for j in 0..m {
                acc += row[j] * phi[j];
            }
            *o = acc;
        }
    }
}

/// Last-hidden-layer features `φ(y0, t0, ξ)`.
pub fn hidden_features(subnet: &SubnetParams, nrm: &Normalizer, input: &[f64]) -> Result<Vec<f64>> {
    subnet.check_input(nrm, input)?;
    let mut phi = vec![0.0; subnet.width()];
    subnet.features_into(nrm, input, &mut phi, None, &mut FeatureScratch::default());
    Ok(phi)
}

/// `∂φ/∂ξ`, including the normalization factor `1/(δm·h_max)`.
pub fn hidden_features_dxi(subnet: &SubnetParams, nrm: &Normalizer, input: &[f64]) -> Result<Vec<f64>> {
    subnet.check_input(nrm, input)?;
    let m = subnet.width();
    let mut phi = vec![0.0; m];
    let mut dphi = vec![0.0; m];
    subnet.features_into(nrm, input, &mut phi, Some(&mut dphi), &mut FeatureScratch::default());
    Ok(dphi)
}

/// Network output `varphi = β φ`.
pub fn eval_varphi(subnet: &SubnetParams, nrm: &Normalizer, input: &[f64]) -> Result<Vec<f64>> {
    let phi = hidden_features(subnet, nrm, input)?;
    let mut out = vec![0.0; subnet.output_dim()];
    subnet.apply_beta(&subnet.beta, &phi, &mut out);
    Ok(out)
}
