use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odecore::TrainingDomain;

/// Affine input scaling: each `y0` axis (and `t0` when present) onto
/// `[−1, 1]`, and `ξ ↦ ξ/(δm·h_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    lower: Vec<f64>,
    upper: Vec<f64>,
    h_max: f64,
    delta_m: f64,
}

impl Normalizer {
    /// `bounds` lists the `y0` axes followed by the `t0` interval if the
    /// network takes time as an input.
    pub fn new(bounds: &[(f64, f64)], h_max: f64, delta_m: f64) -> Result<Self> {
        if bounds.iter().any(|&(a, b)| !(a < b)) {
            return Err(Error::invalid("normalizer bounds need a < b"));
        }
        if !(h_max > 0.0) || !(delta_m > 0.0) {
            return Err(Error::invalid(format!("need h_max > 0 and delta_m > 0, got {h_max}, {delta_m}")));
        }
        Ok(Normalizer {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            h_max,
            delta_m,
        })
    }

    pub fn for_domain(domain: &TrainingDomain, delta_m: f64) -> Result<Self> {
        let mut b = domain.y0_box().to_vec();
        if let Some(t) = domain.t0_interval() {
            b.push(t);
        }
        Self::new(&b, domain.h_max(), delta_m)
    }

    /// Number of raw inputs including ξ.
    pub fn input_dim(&self) -> usize {
        self.lower.len() + 1
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_m
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn bounds(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lower.iter().copied().zip(self.upper.iter().copied())
    }

    /// `dξ̂/dξ = 1/(δm·h_max)`.
    pub fn xi_scale(&self) -> f64 {
        1.0 / (self.delta_m * self.h_max)
    }

    #[inline]
    pub fn map_axis(&self, k: usize, x: f64) -> f64 {
        let (a, b) = (self.lower[k], self.upper[k]);
        -1.0 + 2.0 * ((x - a) / (b - a))
    }

    #[inline]
    pub fn map_xi(&self, xi: f64) -> f64 {
        xi / (self.delta_m * self.h_max)
    }

    /// Maps raw `(y0, [t0], ξ)` into `out`. Lengths are not checked.
    #[inline]
    pub fn normalize_into(&self, raw: &[f64], out: &mut [f64]) {
        let d = self.lower.len();
        for k in 0..d {
            out[k] = self.map_axis(k, raw[k]);
        }
        out[d] = self.map_xi(raw[d]);
    }

    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "normalizer expects {} inputs, got {}",
                self.input_dim(),
                raw.len()
            )));
        }
        let mut out = vec![0.0; raw.len()];
        self.normalize_into(raw, &mut out);
        Ok(out)
    }

    /// Inverse of [`Normalizer::normalize`].
    pub fn denormalize(&self, xhat: &[f64]) -> Vec<f64> {
        let d = self.lower.len();
        let mut out: Vec<f64> = (0..d)
            .map(|k| self.lower[k] + (xhat[k] + 1.0) * 0.5 * (self.upper[k] - self.lower[k]))
            .collect();
        out.push(xhat[d] * self.delta_m * self.h_max);
        out
    }
}
