use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of zero the step variable ξ lives on during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum XiSign {
    /// ξ ∈ [0, h_max]
    #[default]
    Forward,
    /// ξ ∈ [−h_max, 0]
    Backward,
}

/// The box of initial data and step sizes a model is trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDomain {
    y0_box: Vec<(f64, f64)>,
    t0_interval: Option<(f64, f64)>,
    h_max: f64,
    xi_sign: XiSign,
}

impl TrainingDomain {
    pub fn new(y0_box: Vec<(f64, f64)>, t0_interval: Option<(f64, f64)>, h_max: f64) -> Result<Self> {
        Self::with_sign(y0_box, t0_interval, h_max, XiSign::Forward)
    }

    pub fn with_sign(
        y0_box: Vec<(f64, f64)>,
        t0_interval: Option<(f64, f64)>,
        h_max: f64,
        xi_sign: XiSign,
    ) -> Result<Self> {
        if y0_box.is_empty() {
            return Err(Error::invalid("y0 box has no axes"));
        }
        for (i, &(a, b)) in y0_box.iter().enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid(format!("y0 box axis {i}: need a < b, got [{a}, {b}]")));
            }
        }
        if let Some((t0, tf)) = t0_interval {
            if !(t0 < tf) || !t0.is_finite() || !tf.is_finite() {
                return Err(Error::invalid(format!("t0 interval: need T0 < Tf, got [{t0}, {tf}]")));
            }
        }
        if !(h_max > 0.0) || !h_max.is_finite() {
            return Err(Error::invalid(format!("h_max must be positive, got {h_max}")));
        }
        Ok(TrainingDomain { y0_box, t0_interval, h_max, xi_sign })
    }

    pub fn dim(&self) -> usize {
        self.y0_box.len()
    }

    pub fn y0_box(&self) -> &[(f64, f64)] {
        &self.y0_box
    }

    pub fn t0_interval(&self) -> Option<(f64, f64)> {
        self.t0_interval
    }

    pub fn is_autonomous(&self) -> bool {
        self.t0_interval.is_none()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn xi_sign(&self) -> XiSign {
        self.xi_sign
    }

    /// `[0, h_max]` or `[−h_max, 0]`.
    pub fn xi_range(&self) -> (f64, f64) {
        match self.xi_sign {
            XiSign::Forward => (0.0, self.h_max),
            XiSign::Backward => (-self.h_max, 0.0),
        }
    }

    /// Input-space box `(y0, [t0], ξ)` used for collocation sampling.
    pub fn sampling_box(&self) -> Vec<(f64, f64)> {
        let mut b = self.y0_box.clone();
        if let Some(t) = self.t0_interval {
            b.push(t);
        }
        b.push(self.xi_range());
        b
    }

    /// True when `(y, t)` lies in the closed `(y0, t0)` box.
    pub fn contains(&self, y: &[f64], t: f64) -> bool {
        y.len() == self.y0_box.len()
            && y.iter().zip(&self.y0_box).all(|(&v, &(a, b))| a <= v && v <= b)
            && self.t0_interval.is_none_or(|(a, b)| a <= t && t <= b)
    }
}
