use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `σ(x) = exp(−x²)`
    #[default]
    Gaussian,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Gaussian => (-x * x).exp(),
            Activation::Tanh => x.tanh(),
        }
    }

    #[inline]
    pub fn deriv(self, x: f64) -> f64 {
        match self {
            Activation::Gaussian => -2.0 * x * (-x * x).exp(),
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    /// Value and derivative together.
    #[inline]
    pub fn eval_with_deriv(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Gaussian => {
                let e = (-x * x).exp();
                (e, -2.0 * x * e)
            }
            Activation::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Gaussian => "gaussian",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(Activation::Gaussian),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}
