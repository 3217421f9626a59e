//! Right-hand sides of the built-in benchmark systems, with analytic Jacobians.

use std::f64::consts::PI;

use super::system::Dynamics;
use crate::refsolve::Matrix;

pub(crate) struct Linear {
    pub lambda: f64,
}

impl Dynamics for Linear {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, y: &[f64], t: f64, out: &mut [f64]) {
        out[0] = -self.lambda * (y[0] - (PI * t).cos());
    }
    fn jac_y(&self, _y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = -self.lambda;
    }
    fn jac_t(&self, _y: &[f64], t: f64, out: &mut [f64]) {
        out[0] = -self.lambda * PI * (PI * t).sin();
    }
}

/// Damped pendulum, optionally forced by `γ cos πt`.
pub(crate) struct Pendulum {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Dynamics for Pendulum {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, y: &[f64], t: f64, out: &mut [f64]) {
        out[0] = y[1];
        out[1] = -self.alpha * y[1] - self.beta * y[0].sin();
        if self.gamma != 0.0 {
            out[1] += self.gamma * (PI * t).cos();
        }
    }
    fn jac_y(&self, y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = 0.0;
        out[(0, 1)] = 1.0;
        out[(1, 0)] = -self.beta * y[0].cos();
        out[(1, 1)] = -self.alpha;
    }
    fn jac_t(&self, _y: &[f64], t: f64, out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = -self.gamma * PI * (PI * t).sin();
    }
}

pub(crate) struct VanDerPol {
    pub mu: f64,
}

impl Dynamics for VanDerPol {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, y: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = y[1];
        out[1] = self.mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    }
    fn jac_y(&self, y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = 0.0;
        out[(0, 1)] = 1.0;
        out[(1, 0)] = -2.0 * self.mu * y[0] * y[1] - 1.0;
        out[(1, 1)] = self.mu * (1.0 - y[0] * y[0]);
    }
    fn jac_t(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

pub(crate) struct Lorenz63 {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Dynamics for Lorenz63 {
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, y: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.sigma * (y[1] - y[0]);
        out[1] = y[0] * (self.rho - y[2]) - y[1];
        out[2] = y[0] * y[1] - self.beta * y[2];
    }
    fn jac_y(&self, y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = -self.sigma;
        out[(0, 1)] = self.sigma;
        out[(0, 2)] = 0.0;
        out[(1, 0)] = self.rho - y[2];
        out[(1, 1)] = -1.0;
        out[(1, 2)] = -y[0];
        out[(2, 0)] = y[1];
        out[(2, 1)] = y[0];
        out[(2, 2)] = -self.beta;
    }
    fn jac_t(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

pub(crate) struct HindmarshRose {
    pub current: f64,
    pub alpha: f64,
}

impl Dynamics for HindmarshRose {
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, y: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = y[1] - y[0].powi(3) + 3.0 * y[0] - y[2] + self.current;
        out[1] = 1.0 - 5.0 * y[0] * y[0] - y[1];
        out[2] = 4.0 * self.alpha * (y[0] + 1.6) - self.alpha * y[2];
    }
    fn jac_y(&self, y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = -3.0 * y[0] * y[0] + 3.0;
        out[(0, 1)] = 1.0;
        out[(0, 2)] = -1.0;
        out[(1, 0)] = -10.0 * y[0];
        out[(1, 1)] = -1.0;
        out[(1, 2)] = 0.0;
        out[(2, 0)] = 4.0 * self.alpha;
        out[(2, 1)] = 0.0;
        out[(2, 2)] = -self.alpha;
    }
    fn jac_t(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `dy_i/dt = (y_{i+1} - y_{i-2}) y_{i-1} - y_i + F` with cyclic indices.
pub(crate) struct Lorenz96 {
    pub forcing: f64,
    pub dim: usize,
}

impl Dynamics for Lorenz96 {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, y: &[f64], _t: f64, out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let ip1 = (i + 1) % n;
            let im1 = (i + n - 1) % n;
            let im2 = (i + n - 2) % n;
            out[i] = (y[ip1] - y[im2]) * y[im1] - y[i] + self.forcing;
        }
    }
    fn jac_y(&self, y: &[f64], _t: f64, out: &mut Matrix) {
        let n = self.dim;
        out.fill(0.0);
        for i in 0..n {
            let ip1 = (i + 1) % n;
            let im1 = (i + n - 1) % n;
            let im2 = (i + n - 2) % n;
            out[(i, ip1)] += y[im1];
            out[(i, im2)] -= y[im1];
            out[(i, im1)] += y[ip1] - y[im2];
            out[(i, i)] -= 1.0;
        }
    }
    fn jac_t(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

pub(crate) struct Exponential {
    pub rate: f64,
}

impl Dynamics for Exponential {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, y: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.rate * y[0];
    }
    fn jac_y(&self, _y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = self.rate;
    }
    fn jac_t(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
}

/// State-independent forcing `a cos πt`.
pub(crate) struct Forcing {
    pub amplitude: f64,
}

impl Dynamics for Forcing {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, _y: &[f64], t: f64, out: &mut [f64]) {
        out[0] = self.amplitude * (PI * t).cos();
    }
    fn jac_y(&self, _y: &[f64], _t: f64, out: &mut Matrix) {
        out[(0, 0)] = 0.0;
    }
    fn jac_t(&self, _y: &[f64], t: f64, out: &mut [f64]) {
        out[0] = -self.amplitude * PI * (PI * t).sin();
    }
}

pub(crate) struct Zero {
    pub dim: usize,
}

impl Dynamics for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn jac_y(&self, _y: &[f64], _t: f64, out: &mut Matrix) {
        out.fill(0.0);
    }
    fn jac_t(&self, _y: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}
