use super::linear::{Lu, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Newton's method for `F(x) = 0` with a halving line search.
///
/// Stops when `‖F(x)‖∞ ≤ tol`. It also stops when the residual has hit its
/// rounding floor: either the Newton correction is below `1e-14·(1+‖x‖∞)`,
/// or a correction below `1e-8·(1+‖x‖∞)` fails to reduce the residual at all.
/// A trial step is halved up to 30 times until the residual norm decreases;
/// if it never does, the smallest trial is taken anyway.
pub fn newton_root<F, J>(mut f: F, mut jac: J, x0: &[f64], tol: f64, max_iter: usize) -> Result<NewtonResult>
where
    F: FnMut(&[f64], &mut [f64]),
    J: FnMut(&[f64], &mut Matrix),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut ft = vec![0.0; n];
    let mut jm = Matrix::zeros(n, n);
    f(&x, &mut fx);
    let mut res = inf_norm(&fx);
    for it in 0..max_iter {
        if !res.is_finite() {
            return Err(Error::NewtonFailure { iterations: it, residual: res });
        }
        if res <= tol {
            return Ok(NewtonResult { x, iterations: it, residual: res });
        }
        jac(&x, &mut jm);
        let neg: Vec<f64> = fx.iter().map(|v| -v).collect();
        let dx = Lu::factor(&jm)?.solve(&neg);
        let dx_norm = inf_norm(&dx);
        let x_norm = inf_norm(&x);
        let small = dx_norm <= 1e-14 * (1.0 + x_norm);
        let mut alpha = 1.0;
        let mut tres = f64::INFINITY;
        for _ in 0..30 {
            for i in 0..n {
                trial[i] = x[i] + alpha * dx[i];
            }
            f(&trial, &mut ft);
            tres = inf_norm(&ft);
            if tres < res {
                break;
            }
            if alpha == 1.0 && dx_norm <= 1e-8 * (1.0 + x_norm) {
                return Ok(NewtonResult { x, iterations: it + 1, residual: res });
            }
            alpha *= 0.5;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut fx, &mut ft);
        res = tres;
        if small && res.is_finite() {
            return Ok(NewtonResult { x, iterations: it + 1, residual: res });
        }
    }
    if res <= tol {
        return Ok(NewtonResult { x, iterations: max_iter, residual: res });
    }
    Err(Error::NewtonFailure { iterations: max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_four() {
        let r = newton_root(
            |x, o| o[0] = x[0] * x[0] - 4.0,
            |x, j| j[(0, 0)] = 2.0 * x[0],
            &[3.0],
            1e-12,
            50,
        )
        .unwrap();
        assert!((r.x[0] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn linear_in_one_iteration() {
        let r = newton_root(
            |x, o| {
                o[0] = 2.0 * x[0] + x[1] - 3.0;
                o[1] = x[0] - x[1];
            },
            |_, j| {
                j[(0, 0)] = 2.0;
                j[(0, 1)] = 1.0;
                j[(1, 0)] = 1.0;
                j[(1, 1)] = -1.0;
            },
            &[10.0, -4.0],
            1e-12,
            50,
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.x[0] - 1.0).abs() < 1e-14 && (r.x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_stage_equation_closed_form() {
        // K = f(y0 + ξK, t0 + ξ) for f = -λ(y - cos πt), y0 = 0, t0 = 0
        let (lam, xi) = (100.0, 0.02);
        let c = (std::f64::consts::PI * xi).cos();
        let r = newton_root(
            |k, o| o[0] = k[0] + lam * (xi * k[0] - c),
            |_, j| j[(0, 0)] = 1.0 + lam * xi,
            &[lam],
            1e-12,
            50,
        )
        .unwrap();
        let closed = lam * c / (1.0 + lam * xi);
        assert!((r.x[0] - closed).abs() < 1e-12);
        assert!((r.x[0] - 33.26756).abs() < 1e-5);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let e = newton_root(|x, o| o[0] = x[0] * x[0] + 1.0, |_, j| j[(0, 0)] = 0.0, &[0.0], 1e-12, 5);
        assert!(matches!(e, Err(Error::LinearSolverFailure(_))));
    }

    #[test]
    fn no_root_exhausts_iterations() {
        let e = newton_root(|x, o| o[0] = x[0] * x[0] + 1.0, |x, j| j[(0, 0)] = 2.0 * x[0], &[1.0], 1e-12, 10);
        assert!(matches!(e, Err(Error::NewtonFailure { .. }) | Err(Error::LinearSolverFailure(_))));
    }
}
