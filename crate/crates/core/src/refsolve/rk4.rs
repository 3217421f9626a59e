use crate::error::{Error, Result};
use crate::odecore::{uniform_grid, IvpSystem, Trajectory};

/// One classical RK4 step, written into `out`.
pub fn rk4_step(system: &IvpSystem, y: &[f64], t: f64, h: f64, out: &mut [f64]) {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    system.rhs_into(y, t, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    system.rhs_into(&tmp, t + 0.5 * h, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    system.rhs_into(&tmp, t + 0.5 * h, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    system.rhs_into(&tmp, t + h, &mut k4);
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Fixed-step RK4 from `t0` to `tf`; the last step is shortened to land on `tf`.
pub fn rk4_fixed(system: &IvpSystem, y0: &[f64], t0: f64, tf: f64, h: f64) -> Result<Trajectory> {
    system.check_dim(y0)?;
    let grid = uniform_grid(t0, tf, h)?;
    let mut traj = Trajectory::start(t0, y0.to_vec());
    let mut y = y0.to_vec();
    let mut next = vec![0.0; y0.len()];
    for (k, w) in grid.windows(2).enumerate() {
        rk4_step(system, &y, w[0], w[1] - w[0], &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure { iteration: k, message: format!("non-finite state at t = {}", w[1]) });
        }
        std::mem::swap(&mut y, &mut next);
        traj.push(w[1], y.clone());
    }
    Ok(traj)
}
