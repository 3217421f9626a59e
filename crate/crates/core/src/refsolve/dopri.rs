use super::adaptive::{drive, AdaptiveOptions, EmbeddedStepper, SolverStats, Tolerances};
use crate::error::Result;
use crate::odecore::{IvpSystem, Trajectory};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Dopri<'a> {
    system: &'a IvpSystem,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl EmbeddedStepper for Dopri<'_> {
    const ORDER: f64 = 5.0;

    fn attempt(&mut self, y: &[f64], t: f64, h: f64, y_new: &mut [f64], err: &mut [f64]) -> Result<()> {
        let n = y.len();
        self.system.rhs_into(y, t, &mut self.k[0]);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (done, rest) = self.k.split_at_mut(s);
            let _ = done;
            self.system.rhs_into(&self.tmp, t + C[s] * h, &mut rest[0]);
            if s == 6 {
                y_new.copy_from_slice(&self.tmp);
            }
        }
        for i in 0..n {
            err[i] = h * (0..7).map(|s| E[s] * self.k[s][i]).sum::<f64>();
        }
        Ok(())
    }
}

/// Dormand–Prince 5(4) with PI step control, reporting the state at every
/// time in `grid` (`grid[0]` is the initial time).
pub fn dp54_adaptive(system: &IvpSystem, y0: &[f64], grid: &[f64], tol: Tolerances) -> Result<Trajectory> {
    Ok(dp54_with(system, y0, grid, &AdaptiveOptions::new(tol))?.0)
}

pub fn dp54_with(
    system: &IvpSystem,
    y0: &[f64],
    grid: &[f64],
    opts: &AdaptiveOptions,
) -> Result<(Trajectory, SolverStats)> {
    let n = y0.len();
    let mut st = Dopri { system, k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] };
    drive(system, y0, grid, opts, &mut st)
}

/// Final state of a tight DP54 integration from `(y0, t0)` over a step `xi`
/// (which may be negative).
pub fn dp54_flow(system: &IvpSystem, y0: &[f64], t0: f64, xi: f64, tol: Tolerances) -> Result<Vec<f64>> {
    if xi == 0.0 {
        return Ok(y0.to_vec());
    }
    if xi > 0.0 {
        let tr = dp54_adaptive(system, y0, &[t0, t0 + xi], tol)?;
        return Ok(tr.states()[1].clone());
    }
    // integrate the time-reversed system forward
    let inner = system.clone();
    let rev = IvpSystem::custom("reversed", system.dim(), move |y, s, out| {
        inner.rhs_into(y, -s, out);
        out.iter_mut().for_each(|v| *v = -*v);
    });
    let tr = dp54_adaptive(&rev, y0, &[-t0, -t0 - xi], tol)?;
    Ok(tr.states()[1].clone())
}
