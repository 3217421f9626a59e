use std::f64::consts::PI;

use elmflow::odecore::{uniform_grid, IvpSystem, SystemSpec, Trajectory};
use elmflow::refsolve::*;
use elmflow::Error;

/// Steady periodic response `a cos πt + b sin πt` from matching coefficients in
/// `y' = −λ(y − cos πt)`, plus the decaying homogeneous part.
fn linear_oracle(lam: f64, y0: f64, t0: f64, t: f64) -> f64 {
    // πb = −λa + λ, −πa = −λb  →  solve the 2×2 system by Cramer's rule
    let det = lam * lam + PI * PI;
    let a = lam * lam / det;
    let b = lam * PI / det;
    let part = |s: f64| a * (PI * s).cos() + b * (PI * s).sin();
    (y0 - part(t0)) * (-lam * (t - t0)).exp() + part(t)
}

fn max_err(tr: &Trajectory, f: impl Fn(f64) -> f64) -> f64 {
    tr.times().iter().zip(tr.states()).map(|(&t, y)| (y[0] - f(t)).abs()).fold(0.0, f64::max)
}

#[test]
fn dp54_matches_linear_exact_solution() {
    let sys = SystemSpec::Linear { lambda: 100.0 }.build();
    let grid = uniform_grid(0.0, 1.0, 0.02).unwrap();
    let tr = dp54_adaptive(&sys, &[0.0], &grid, Tolerances::uniform(1e-12).unwrap()).unwrap();
    assert_eq!(tr.times(), grid.as_slice());
    assert!(max_err(&tr, |t| linear_oracle(100.0, 0.0, 0.0, t)) <= 1e-9);
}

#[test]
fn dp54_zero_dynamics_one_step_per_interval() {
    let sys = SystemSpec::Zero { dim: 2 }.build();
    let grid = uniform_grid(0.0, 1.0, 0.1).unwrap();
    let (tr, stats) = dp54_with(&sys, &[1.0, 2.0], &grid, &AdaptiveOptions::new(Tolerances::uniform(1e-10).unwrap()))
        .unwrap();
    assert!(tr.states().iter().all(|y| y == &vec![1.0, 2.0]));
    assert_eq!(stats.accepted, grid.len() - 1);
    assert_eq!(stats.rejected, 0);
}

#[test]
fn dp54_tightening_does_not_increase_error() {
    for spec in [SystemSpec::Linear { lambda: 100.0 }, SystemSpec::Exponential { rate: -1.5 }] {
        let sys = spec.build();
        let grid = uniform_grid(0.0, 1.0, 0.05).unwrap();
        let exact = |t: f64| match spec {
            SystemSpec::Linear { lambda } => linear_oracle(lambda, 1.0, 0.0, t),
            _ => (-1.5 * t).exp(),
        };
        let mut prev = f64::INFINITY;
        for k in 3..10 {
            let tol = Tolerances::uniform(10f64.powi(-k)).unwrap();
            let e = max_err(&dp54_adaptive(&sys, &[1.0], &grid, tol).unwrap(), exact);
            assert!(e <= prev * 1.0001, "rtol 1e-{k}: {e} > {prev}");
            prev = e;
        }
    }
}

#[test]
fn dp54_gives_up_on_very_stiff_problem() {
    let sys = SystemSpec::Linear { lambda: 1e6 }.build();
    let grid = uniform_grid(0.0, 1.0, 0.02).unwrap();
    let r = dp54_adaptive(&sys, &[0.0], &grid, Tolerances::uniform(1e-10).unwrap());
    assert!(matches!(r, Err(Error::StiffnessFailure { .. })), "{r:?}");
}

#[test]
fn dp54_local_order_about_five() {
    // single fixed step with a huge tolerance-independent initial step
    let sys = SystemSpec::Linear { lambda: 2.0 }.build();
    let exact = |h: f64| linear_oracle(2.0, 0.3, 0.0, h);
    let errs: Vec<f64> = (0..5)
        .map(|k| {
            let h = 0.2 / 2f64.powi(k);
            let mut o = AdaptiveOptions::new(Tolerances::uniform(1.0).unwrap());
            o.h_init = Some(h);
            let (tr, _) = dp54_with(&sys, &[0.3], &[0.0, h], &o).unwrap();
            (tr.states()[1][0] - exact(h)).abs()
        })
        .collect();
    let slope = (errs[0] / errs[4]).log2() / 4.0;
    assert!((slope - 6.0).abs() <= 0.5 || (slope - 5.0).abs() <= 0.5, "local slope {slope}");
}

#[test]
fn rk4_order_four() {
    let sys = SystemSpec::Linear { lambda: 10.0 }.build();
    let errs: Vec<f64> = (0..5)
        .map(|k| {
            let h = 0.05 / 2f64.powi(k);
            let tr = rk4_fixed(&sys, &[0.0], 0.0, 1.0, h).unwrap();
            max_err(&tr, |t| linear_oracle(10.0, 0.0, 0.0, t))
        })
        .collect();
    let slope = (errs[0] / errs[4]).log2() / 4.0;
    assert!((slope - 4.0).abs() <= 0.3, "slope {slope}");
    let ratio = errs[1] / errs[2];
    assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
}

#[test]
fn sdirk2_order_two() {
    let sys = SystemSpec::Linear { lambda: 10.0 }.build();
    let exact = linear_oracle(10.0, 0.0, 0.0, 1.0);
    let errs: Vec<f64> = (0..5)
        .map(|k| {
            let steps = 20usize << k;
            let h = 1.0 / steps as f64;
            let mut y = vec![0.0];
            for s in 0..steps {
                y = sdirk2_step(&sys, &y, s as f64 * h, h).unwrap();
            }
            (y[0] - exact).abs()
        })
        .collect();
    let slope = (errs[0] / errs[4]).log2() / 4.0;
    assert!((slope - 2.0).abs() <= 0.3, "slope {slope}");
}

#[test]
fn sdirk2_stiff_linear_matches_exact() {
    let sys = SystemSpec::Linear { lambda: 1e6 }.build();
    let grid = uniform_grid(0.0, 1.0, 0.02).unwrap();
    let tr = sdirk2_adaptive(&sys, &[0.0], &grid, Tolerances::uniform(1e-10).unwrap()).unwrap();
    assert!(max_err(&tr, |t| linear_oracle(1e6, 0.0, 0.0, t)) <= 1e-7);
}

#[test]
fn sdirk2_is_a_stable() {
    let lam = 1.0;
    let sys = SystemSpec::Exponential { rate: -lam }.build();
    for k in -40..=80 {
        let h = 10f64.powf(k as f64 / 10.0);
        let y1 = sdirk2_step(&sys, &[1.0], 0.0, h).unwrap()[0];
        assert!(y1.abs() <= 1.0 + 1e-12, "λh = {h}: |R| = {}", y1.abs());
    }
}

#[test]
fn sdirk2_zero_dynamics_exact() {
    let sys = SystemSpec::Zero { dim: 3 }.build();
    let grid = uniform_grid(0.0, 2.0, 0.5).unwrap();
    let tr = sdirk2_adaptive(&sys, &[1.0, -1.0, 0.5], &grid, Tolerances::uniform(1e-8).unwrap()).unwrap();
    assert!(tr.states().iter().all(|y| y == &vec![1.0, -1.0, 0.5]));
}

#[test]
fn solvers_agree_on_pendulum() {
    let sys = SystemSpec::FreePendulum { alpha: 0.1, beta: 9.8 }.build();
    let grid = uniform_grid(0.0, 2.0, 0.2).unwrap();
    let a = dp54_adaptive(&sys, &[1.0, -1.0], &grid, Tolerances::uniform(1e-12).unwrap()).unwrap();
    let b = rk4_fixed(&sys, &[1.0, -1.0], 0.0, 2.0, 0.2 / 64.0).unwrap();
    let b_on_grid: Vec<&Vec<f64>> = b.states().iter().step_by(64).collect();
    for (x, y) in a.states().iter().zip(b_on_grid) {
        for i in 0..2 {
            assert!((x[i] - y[i]).abs() < 1e-7);
        }
    }
}

#[test]
fn flow_backward_inverts_forward() {
    let sys = SystemSpec::ForcedPendulum { alpha: 0.1, beta: 9.8, gamma: 0.2 }.build();
    let tol = Tolerances::uniform(1e-13).unwrap();
    let y1 = dp54_flow(&sys, &[0.5, 0.2], 0.3, 0.1, tol).unwrap();
    let y0 = dp54_flow(&sys, &y1, 0.4, -0.1, tol).unwrap();
    assert!((y0[0] - 0.5).abs() < 1e-11 && (y0[1] - 0.2).abs() < 1e-11);
}

#[test]
fn reference_solvers_reproduce_exact_within_ten_rtol() {
    let sys = SystemSpec::Linear { lambda: 100.0 }.build();
    let grid = uniform_grid(0.0, 1.0, 0.02).unwrap();
    let rtol = 1e-8;
    let tol = Tolerances::uniform(rtol).unwrap();
    let exact = |t| linear_oracle(100.0, 0.0, 0.0, t);
    assert!(max_err(&dp54_adaptive(&sys, &[0.0], &grid, tol).unwrap(), exact) <= 10.0 * rtol);
    assert!(max_err(&sdirk2_adaptive(&sys, &[0.0], &grid, tol).unwrap(), exact) <= 10.0 * rtol);
}

#[test]
fn custom_system_integrates() {
    let sys = IvpSystem::custom("decay", 1, |y, _, o| o[0] = -y[0]);
    let tr = dp54_adaptive(&sys, &[1.0], &[0.0, 1.0], Tolerances::uniform(1e-12).unwrap()).unwrap();
    assert!((tr.states()[1][0] - (-1f64).exp()).abs() < 1e-10);
}
