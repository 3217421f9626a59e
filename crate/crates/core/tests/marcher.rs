use std::f64::consts::{PI, TAU};

use elmflow::decomp::{build_partition, enlarge, DecomposedModel, Partition};
use elmflow::marcher::*;
use elmflow::odecore::{SystemSpec, TrainingDomain, XiSign};
use elmflow::psirep::{eval_psi, NetConfig, PsiKind, PsiModel};
use elmflow::Error;

fn pendulum(kind: PsiKind, m: usize) -> PsiModel {
    let sys = SystemSpec::FreePendulum { alpha: 0.1, beta: 9.8 }.build();
    let dom = TrainingDomain::new(vec![(-2.0, 2.0), (-4.0, 4.0)], None, 0.25).unwrap();
    PsiModel::new(sys, dom, kind, &NetConfig::single(m, 0.6, 4)).unwrap()
}

fn forced(kind: PsiKind) -> PsiModel {
    let sys = SystemSpec::ForcedPendulum { alpha: 0.1, beta: 9.8, gamma: 0.2 }.build();
    let dom = TrainingDomain::new(vec![(-2.0, 2.0), (-4.0, 4.0)], Some((0.0, 2.01)), 0.11).unwrap();
    PsiModel::new(sys, dom, kind, &NetConfig::single(30, 0.4, 4)).unwrap()
}

fn randomize(model: &mut PsiModel, scale: f64) {
    let mut s = 7u64;
    let beta: Vec<f64> = (0..model.beta().len())
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            scale * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    model.set_beta(&beta).unwrap();
}

fn euler(model: &PsiModel, y: &[f64], t: f64, h: f64) -> Vec<f64> {
    let f = model.system().eval_rhs(y, t).unwrap();
    y.iter().zip(&f).map(|(y, f)| y + h * f).collect()
}

#[test]
fn zero_dynamics_steps_are_identity() {
    let sys = SystemSpec::Zero { dim: 2 }.build();
    let dom = TrainingDomain::new(vec![(-1.0, 1.0), (-1.0, 1.0)], None, 0.1).unwrap();
    for kind in [PsiKind::ExpS0, PsiKind::ExpS1, PsiKind::ExpS2] {
        let m = PsiModel::new(sys.clone(), dom.clone(), kind, &NetConfig::single(8, 0.5, 1)).unwrap();
        assert_eq!(step(&m, &[0.3, -0.2], 0.0, 0.07).unwrap(), vec![0.3, -0.2]);
    }
}

#[test]
fn zero_correction_exp_s1_is_forward_euler() {
    let m = pendulum(PsiKind::ExpS1, 10);
    let y = [1.0, -1.0];
    assert_eq!(step(&m, &y, 0.0, 0.2).unwrap(), euler(&m, &y, 0.0, 0.2));
}

#[test]
fn step_equals_psi_evaluation() {
    for kind in PsiKind::ALL {
        let mut m = forced(kind);
        randomize(&mut m, 2.0);
        for &(y1, y2, t, h) in &[(0.3, -1.0, 0.4, 0.1), (-1.7, 3.2, 1.9, 0.01), (1.0, 0.0, 0.0, 0.11)] {
            let a = step(&m, &[y1, y2], t, h).unwrap();
            let b = eval_psi(&m, &[y1, y2], t, h).unwrap();
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() <= 1e-12 * (1.0 + b[i].abs()), "{kind:?}: {a:?} vs {b:?}");
            }
        }
    }
}

#[test]
fn step_rejects_bad_sizes_and_points() {
    let m = pendulum(PsiKind::ExpS1, 10);
    assert!(matches!(step(&m, &[0.0, 0.0], 0.0, 0.3), Err(Error::InvalidArgument(_))));
    assert!(matches!(step(&m, &[0.0, 0.0], 0.0, 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(step(&m, &[2.5, 0.0], 0.0, 0.1), Err(Error::OutOfDomain { .. })));
}

#[test]
fn wrap_arithmetic() {
    assert!((wrap_time(5.3, 0.0, 2.0) - 1.3).abs() < 1e-14);
    assert_eq!(wrap_time(1.3, 0.0, 2.0), 1.3);
    assert!((wrap_time(-0.5, 0.0, 2.0) - 1.5).abs() < 1e-15);
    // window [0, 2π)
    let (w, q) = wrap_state(7.0, TAU, PI);
    assert!((w - 0.7168147).abs() < 1e-7 && q == 1.0);
    // window [−π, π)
    let (w, q) = wrap_state(7.0, TAU, 0.0);
    assert!((w - (7.0 - TAU)).abs() < 1e-15 && q == 1.0);
    let (w, q) = wrap_state(-4.0, TAU, 0.0);
    assert!((w - (TAU - 4.0)).abs() < 1e-15 && q == -1.0);
    assert_eq!(wrap_state(1.0, TAU, 0.0), (1.0, 0.0));
    // y = y* + qL on a sweep, y* in the window
    for k in -200..200 {
        let y = 0.173 * k as f64;
        let (w, q) = wrap_state(y, TAU, 0.0);
        assert!((-PI..PI).contains(&w));
        assert!((w + q * TAU - y).abs() < 1e-13);
    }
}

#[test]
fn periodic_step_inside_window_is_plain_step() {
    let mut m = forced(PsiKind::ExpS2);
    randomize(&mut m, 1.0);
    let a = step(&m, &[0.5, 1.0], 1.2, 0.1).unwrap();
    let b = step_periodic(&m, &[0.5, 1.0], 1.2, 0.1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn periodic_step_matches_unwrapped_euler() {
    // f is 2π-periodic in y1, so Euler from the raw state agrees with Euler
    // from the wrapped one shifted back
    let m = pendulum(PsiKind::ExpS1, 10);
    let y = [7.0, 0.3];
    let a = step_periodic(&m, &y, 0.0, 0.2).unwrap();
    let b = euler(&m, &y, 0.0, 0.2);
    for i in 0..2 {
        assert!((a[i] - b[i]).abs() < 1e-13, "{a:?} vs {b:?}");
    }
    assert!(matches!(step(&m, &y, 0.0, 0.2), Err(Error::OutOfDomain { .. })));

    let f = forced(PsiKind::ExpS1);
    let a = step_periodic(&f, &[0.5, 1.0], 5.3, 0.1).unwrap();
    let b = euler(&f, &[0.5, 1.0], 5.3, 0.1);
    for i in 0..2 {
        assert!((a[i] - b[i]).abs() < 1e-13, "{a:?} vs {b:?}");
    }
    assert!(matches!(step(&f, &[0.5, 1.0], 5.3, 0.1), Err(Error::OutOfDomain { .. })));
}

#[test]
fn periodic_step_without_metadata_fails() {
    let sys = SystemSpec::Lorenz63 { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }.build();
    let dom = TrainingDomain::new(vec![(-20.0, 20.0), (-25.0, 25.0), (2.0, 46.0)], None, 0.012).unwrap();
    let m = PsiModel::new(sys, dom, PsiKind::ExpS0, &NetConfig::single(10, 0.12, 1)).unwrap();
    assert!(matches!(step_periodic(&m, &[1.0, 1.0, 20.0], 0.0, 0.01), Err(Error::MetadataAbsent(_))));
}

#[test]
fn backward_trained_zero_correction_is_backward_euler() {
    let lambda = 100.0;
    let sys = SystemSpec::Linear { lambda }.build();
    let dom = TrainingDomain::with_sign(vec![(-1.1, 1.1)], Some((-0.05, 1.05)), 0.03, XiSign::Backward).unwrap();
    let m = PsiModel::new(sys, dom, PsiKind::ExpS1, &NetConfig::single(10, 0.5, 1)).unwrap();
    let (y, t, h) = (0.2, 0.3, 0.02);
    let got = step(&m, &[y], t, h).unwrap()[0];
    let oracle = (y + h * lambda * (PI * (t + h)).cos()) / (1.0 + h * lambda);
    assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
}

#[test]
fn march_counts_and_degenerate_span() {
    let m = DecomposedModel::single(pendulum(PsiKind::ExpS1, 10));
    let tr = march(&m, &[1.0, -1.0], &MarchConfig::fixed(0.0, 0.0, 0.2)).unwrap();
    assert_eq!(tr.len(), 1);
    let sys = SystemSpec::Linear { lambda: 100.0 }.build();
    let dom = TrainingDomain::new(vec![(-1.1, 1.1)], Some((-0.05, 1.05)), 0.03).unwrap();
    let lin = PsiModel::new(sys, dom, PsiKind::ExpS0, &NetConfig::single(10, 0.5, 1)).unwrap();
    let tr = march(&DecomposedModel::single(lin), &[0.0], &MarchConfig::fixed(0.0, 1.0, 0.02)).unwrap();
    assert_eq!(tr.len(), 51);
    assert_eq!(*tr.times().last().unwrap(), 1.0);
}

#[test]
fn march_matches_repeated_euler_and_clamps_final_step() {
    let m = pendulum(PsiKind::ExpS1, 10);
    let d = DecomposedModel::single(m.clone());
    let tr = march(&d, &[1.0, -1.0], &MarchConfig::fixed(0.0, 1.0, 0.15).with_periodicity(false)).unwrap();
    assert_eq!(tr.len(), 8);
    let mut y = vec![1.0, -1.0];
    for (k, w) in tr.times().windows(2).enumerate() {
        y = euler(&m, &y, w[0], w[1] - w[0]);
        assert_eq!(tr.states()[k + 1], y);
    }
    assert!((tr.times()[7] - tr.times()[6] - 0.1).abs() < 1e-12);
}

#[test]
fn march_errors_carry_step_index() {
    let d = DecomposedModel::single(pendulum(PsiKind::ExpS1, 10));
    let err = march(&d, &[1.9, 4.0], &MarchConfig::fixed(0.0, 2.0, 0.2).with_periodicity(false)).unwrap_err();
    match err {
        Error::AtStep { step, source, .. } => {
            assert!(step >= 1);
            assert!(matches!(*source, Error::OutOfDomain { .. }));
        }
        e => panic!("unexpected {e:?}"),
    }
    assert!(matches!(march(&d, &[0.0, 0.0], &MarchConfig::fixed(0.0, 1.0, 0.3)), Err(Error::InvalidArgument(_))));
}

fn vdp_banded() -> DecomposedModel {
    let sys = SystemSpec::VanDerPol { mu: 100.0 }.build();
    let dom = TrainingDomain::new(vec![(-3.0, 3.0), (-140.0, 140.0)], None, 0.018).unwrap();
    let part = build_partition(&dom, vec![vec![-3.0, 3.0], vec![-140.0, -0.5, -0.03, 0.03, 0.5, 140.0]])
        .unwrap()
        .with_band_h_max(1, &[0.002, 0.011, 0.018, 0.011, 0.002])
        .unwrap();
    models_for(&part, &sys)
}

fn models_for(part: &Partition, sys: &elmflow::odecore::IvpSystem) -> DecomposedModel {
    let models = part
        .subdomains()
        .iter()
        .map(|s| PsiModel::new(sys.clone(), enlarge(s).unwrap(), PsiKind::ExpS1, &NetConfig::single(8, 0.5, 2)).unwrap())
        .collect();
    DecomposedModel::new(part.clone(), models).unwrap()
}

#[test]
fn quasi_adaptive_band_step() {
    let d = vdp_banded();
    let (_, log) = march_quasi_adaptive(&d, &[2.0, 0.01], 0.0, 0.03, 0.95).unwrap();
    assert!(log.len() >= 2);
    assert_eq!(log[0].subdomain, 2);
    assert_eq!(log[0].h, 0.95 * 0.018);
    assert!((log[0].h - 0.0171).abs() < 1e-15);
}

#[test]
fn quasi_adaptive_single_domain_constant_step() {
    let d = DecomposedModel::single(pendulum(PsiKind::ExpS1, 10));
    let (tr, log) = march_quasi_adaptive(&d, &[0.3, 0.0], 0.0, 1.0, 0.95).unwrap();
    let (last, body) = log.split_last().unwrap();
    assert!(body.iter().all(|r| r.h == 0.95 * 0.25));
    assert!(last.h <= 0.95 * 0.25);
    assert_eq!(*tr.times().last().unwrap(), 1.0);
    assert_eq!(tr.len(), log.len() + 1);
}

#[test]
fn quasi_adaptive_records_governing_subdomain() {
    // two bands along y1 of the pendulum with different step bounds
    let sys = SystemSpec::FreePendulum { alpha: 0.1, beta: 9.8 }.build();
    let dom = TrainingDomain::new(vec![(-2.0, 2.0), (-4.0, 4.0)], None, 0.25).unwrap();
    let part = build_partition(&dom, vec![vec![-2.0, 0.0, 2.0], vec![-4.0, 4.0]])
        .unwrap()
        .with_band_h_max(0, &[0.05, 0.1])
        .unwrap();
    let d = models_for(&part, &sys);
    let (tr, log) = march_quasi_adaptive(&d, &[0.5, 0.0], 0.0, 1.0, 0.95).unwrap();
    let mut seen = [false; 2];
    for (k, r) in log.iter().enumerate() {
        assert_eq!(tr.times()[k], r.t);
        assert_eq!(d.locate(&tr.states()[k], r.t).unwrap(), r.subdomain);
        if k + 1 < log.len() {
            assert_eq!(r.h, 0.95 * d.h_max(r.subdomain));
        }
        seen[r.subdomain] = true;
    }
    assert!(seen[0] && seen[1]);
}

#[test]
fn decomposed_dispatch_uses_local_models() {
    let sys = SystemSpec::FreePendulum { alpha: 0.1, beta: 9.8 }.build();
    let dom = TrainingDomain::new(vec![(-2.0, 2.0), (-4.0, 4.0)], None, 0.25).unwrap();
    let part = Partition::uniform(&dom, &[2, 1]).unwrap().with_enlargement(0.1).unwrap();
    let mut d = models_for(&part, &sys);
    let mut models = d.models().to_vec();
    randomize(&mut models[1], 1.0);
    d = DecomposedModel::new(part, models).unwrap();
    let mut mr = Marcher::new(&d);
    let a = mr.step(&[-1.0, 0.5], 0.0, 0.1).unwrap();
    let b = mr.step(&[1.0, 0.5], 0.0, 0.1).unwrap();
    assert_eq!(a, eval_psi(d.model(0), &[-1.0, 0.5], 0.0, 0.1).unwrap());
    let e = eval_psi(d.model(1), &[1.0, 0.5], 0.0, 0.1).unwrap();
    assert!((b[0] - e[0]).abs() < 1e-12 && (b[1] - e[1]).abs() < 1e-12);
}

#[test]
fn concurrent_marches_agree() {
    let mut m = pendulum(PsiKind::ExpS2, 20);
    randomize(&mut m, 0.5);
    let d = DecomposedModel::single(m);
    let cfg = MarchConfig::fixed(0.0, 2.0, 0.1);
    let serial: Vec<_> = [0.1, 0.2, 0.3].iter().map(|&a| march(&d, &[a, 0.0], &cfg).unwrap()).collect();
    let parallel: Vec<_> = std::thread::scope(|s| {
        let hs: Vec<_> = [0.1, 0.2, 0.3].iter().map(|&a| s.spawn({
            let d = &d;
            let cfg = &cfg;
            move || march(d, &[a, 0.0], cfg).unwrap()
        })).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
}
