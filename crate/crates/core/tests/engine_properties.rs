use vaftc_core::engine::{demo_scenario, run, Mode, Scenario, SimTrace};
use vaftc_core::exprlang::{parse, Expr};
use vaftc_core::faults::{FaultEvent, FaultSchedule};
use vaftc_core::numerics::{dot, norm2, Mat};
use vaftc_core::plant::{
    faulty_deriv, nominal_deriv, DisturbanceChannel, LinearCore, NonlinearPair, ReferenceModel,
    DEFAULT_G_MIN,
};
use vaftc_core::virtual_actuator::{AdaptationConfig, MuRate};

fn short(mode: Mode, t_end: f64) -> Scenario {
    Scenario {
        mode,
        t_end,
        ..demo_scenario()
    }
}

/// `e^{M t}` by scaling and squaring of a Taylor series.
fn expm(m: &Mat, t: f64) -> Mat {
    let n = m.rows();
    let a = m.scale(t);
    let squarings = (a.max_abs() * n as f64).log2().ceil().max(0.0) as i32 + 4;
    let a = a.scale(0.5f64.powi(squarings));
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..=20 {
        term = (&term * &a).scale(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn scalar_decay() -> Scenario {
    let one = |v: f64| Mat::from_rows(&[[v]]);
    Scenario {
        core: LinearCore::new(one(-1.0), one(1.0), one(1.0)).unwrap(),
        nl: NonlinearPair::new(Expr::constant(0.0), Expr::constant(1.0), DEFAULT_G_MIN, 1).unwrap(),
        reference: ReferenceModel::new(one(-1.0), one(1.0)).unwrap(),
        tracking_p: None,
        channel: DisturbanceChannel::Matched { scale: 1.0 },
        adaptation: AdaptationConfig {
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 1.0,
            p: one(0.5),
            theta_design: 0.5,
            d_tilde_max: 0.0,
            d_dot_max: 0.0,
            mu_rate: MuRate::Gamma2,
        },
        schedule: FaultSchedule::empty(),
        r_signal: Expr::constant(0.0),
        x_hat0: vec![1.0],
        x_f0: vec![1.0],
        x_d0: vec![2.0],
        t_end: 5.0,
        h: 1e-3,
        mode: Mode::FaultyWithVa,
        eps_band: 0.05,
    }
}

#[test]
fn runs_are_bit_identical() {
    let s = short(Mode::FaultyWithVa, 30.0);
    assert_eq!(run(&s).unwrap(), run(&s).unwrap());
}

#[test]
fn healthy_plant_keeps_difference_at_zero() {
    let mut s = demo_scenario();
    s.schedule = FaultSchedule::empty();
    let tr = run(&s).unwrap();
    let worst = SimTrace::sup_of(&tr.rows, |r| r.x_tilde_norm());
    assert!(worst <= 1e-9, "sup |x~| = {worst:e}");
    for r in &tr.rows {
        assert_eq!(r.u_f, r.u);
        assert_eq!(r.adaptive.n, 1.0);
    }
}

#[test]
fn events_after_horizon_are_inert() {
    let mut s = short(Mode::FaultyWithVa, 12.0);
    s.schedule = FaultSchedule::new(vec![
        FaultEvent::loss(13.0, 0.3),
        FaultEvent::additive(20.0, parse("1", 0).unwrap()),
    ])
    .unwrap();
    let late = run(&s).unwrap();
    s.schedule = FaultSchedule::empty();
    let empty = run(&s).unwrap();
    assert_eq!(late, empty);
}

#[test]
fn modes_coincide_without_faults() {
    let mut s = short(Mode::FaultyNoVa, 10.0);
    s.schedule = FaultSchedule::empty();
    let without = run(&s).unwrap();
    let with = run(&s.with_mode(Mode::FaultyWithVa)).unwrap();
    for (a, b) in without.rows.iter().zip(&with.rows) {
        assert_eq!(a.x_f, b.x_f);
        assert_eq!(a.u_f, b.u_f);
    }
}

#[test]
fn modes_diverge_once_a_fault_acts() {
    let s = short(Mode::FaultyNoVa, 16.0);
    let without = run(&s).unwrap();
    let with = run(&s.with_mode(Mode::FaultyWithVa)).unwrap();
    let before = without.window(0.0, 15.0);
    assert!(before
        .iter()
        .zip(with.window(0.0, 15.0))
        .all(|(a, b)| a.x_f == b.x_f));
    let last = (without.rows.last().unwrap(), with.rows.last().unwrap());
    assert_ne!(last.0.x_f, last.1.x_f);
}

#[test]
fn scalar_decay_matches_closed_form() {
    let tr = run(&scalar_decay()).unwrap();
    for r in &tr.rows {
        let e = (-r.t).exp();
        assert!((r.x_hat[0] - e).abs() <= 1e-8);
        assert!((r.x_f[0] - e).abs() <= 1e-8);
        assert!((r.x_d[0] - 2.0 * e).abs() <= 1e-8);
    }
}

#[test]
fn nominal_loop_is_exactly_the_reference_error_dynamics() {
    // With the nonlinearity cancelled, e = x̂ − x_d obeys ė = A_d e.
    let mut s = short(Mode::NominalOnly, 10.0);
    s.x_hat0 = vec![0.5, -0.2, 1.0];
    let tr = run(&s).unwrap();
    let e0 = vec![0.5, -0.2, 1.0];
    for k in (0..tr.len()).step_by(500) {
        let r = &tr.rows[k];
        let want = expm(s.reference.a_d(), r.t).mul_vec(&e0);
        let got = r.e();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-6, "t = {}: {got:?} vs {want:?}", r.t);
        }
    }
}

/// Terminal augmented state used for convergence checks.
fn terminal(tr: &SimTrace) -> Vec<f64> {
    let r = tr.rows.last().unwrap();
    let mut v = [
        r.x_d.clone(),
        r.x_hat.clone(),
        r.x_f.clone(),
        r.adaptive.m.clone(),
    ]
    .concat();
    v.extend([r.adaptive.n, r.adaptive.d_hat]);
    v
}

#[test]
fn pre_fault_closed_loop_converges_at_fourth_order() {
    let mut s = short(Mode::FaultyWithVa, 1.0);
    s.x_hat0 = vec![1.0, -1.0, 2.0];
    s.x_f0 = vec![1.0, -1.0, 2.0];
    let at = |h: f64| terminal(&run(&Scenario { h, ..s.clone() }).unwrap());
    let reference = at(1.25e-4);
    let errs: Vec<f64> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&h| {
            norm2(
                &at(h)
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.5, "order {order}, errors {errs:?}");
    }
}

/// Largest mismatch between a central difference of the recorded `x̃` and
/// the difference-system right side, over steps at least `reach` away from
/// an event. `stencil` holds `(offset, weight)` pairs of the difference.
fn difference_system_mismatch(stencil: &[(isize, f64)], reach: usize) -> f64 {
    let s = demo_scenario();
    let tr = run(&s).unwrap();
    let h = s.h;
    let events: Vec<usize> = s
        .schedule
        .event_times()
        .iter()
        .map(|t| (t / h).round() as usize)
        .collect();
    let mut worst: f64 = 0.0;
    for k in reach..tr.len() - reach {
        if events.iter().any(|&e| e + reach >= k && e <= k + reach) {
            continue;
        }
        let row = &tr.rows[k];
        let mut fd = [0.0; 3];
        for &(off, w) in stencil {
            let xt = tr.rows[(k as isize + off) as usize].x_tilde();
            for i in 0..3 {
                fd[i] += w * xt[i] / h;
            }
        }
        let dxf = faulty_deriv(
            &s.core,
            &s.nl,
            &s.channel,
            row.t,
            &row.x_f,
            row.u_f,
            &row.injection,
        )
        .unwrap();
        let dxh = nominal_deriv(&s.core, &s.nl, row.t, &row.x_hat, row.u).unwrap();
        for i in 0..3 {
            worst = worst.max((fd[i] - (dxf[i] - dxh[i])).abs());
        }
    }
    worst
}

#[test]
fn difference_system_matches_recorded_derivative() {
    let five_point = [
        (-2, 1.0 / 12.0),
        (-1, -8.0 / 12.0),
        (1, 8.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    let worst = difference_system_mismatch(&five_point, 2);
    assert!(worst <= 1e-4, "worst mismatch {worst:e}");
}

#[test]
fn three_point_difference_is_second_order_limited() {
    // The adaptive loop rings near 100 rad/s after the disturbance step, so the
    // three-point truncation term h²/6·x̃‴ dominates; it must still be O(h²).
    let worst = difference_system_mismatch(&[(-1, -0.5), (1, 0.5)], 1);
    assert!(worst <= 1e-2, "worst mismatch {worst:e}");
}

#[test]
fn lyapunov_function_decreases_at_the_predicted_rate() {
    // f ≡ 0, constant g and a known loss: the adaptive errors are
    // M̃ = M, Ñ = N − 1/θ, d̃ = d̂, and V̇ = −½ x̃ᵀ Q x̃ holds exactly.
    let theta = 0.5;
    let g = 2.0;
    let base = demo_scenario();
    let s = Scenario {
        nl: NonlinearPair::new(Expr::constant(0.0), Expr::constant(g), DEFAULT_G_MIN, 3).unwrap(),
        schedule: FaultSchedule::new(vec![FaultEvent::loss(0.0, theta)]).unwrap(),
        x_hat0: vec![0.0; 3],
        x_f0: vec![0.4, -0.3, 0.2],
        t_end: 2.0,
        h: 1e-4,
        ..base
    };
    let cfg = &s.adaptation;
    let p = &cfg.p;
    let at = s.core.a().transpose();
    let q = -&(&(&at * p) + &(p * s.core.a()));
    let v = |r: &vaftc_core::engine::TraceRow| {
        let xt = r.x_tilde();
        let m2: f64 = r.adaptive.m.iter().map(|m| m * m).sum();
        let n_err = r.adaptive.n - 1.0 / theta;
        0.5 * dot(&xt, &p.mul_vec(&xt))
            + theta / (2.0 * cfg.gamma1) * m2
            + theta / (2.0 * cfg.gamma2) * n_err * n_err
            + theta / (2.0 * cfg.gamma3) * r.adaptive.d_hat * r.adaptive.d_hat
    };
    let tr = run(&s).unwrap();
    let mut checked = 0;
    for k in (1..tr.len() - 1).step_by(50) {
        let row = &tr.rows[k];
        let fd = (v(&tr.rows[k + 1]) - v(&tr.rows[k - 1])) / (2.0 * s.h);
        let xt = row.x_tilde();
        let predicted = -0.5 * dot(&xt, &q.mul_vec(&xt));
        if predicted.abs() < 1e-6 {
            continue;
        }
        assert!(
            ((fd - predicted) / predicted).abs() <= 1e-3,
            "t = {}: finite difference {fd:e}, predicted {predicted:e}",
            row.t
        );
        checked += 1;
    }
    assert!(checked > 100, "only {checked} points above the floor");
}
