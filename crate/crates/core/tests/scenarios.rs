use smoothrl::cases::metrics::{overshoot, settling_time};
use smoothrl::cases::{sweep_csv, sweep_gains, Model, Scenario, SweepGrid, Variant};
use smoothrl::ode::DynamicalSystem;

fn final_value(sc: &Scenario, col: &str) -> f64 {
    *sc.run().unwrap().expect_column(col).last().unwrap()
}

#[test]
fn proportional_only_loop_keeps_its_static_error() {
    for kp in [0.1, 0.5, 1.0] {
        let sc = Scenario::pi_rl_loop(kp, 0.0);
        let want = 15.0 * kp / (kp + 0.1);
        let got = final_value(&sc, "i");
        assert!((got - want).abs() < 1e-3, "kp {kp}: {got} vs {want}");
    }
}

#[test]
fn zero_reference_stays_at_rest() {
    for variant in Variant::ALL {
        let mut sc = Scenario::pi_rl_loop(0.5, 5.0).with_variant(variant);
        sc.t_end = 0.5;
        if let Model::PiRlLoop { i_ref, .. } = &mut sc.model {
            *i_ref = 0.0;
        }
        let tr = sc.run().unwrap();
        for k in 0..tr.len() {
            assert!(tr.row(k).iter().all(|&v| v == 0.0), "{variant}: {:?}", tr.row(k));
        }
    }
}

#[test]
fn zero_step_leaves_the_limiter_flat() {
    let mut sc = Scenario::step_response(Variant::Smooth);
    sc.t_end = 5.0;
    if let Model::StepResponse { amplitude, .. } = &mut sc.model {
        *amplitude = 0.0;
    }
    let tr = sc.run().unwrap();
    assert!(tr.expect_column("y").iter().all(|&v| v == 0.0));
}

#[test]
fn smooth_regulator_tracks_and_is_stable() {
    let sc = Scenario::smooth_regulator();
    let tr = sc.run().unwrap();
    let i = tr.expect_column("i");
    assert!((i.last().unwrap() - 15.0).abs() < 1e-3);
    assert!(overshoot(&i, 0.0, 15.0) <= 0.01);
    assert!(tr.expect_column("vdot").iter().all(|v| v.abs() < 5.0 + 5e-7));
    let lin = sc.linearize().unwrap();
    assert_eq!(lin.eigenvalues.len(), 3);
    assert!(lin.stable && lin.eigenvalues.iter().all(|e| e.re < 0.0), "{:?}", lin.eigenvalues);
}

#[test]
fn integral_action_removes_the_static_error() {
    let tr = Scenario::pi_rl_loop(1.0, 20.0).run().unwrap();
    let i = tr.expect_column("i");
    assert!((i.last().unwrap() - 15.0).abs() < 0.15);
    assert!(settling_time(tr.times(), &i, 0.0, 15.0, 0.02).is_some());
    assert!(tr.expect_column("vdot").iter().all(|v| v.abs() <= 5.0 + 1e-9));
}

#[test]
fn each_smooth_limiter_adds_two_states() {
    let cases = [
        (Scenario::pi_rl_loop(0.5, 5.0), 1),
        (Scenario::stiff_gfl(Variant::Smooth), 1),
        (Scenario::multimachine(2, Variant::Smooth), 2),
        (Scenario::multimachine(3, Variant::Smooth), 3),
        (Scenario::multimachine(4, Variant::Smooth), 4),
    ];
    for (sc, limiters) in cases {
        let none = sc.clone().with_variant(Variant::None).linearize().unwrap();
        let smooth = sc.clone().with_variant(Variant::Smooth).linearize().unwrap();
        assert_eq!(smooth.dimension(), none.dimension() + 2 * limiters, "{}", sc.name);
        assert_eq!(smooth.eigenvalues.len(), none.eigenvalues.len() + 2 * limiters);
        let built = sc.with_variant(Variant::Smooth).build().unwrap();
        assert_eq!(built.system.dimension(), smooth.dimension());
    }
}

#[test]
fn conventional_variant_holds_between_samples() {
    let mut sc = Scenario::step_response(Variant::Conventional);
    sc.t_end = 1.0;
    let tr = sc.run().unwrap();
    let y = tr.expect_column("y");
    // no update is applied at the final time
    for (k, &t) in tr.times().iter().enumerate().take(tr.len() - 1) {
        let n = (t / sc.h_ctrl + 1e-9).floor();
        let want = (n * sc.h_ctrl * 0.05).min(0.15);
        assert!((y[k] - want).abs() < 1e-12, "t = {t}: {} vs {want}", y[k]);
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let mut sc = Scenario::multimachine(3, Variant::Smooth);
    sc.t_end = 2.0;
    assert_eq!(sc.run().unwrap().to_csv(), sc.run().unwrap().to_csv());
}

fn trend_base() -> Scenario {
    let mut sc = Scenario::step_response(Variant::Smooth);
    sc.t_end = 10.0;
    sc
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let grid = SweepGrid { k1: vec![900.0, 1800.0], k2: vec![60.0, 120.0], k3: vec![0.1] };
    let one = sweep_csv(&sweep_gains(&trend_base(), &grid, Some(1)).unwrap());
    let three = sweep_csv(&sweep_gains(&trend_base(), &grid, Some(3)).unwrap());
    assert_eq!(one, three);
    assert_eq!(one.lines().count(), 5);
}

#[test]
fn more_damping_gain_means_less_overshoot() {
    let grid = SweepGrid { k1: vec![1800.0], k2: vec![60.0, 120.0, 240.0, 480.0], k3: vec![0.1] };
    let rows = sweep_gains(&trend_base(), &grid, None).unwrap();
    let os: Vec<f64> = rows.iter().map(|r| r.metrics().unwrap().overshoot).collect();
    assert!(os.windows(2).all(|w| w[1] < w[0]), "{os:?}");
}

#[test]
fn more_stiffness_gain_means_a_faster_rate_rise() {
    let grid = SweepGrid { k1: vec![450.0, 900.0, 1800.0, 3600.0], k2: vec![120.0], k3: vec![0.1] };
    let rows = sweep_gains(&trend_base(), &grid, None).unwrap();
    let t90: Vec<f64> = rows.iter().map(|r| r.metrics().unwrap().t90_ydot.unwrap()).collect();
    assert!(t90.windows(2).all(|w| w[1] < w[0]), "{t90:?}");
}
