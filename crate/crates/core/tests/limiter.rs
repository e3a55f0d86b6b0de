mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smoothrl::blocks::SmoothRateLimiter;
use smoothrl::linear::numerical_jacobian;
use smoothrl::{RateLimiterParams, RlState};

fn params() -> impl Strategy<Value = RateLimiterParams> {
    (0.01f64..10.0, 0.01f64..10.0, -1.0f64..6.0, -2.0f64..4.0, -2.0f64..1.0).prop_map(|(hi, lo, k1, k2, k3)| {
        RateLimiterParams::new(hi, -lo, 10f64.powf(k1), 10f64.powf(k2), 10f64.powf(k3)).unwrap()
    })
}

proptest! {
    #[test]
    fn rest_is_an_equilibrium(p in params(), u in -100.0f64..100.0) {
        prop_assert_eq!(p.smooth_rhs(RlState::at_rest(u), u), (0.0, 0.0));
    }

    #[test]
    fn boundary_damping_is_independent_of_u_y_k1_k2(
        p in params(), u in -10.0f64..10.0, y in -10.0f64..10.0,
    ) {
        for bound in [p.ydot_max(), p.ydot_min()] {
            let want = -p.k3() * bound * bound;
            let s = RlState::new(y, bound);
            prop_assert!((p.lyapunov_rate(s, u) - want).abs() <= 1e-12 * want.abs());
            prop_assert!((p.lyapunov_rate_along_flow(s, u) - want).abs() <= 1e-12 * want.abs());
        }
    }

    #[test]
    fn lyapunov_rate_vanishes_at_zero_rate(p in params(), u in -10.0f64..10.0, y in -10.0f64..10.0) {
        prop_assert_eq!(p.lyapunov_rate(RlState::new(y, 0.0), u), 0.0);
    }

    #[test]
    fn regulator_form_with_tracking_error_is_the_limiter(
        p in params(), u in -10.0f64..10.0, y in -10.0f64..10.0, frac in 0.0f64..1.0,
    ) {
        let x = p.ydot_min() + frac * (p.ydot_max() - p.ydot_min());
        let s = RlState::new(y, x);
        prop_assert_eq!(p.regulator_rhs(s, u - y), p.smooth_rhs(s, u));
    }

    #[test]
    fn derivative_points_inward_just_outside_the_bounds(p in params(), u in -10.0f64..10.0, y in -10.0f64..10.0) {
        // dx/dt at x = bound is -k3 bound, pointing back into the interval
        let (_, up) = p.smooth_rhs(RlState::new(y, p.ydot_max()), u);
        let (_, down) = p.smooth_rhs(RlState::new(y, p.ydot_min()), u);
        prop_assert!(up < 0.0 && down > 0.0);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences(p in params(), u in -1.0f64..1.0) {
        let lin = p.linearize();
        let jac = numerical_jacobian(&SmoothRateLimiter::new(p), &[u, 0.0], &[u]).unwrap();
        let close = |got: f64, want: f64| {
            if want == 0.0 { got.abs() <= 1e-8 } else { (got - want).abs() <= 1e-6 * want.abs() }
        };
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!(close(jac.a[(i, j)], lin.a_matrix[i][j]), "A[{i}][{j}] {} vs {}", jac.a[(i, j)], lin.a_matrix[i][j]);
            }
            prop_assert!(close(jac.b[(i, 0)], lin.b_vector[i]));
        }
    }

    #[test]
    fn linearization_is_locally_stable(p in params()) {
        let lin = p.linearize();
        prop_assert_eq!(lin.a_matrix[0], [0.0, 1.0]);
        for ev in lin.eigenvalues() {
            prop_assert!(ev.re < 0.0, "{ev}");
        }
    }

    #[test]
    fn conventional_step_respects_the_rate_and_tracks(
        p in params(), y_prev in -10.0f64..10.0, u in -10.0f64..10.0, h in 1e-4f64..0.1,
    ) {
        let y = p.conventional_step(y_prev, u, h).unwrap();
        let rate = (y - y_prev) / h;
        let slack = 1e-12 * (1.0 + y_prev.abs() + u.abs()) / h;
        prop_assert!(rate <= p.ydot_max() + slack && rate >= p.ydot_min() - slack);
        if (u - y_prev) / h <= p.ydot_max() && (u - y_prev) / h >= p.ydot_min() {
            prop_assert!((y - u).abs() <= 1e-12 * (1.0 + u.abs()));
        }
        // moves toward u, never past it
        prop_assert!((u - y) * (u - y_prev) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_stays_within_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_params(&mut rng);
        let input = common::random_input(&mut rng, &p, 5.0);
        let trace = common::simulate_limiter(&p, input, 0.0, 5.0, 1e-8).unwrap();
        prop_assert!(common::bound_excess(&p, &trace) <= common::boundedness_eps(&p));
    }
}

#[test]
fn output_converges_to_a_constant_input() {
    let p = RateLimiterParams::symmetric(0.05, 1800.0, 120.0, 0.1).unwrap();
    let input = smoothrl::ode::InputSignal::constant(0.15);
    let trace = common::simulate_limiter(&p, input, 0.0, 40.0, 1e-8).unwrap();
    let last = trace.last_state().unwrap();
    assert!((last[0] - 0.15).abs() < 1e-4, "{last:?}");
    assert!(last[1].abs() < 1e-4);
}
