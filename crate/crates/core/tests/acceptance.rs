//! Acceptance checks, one PASS/FAIL line each. Exits non-zero if any fail.

#![allow(clippy::needless_range_loop)]

mod common;

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothrl::blocks::SmoothRateLimiter;
use smoothrl::cases::metrics::{first_crossing, max_deviation, overshoot, peak_abs, settling_time};
use smoothrl::cases::{pi_grid, Scenario, Variant};
use smoothrl::eigen::eigenvalues;
use smoothrl::linear::{max_relative_shift, numerical_jacobian};
use smoothrl::ode::{integrate_fixed, FnSystem, SimulationTrace};
use smoothrl::{RateLimiterParams, RlState};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome, String>;

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(sc: &Scenario) -> Result<SimulationTrace, String> {
    sc.run().map_err(|e| format!("{}: {e}", sc.name))
}

fn fig2() -> RateLimiterParams {
    RateLimiterParams::symmetric(0.05, 1800.0, 120.0, 0.1).unwrap()
}

fn boundedness() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let start = Instant::now();
    let cases = 1000;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for case in 0..cases {
        let p = common::random_params(&mut rng);
        let input = common::random_input(&mut rng, &p, 10.0);
        let y0 = common::signal_scale(&p) * rng.gen_range(-1.0..1.0);
        let trace = common::simulate_limiter(&p, input, y0, 10.0, 1e-8).map_err(|e| format!("case {case}: {e}"))?;
        let excess = common::bound_excess(&p, &trace);
        let eps = common::boundedness_eps(&p);
        worst = worst.max(excess / eps);
        if excess > eps {
            violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(check(
        violations == 0 && secs < 60.0,
        format!("{cases} cases, {violations} violations, worst excess {worst:.3} eps, {secs:.1} s"),
    ))
}

fn boundary_identity() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let base = common::random_params(&mut rng);
        let k1 = 10f64.powf(rng.gen_range(-1.0..7.0));
        let k2 = 10f64.powf(rng.gen_range(-2.0..5.0));
        let p = base.with_gains(k1, k2, base.k3()).unwrap();
        let u = rng.gen_range(-100.0..100.0);
        let y = rng.gen_range(-100.0..100.0);
        for bound in [p.ydot_max(), p.ydot_min()] {
            let want = -p.k3() * bound * bound;
            let got = p.lyapunov_rate(RlState::new(y, bound), u);
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    Ok(check(worst <= 1e-12, format!("10000 draws, worst relative error {worst:.2e}")))
}

fn linearization_oracle() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = common::random_params(&mut rng);
        let u = rng.gen_range(-1.0..1.0);
        let jac = numerical_jacobian(&SmoothRateLimiter::new(p), &[u, 0.0], &[u]).map_err(|e| e.to_string())?;
        // closed form written out here rather than taken from the library
        let c = -p.ydot_max() * p.ydot_min();
        let a = [[0.0, 1.0], [-p.k1() * c, -(p.k2() * c + p.k3())]];
        let lin = p.linearize();
        for i in 0..2 {
            for j in 0..2 {
                let want = a[i][j];
                for got in [jac.a[(i, j)], lin.a_matrix[i][j]] {
                    let err = if want == 0.0 { got.abs() } else { (got - want).abs() / want.abs() };
                    worst = worst.max(err);
                }
            }
        }
    }
    let re = -0.2;
    let im = (1800.0 * 0.0025 - 0.2f64 * 0.2).sqrt();
    let sc = Scenario::step_response(Variant::Smooth);
    let report = sc.linearize().map_err(|e| e.to_string())?;
    let analytic = fig2().linearize().eigenvalues();
    let want = [Complex64::new(re, im), Complex64::new(re, -im)];
    let eig_err = common::match_error(&want, &report.eigenvalues).max(common::match_error(&want, &analytic));
    let printed = (im - 2.11187).abs();
    Ok(check(
        worst < 1e-6 && eig_err < 1e-9 && printed < 5e-6,
        format!("100 draws, worst Jacobian relative error {worst:.2e}; poles -0.2 ± j{im:.6}, error {eig_err:.1e}"),
    ))
}

fn step_response() -> Result<Outcome, String> {
    let start = Instant::now();
    let smooth = run(&Scenario::step_response(Variant::Smooth))?;
    let conv = run(&Scenario::step_response(Variant::Conventional))?;
    let secs = start.elapsed().as_secs_f64();
    let ys = smooth.expect_column("y");
    let yc = conv.expect_column("y");
    let final_y = *ys.last().unwrap();
    let eps = 1e-7 * 0.05;
    let peak = peak_abs(&smooth.expect_column("ydot"));
    let dev = max_deviation(smooth.times(), &ys, conv.times(), &yc).max(max_deviation(
        conv.times(),
        &yc,
        smooth.times(),
        &ys,
    ));
    let t_ramp = first_crossing(conv.times(), &yc, 0.15 - 1e-12).unwrap_or(f64::NAN);
    let parts =
        [(final_y - 0.15).abs() <= 1e-3, peak <= 0.05 + eps, dev < 0.005, (t_ramp - 3.0).abs() <= 0.02, secs < 1.0];
    Ok(check(
        parts.iter().all(|&b| b),
        format!(
            "final y {final_y:.5}; peak |ydot| {peak:.5}; max |y_smooth - y_conventional| {dev:.4} (limit 0.005); \
             ramp reaches 0.15 at {t_ramp:.3} s; {secs:.2} s"
        ),
    ))
}

fn regulator() -> Result<Outcome, String> {
    let reg = run(&Scenario::smooth_regulator())?;
    let i = reg.expect_column("i");
    let ss = (i.last().unwrap() - 15.0).abs();
    let os = overshoot(&i, 0.0, 15.0);
    let ts = settling_time(reg.times(), &i, 0.0, 15.0, 0.02).unwrap_or(f64::INFINITY);
    let mut ok = ss < 1e-3 && os <= 0.01;
    let mut pi_lines = Vec::new();
    for (kp, ki) in pi_grid().into_iter().filter(|&(_, ki)| ki > 0.0) {
        let tr = run(&Scenario::pi_rl_loop(kp, ki))?;
        let ip = tr.expect_column("i");
        let pts = settling_time(tr.times(), &ip, 0.0, 15.0, 0.02).unwrap_or(f64::INFINITY);
        let pos = overshoot(&ip, 0.0, 15.0);
        ok &= ts < pts && pos > 0.0;
        pi_lines.push(format!("({kp},{ki}) {pts:.3} s/{:.1}%", 100.0 * pos));
    }
    Ok(check(
        ok,
        format!(
            "regulator error {ss:.1e}, overshoot {:.2}%, settles in {ts:.3} s; PI settling/overshoot: {}",
            100.0 * os,
            pi_lines.join(", ")
        ),
    ))
}

fn stiff() -> Result<Outcome, String> {
    let sc = Scenario::stiff_gfl(Variant::Smooth);
    let tr = run(&sc)?;
    let peak = peak_abs(&tr.expect_column("vdot"));
    let eps = 1e-7 * 5.0;
    let smooth = sc.linearize().map_err(|e| e.to_string())?;
    let none = sc.with_variant(Variant::None).linearize().map_err(|e| e.to_string())?;
    let shift = max_relative_shift(&none.eigenvalues, &smooth.eigenvalues);
    Ok(check(
        peak <= 5.0 + eps && shift >= 0.01 && tr.times().last() == Some(&2.0),
        format!(
            "2 s completed in {} steps, peak |vdot| {peak:.4}; eigenvalue shift vs no limiter {:.1}%",
            tr.len(),
            100.0 * shift
        ),
    ))
}

fn multimachine() -> Result<Outcome, String> {
    let n = 3;
    let traces: Vec<SimulationTrace> = [Variant::None, Variant::Conventional, Variant::Smooth]
        .into_iter()
        .map(|v| run(&Scenario::multimachine(n, v)))
        .collect::<Result<_, _>>()?;
    let peak =
        |tr: &SimulationTrace| (1..=n).map(|k| peak_abs(&tr.expect_column(&format!("omega{k}")))).fold(0.0, f64::max);
    let [p_none, p_conv, p_smooth] = [peak(&traces[0]), peak(&traces[1]), peak(&traces[2])];
    let dev = (1..=n)
        .map(|k| {
            let col = format!("omega{k}");
            max_deviation(
                traces[2].times(),
                &traces[2].expect_column(&col),
                traces[1].times(),
                &traces[1].expect_column(&col),
            )
        })
        .fold(0.0, f64::max);
    let none = Scenario::multimachine(n, Variant::None).linearize().map_err(|e| e.to_string())?;
    let smooth = Scenario::multimachine(n, Variant::Smooth).linearize().map_err(|e| e.to_string())?;
    let added = smooth.dimension() as i64 - none.dimension() as i64;
    let added_eig = smooth.eigenvalues.len() as i64 - none.eigenvalues.len() as i64;
    let shift = max_relative_shift(&none.eigenvalues, &smooth.eigenvalues);
    let parts = [
        p_none > p_conv && p_none > p_smooth,
        dev < 0.1 * p_conv,
        added == 2 * n as i64 && added_eig == 2 * n as i64,
        shift > 0.01,
    ];
    Ok(check(
        parts.iter().all(|&b| b),
        format!(
            "peak |omega| none {p_none:.3e}, conventional {p_conv:.3e}, smooth {p_smooth:.3e}; \
             smooth vs conventional {:.1}% of peak; +{added} states, +{added_eig} eigenvalues; shift {:.2}%",
            100.0 * dev / p_conv,
            100.0 * shift
        ),
    ))
}

fn eigensolver() -> Result<Outcome, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut companion_err: f64 = 0.0;
    let cubic = eigenvalues(&common::companion(&common::poly_from_real_roots(&[-1.0, -2.0, -3.0])))
        .map_err(|e| e.to_string())?;
    let want: Vec<Complex64> = [-1.0, -2.0, -3.0].iter().map(|&r| Complex64::new(r, 0.0)).collect();
    companion_err = companion_err.max(common::match_error(&want, &cubic));
    for n in [2, 5, 10, 20, 35, 50] {
        let mut coeffs = vec![0.0; n];
        coeffs[0] = -1.0;
        let got = eigenvalues(&common::companion(&coeffs)).map_err(|e| e.to_string())?;
        let want: Vec<Complex64> =
            (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect();
        companion_err = companion_err.max(common::match_error(&want, &got));
    }
    let mut residual: f64 = 0.0;
    let mut similarity: f64 = 0.0;
    for n in [1, 2, 3, 5, 8, 13, 20, 30, 40, 50] {
        for _ in 0..5 {
            let a = common::random_matrix(&mut rng, n);
            let ev = eigenvalues(&a).map_err(|e| e.to_string())?;
            for &l in &ev {
                residual = residual.max(common::eigen_residual(&a, l) / a.norm_fro());
            }
            if n <= 20 {
                let b = common::similar(&mut rng, &a);
                let eb = eigenvalues(&b).map_err(|e| e.to_string())?;
                similarity = similarity.max(common::match_error(&ev, &eb));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(check(
        companion_err < 1e-9 && residual < 1e-8 && similarity < 1e-7 && secs < 30.0,
        format!(
            "companion error {companion_err:.1e}, residual {residual:.1e} |A|, similarity {similarity:.1e}, {secs:.2} s"
        ),
    ))
}

fn rk4_order() -> Result<Outcome, String> {
    let sys = FnSystem::new(1, |_, x, _, dx| dx[0] = -x[0]);
    let exact = (-1.0f64).exp();
    let mut errs = Vec::new();
    for h in [0.1, 0.05, 0.025, 0.0125] {
        let tr = integrate_fixed(&sys, &[], &[1.0], (0.0, 1.0), h).map_err(|e| e.to_string())?;
        errs.push((tr.last_state().unwrap()[0] - exact).abs());
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(check(
        ratios.iter().all(|r| (r - 16.0).abs() <= 3.0),
        format!("error ratios {}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")),
    ))
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("rate stays within bounds", boundedness),
        ("Lyapunov rate at the bounds", boundary_identity),
        ("analytic linearization", linearization_oracle),
        ("step response", step_response),
        ("smooth regulator against rate-limited PI", regulator),
        ("stiff gains", stiff),
        ("three-machine system", multimachine),
        ("eigensolver", eigensolver),
        ("RK4 order", rk4_order),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = f().unwrap_or_else(|e| check(false, format!("error: {e}")));
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!("{tag} {}. {name}: {}", k + 1, outcome.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
