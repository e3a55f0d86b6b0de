#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64;
use rand::Rng;
use smoothrl::blocks::SmoothRateLimiter;
use smoothrl::ode::{integrate_adaptive, AdaptiveOptions, InputSignal, IntegrationError, SimulationTrace};
use smoothrl::{Matrix, RateLimiterParams};

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random limiter with bounds up to 10:1 asymmetric. The gains are drawn
/// as the products `k1 c` and `k2 c` so that stiffness stays within what
/// an explicit integrator handles in reasonable time.
pub fn random_params<R: Rng>(rng: &mut R) -> RateLimiterParams {
    let ydot_max = log_uniform(rng, 0.01, 10.0);
    let ydot_min = -ydot_max * log_uniform(rng, 0.1, 10.0);
    let c = -ydot_max * ydot_min;
    let k1 = log_uniform(rng, 0.1, 1e4) / c;
    let k2 = log_uniform(rng, 0.1, 1e3) / c;
    let k3 = log_uniform(rng, 0.01, 10.0);
    RateLimiterParams::new(ydot_max, ydot_min, k1, k2, k3).unwrap()
}

/// Piecewise-linear input on `[0, t_end]` with 2 to 6 knots whose values
/// are large enough, relative to the rate bounds, to saturate the limiter.
pub fn random_input<R: Rng>(rng: &mut R, p: &RateLimiterParams, t_end: f64) -> InputSignal {
    let scale = signal_scale(p);
    let n = rng.gen_range(2..=6);
    let mut times: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..t_end)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let points = times.into_iter().map(|t| (t, rng.gen_range(-scale..scale))).collect();
    InputSignal::PiecewiseLinear { points }
}

/// Input and initial-output magnitude used by the random draws.
pub fn signal_scale(p: &RateLimiterParams) -> f64 {
    3.0 * p.ydot_max().max(-p.ydot_min())
}

pub fn simulate_limiter(
    p: &RateLimiterParams,
    input: InputSignal,
    y0: f64,
    t_end: f64,
    rtol: f64,
) -> Result<SimulationTrace, IntegrationError> {
    let block = SmoothRateLimiter::new(*p);
    integrate_adaptive(&block, &[input], &[y0, 0.0], (0.0, t_end), &AdaptiveOptions::with_tolerances(rtol, 1e-10))
}

/// Largest excursion of the derivative state beyond the rate bounds over
/// every recorded step; zero when the bounds hold.
pub fn bound_excess(p: &RateLimiterParams, trace: &SimulationTrace) -> f64 {
    let x = trace.expect_column("x");
    x.iter().map(|&v| (v - p.ydot_max()).max(p.ydot_min() - v).max(0.0)).fold(0.0, f64::max)
}

pub fn boundedness_eps(p: &RateLimiterParams) -> f64 {
    1e-7 * p.ydot_max().abs().max(p.ydot_min().abs())
}

/// Companion matrix of the monic polynomial with `coeffs[k]` the
/// coefficient of `λ^k`, `k < n`.
pub fn companion(coeffs: &[f64]) -> Matrix {
    let n = coeffs.len();
    Matrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -coeffs[n - 1 - j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Coefficients (low to high, monic term dropped) of `prod (λ - r)` for
/// real roots.
pub fn poly_from_real_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= r * a;
        }
        c = next;
    }
    c.pop();
    c
}

/// Worst distance between `expected` and `got` under a greedy nearest
/// matching. Infinite when the counts differ.
pub fn match_error(expected: &[Complex64], got: &[Complex64]) -> f64 {
    if expected.len() != got.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; got.len()];
    let mut worst: f64 = 0.0;
    for e in expected {
        let (k, d) = got
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, g)| (k, (g - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let v: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Upper bound on the smallest singular value of `A - λI`: the residual
/// `|(A - λI) v| / |v|` of one inverse-iteration vector `v`.
pub fn eigen_residual(a: &Matrix, lambda: Complex64) -> f64 {
    let n = a.rows();
    let tiny = f64::EPSILON * a.norm_inf().max(1.0);
    let shifted = |i: usize, j: usize| {
        let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
        Complex64::new(a[(i, j)], 0.0) - d
    };
    let mut m: Vec<Vec<Complex64>> = (0..n).map(|i| (0..n).map(|j| shifted(i, j)).collect()).collect();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    // Gaussian elimination with partial pivoting; a vanishing pivot is
    // replaced by a rounding-sized one, as usual for inverse iteration.
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm())).unwrap();
        m.swap(k, p);
        v.swap(k, p);
        if m[k][k].norm() < tiny {
            m[k][k] = Complex64::new(tiny, 0.0);
        }
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
            let t = v[k];
            v[i] -= f * t;
        }
    }
    for i in (0..n).rev() {
        let mut s = v[i];
        for j in i + 1..n {
            s -= m[i][j] * v[j];
        }
        v[i] = s / m[i][i];
    }
    let norm_v = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut r2 = 0.0;
    for i in 0..n {
        let mut s = Complex64::new(0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            s += shifted(i, j) * vj;
        }
        r2 += s.norm_sqr();
    }
    r2.sqrt() / norm_v
}

/// `T A T⁻¹` with `T = I + E`, `E` small and random.
pub fn similar<R: Rng>(rng: &mut R, a: &Matrix) -> Matrix {
    let n = a.rows();
    let scale = 0.5 / (n as f64).sqrt();
    let noise: Vec<f64> = (0..n * n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    let t = Matrix::from_fn(n, n, |i, j| {
        let e = noise[i * n + j];
        if i == j {
            1.0 + e
        } else {
            e
        }
    });
    t.matmul(a).matmul(&t.inverse().expect("well conditioned"))
}
