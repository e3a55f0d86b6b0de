//! Equilibria, finite-difference Jacobians and small-signal reports.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::eigen::{eigenvalues, EigenError};
use crate::linalg::{Lu, Matrix};
use crate::ode::DynamicalSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian at iteration {iteration}; try a perturbed initial guess")]
    SingularJacobian { iteration: usize },
    #[error("non-finite right-hand side in component {component} ({name})")]
    NonFinite { component: usize, name: String },
    #[error("expected {expected} {what}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Newton settings for [`find_equilibrium`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50 }
    }
}

/// State and input derivatives of `f` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub a: Matrix,
    pub b: Matrix,
}

fn check_dims<S: DynamicalSystem + ?Sized>(sys: &S, x: &[f64], u: &[f64]) -> Result<(), LinearError> {
    let n = sys.dimension();
    if x.len() != n {
        return Err(LinearError::Dimension { what: "states", expected: n, got: x.len() });
    }
    let m = sys.input_names().len();
    if u.len() != m {
        return Err(LinearError::Dimension { what: "inputs", expected: m, got: u.len() });
    }
    Ok(())
}

fn eval<S: DynamicalSystem + ?Sized>(sys: &S, x: &[f64], u: &[f64]) -> Result<Vec<f64>, LinearError> {
    let mut f = vec![0.0; x.len()];
    sys.rhs(0.0, x, u, &mut f);
    if let Some(k) = f.iter().position(|v| !v.is_finite()) {
        let name = sys.state_names().get(k).cloned().unwrap_or_default();
        return Err(LinearError::NonFinite { component: k, name });
    }
    Ok(f)
}

fn fd_step(v: f64) -> f64 {
    1e-7f64.max(1e-7 * v.abs())
}

/// Central-difference Jacobian of `f(x, u)` with respect to the state and
/// the inputs, evaluated at `t = 0`. Step per component is
/// `max(1e-7, 1e-7 |v|)`; rescale states far from unit magnitude.
pub fn numerical_jacobian<S: DynamicalSystem + ?Sized>(
    sys: &S,
    point: &[f64],
    frozen_inputs: &[f64],
) -> Result<Jacobian, LinearError> {
    check_dims(sys, point, frozen_inputs)?;
    let n = point.len();
    let m = frozen_inputs.len();
    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, m);
    let mut x = point.to_vec();
    for j in 0..n {
        let d = fd_step(point[j]);
        x[j] = point[j] + d;
        let fp = eval(sys, &x, frozen_inputs)?;
        x[j] = point[j] - d;
        let fm = eval(sys, &x, frozen_inputs)?;
        x[j] = point[j];
        for i in 0..n {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
        }
    }
    let mut u = frozen_inputs.to_vec();
    for j in 0..m {
        let d = fd_step(frozen_inputs[j]);
        u[j] = frozen_inputs[j] + d;
        let fp = eval(sys, point, &u)?;
        u[j] = frozen_inputs[j] - d;
        let fm = eval(sys, point, &u)?;
        u[j] = frozen_inputs[j];
        for i in 0..n {
            b[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
        }
    }
    Ok(Jacobian { a, b })
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `J dx = f`; falls back to a lightly regularized least-squares
/// step when `J` is singular, so that equilibria with free directions
/// (pure integrators) are still reached.
fn newton_step(j: &Matrix, f: &[f64]) -> Option<Vec<f64>> {
    if let Some(lu) = Lu::new(j) {
        return Some(lu.solve(f));
    }
    let jt = j.transpose();
    let mut normal = jt.matmul(j);
    let mu = 1e-10 * normal.norm_inf();
    if mu == 0.0 {
        return None;
    }
    for i in 0..normal.rows() {
        normal[(i, i)] += mu;
    }
    Lu::new(&normal).map(|lu| lu.solve(&jt.matvec(f)))
}

/// Newton iteration with a finite-difference Jacobian and step halving.
pub fn find_equilibrium<S: DynamicalSystem + ?Sized>(
    sys: &S,
    frozen_inputs: &[f64],
    guess: &[f64],
    opts: &EquilibriumOptions,
) -> Result<Vec<f64>, LinearError> {
    check_dims(sys, guess, frozen_inputs)?;
    let mut x = guess.to_vec();
    let mut f = eval(sys, &x, frozen_inputs)?;
    let mut res = norm_inf(&f);
    for iteration in 0..opts.max_iter {
        if res < opts.tol {
            return Ok(x);
        }
        let jac = numerical_jacobian(sys, &x, frozen_inputs)?;
        let dx = newton_step(&jac.a, &f).ok_or(LinearError::SingularJacobian { iteration })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi - lambda * di).collect();
            match eval(sys, &trial, frozen_inputs) {
                Ok(ft) => {
                    let r = norm_inf(&ft);
                    if r < res || lambda < 1e-4 {
                        x = trial;
                        f = ft;
                        res = r;
                        break;
                    }
                }
                Err(e) if lambda < 1e-4 => return Err(e),
                Err(_) => {}
            }
            lambda *= 0.5;
        }
    }
    if res < opts.tol {
        return Ok(x);
    }
    Err(LinearError::NoConvergence { iterations: opts.max_iter, residual: res })
}

/// Equilibrium, state-space matrices and spectrum of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationResult {
    pub state_names: Vec<String>,
    pub equilibrium: Vec<f64>,
    pub a_matrix: Matrix,
    pub b_matrix: Matrix,
    pub eigenvalues: Vec<Complex64>,
    /// `true` when every eigenvalue has real part at or below the stability
    /// tolerance.
    pub stable: bool,
}

/// Eigenvalues with real part above this count as unstable.
pub const STABILITY_TOL: f64 = 1e-9;

impl LinearizationResult {
    pub fn dimension(&self) -> usize {
        self.equilibrium.len()
    }

    /// Rightmost eigenvalue.
    pub fn dominant(&self) -> Option<Complex64> {
        self.eigenvalues.first().copied()
    }

    /// One row per eigenvalue: `re,im,magnitude,damping`.
    pub fn poles_csv(&self) -> String {
        let mut s = String::from("re,im,magnitude,damping\n");
        for ev in &self.eigenvalues {
            let mag = ev.norm();
            let damping = if mag > 0.0 { -ev.re / mag } else { 0.0 };
            write_row(&mut s, &[ev.re, ev.im, mag, damping]);
        }
        s
    }

    /// `case,re,im` rows for overlaying several linearizations in one plot.
    pub fn pole_map_rows(&self, case: &str, out: &mut String) {
        for ev in &self.eigenvalues {
            out.push_str(case);
            out.push(',');
            write_row(out, &[ev.re, ev.im]);
        }
    }

    /// State matrix with a header of state names.
    pub fn state_matrix_csv(&self) -> String {
        let mut s = self.state_names.join(",");
        s.push('\n');
        for i in 0..self.a_matrix.rows() {
            write_row(&mut s, self.a_matrix.row(i));
        }
        s
    }
}

fn write_row(s: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        crate::ode::write_csv_value(s, *v);
    }
    let _ = writeln!(s);
}

/// Equilibrium, then Jacobian, then eigenvalues.
pub fn small_signal_report<S: DynamicalSystem + ?Sized>(
    sys: &S,
    frozen_inputs: &[f64],
    guess: &[f64],
    opts: &EquilibriumOptions,
) -> Result<LinearizationResult, LinearError> {
    let equilibrium = find_equilibrium(sys, frozen_inputs, guess, opts)?;
    let jac = numerical_jacobian(sys, &equilibrium, frozen_inputs)?;
    let eigenvalues = eigenvalues(&jac.a)?;
    let stable = eigenvalues.iter().all(|e| e.re <= STABILITY_TOL);
    Ok(LinearizationResult {
        state_names: sys.state_names(),
        equilibrium,
        a_matrix: jac.a,
        b_matrix: jac.b,
        eigenvalues,
        stable,
    })
}

/// Largest relative displacement of any `baseline` eigenvalue from its
/// nearest counterpart in `other`. Used to show that a model change moves
/// the spectrum.
pub fn max_relative_shift(baseline: &[Complex64], other: &[Complex64]) -> f64 {
    baseline
        .iter()
        .map(|b| {
            let nearest = other.iter().map(|o| (o - b).norm()).fold(f64::INFINITY, f64::min);
            nearest / b.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}
