//! Rate-limiter models.
//!
//! Two models of a block that bounds the time derivative of its output:
//!
//! * the conventional, discontinuous limiter, advanced on a fixed sample
//!   grid by [`RateLimiterParams::conventional_step`];
//! * the smooth second-order model, whose internal state `x` is the output
//!   derivative and evolves as
//!
//!   ```text
//!   dy/dt = x
//!   dx/dt = (ydot_max - x)(x - ydot_min) [k1 (u - y) - k2 x] - k3 x
//!   ```
//!
//! The smooth model can be linearized at its equilibrium `(y, x) = (u, 0)`
//! and keeps `x` inside `(ydot_min, ydot_max)` for any positive gains.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("upper rate bound must be positive, got {0}")]
    UpperBound(f64),
    #[error("lower rate bound must be negative, got {0}")]
    LowerBound(f64),
    #[error("gain {name} must be positive and finite, got {value}")]
    Gain { name: &'static str, value: f64 },
    #[error("sample period must be positive, got {0}")]
    SamplePeriod(f64),
}

/// Rate bounds and gains of the smooth limiter.
///
/// Construction validates every invariant; a value of this type is always
/// usable. The conventional limiter only reads the two bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct RateLimiterParams {
    ydot_max: f64,
    ydot_min: f64,
    k1: f64,
    k2: f64,
    k3: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    ydot_max: f64,
    ydot_min: f64,
    k1: f64,
    k2: f64,
    k3: f64,
}

impl TryFrom<RawParams> for RateLimiterParams {
    type Error = ParamError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        RateLimiterParams::new(raw.ydot_max, raw.ydot_min, raw.k1, raw.k2, raw.k3)
    }
}

impl From<RateLimiterParams> for RawParams {
    fn from(p: RateLimiterParams) -> Self {
        RawParams { ydot_max: p.ydot_max, ydot_min: p.ydot_min, k1: p.k1, k2: p.k2, k3: p.k3 }
    }
}

impl RateLimiterParams {
    pub fn new(ydot_max: f64, ydot_min: f64, k1: f64, k2: f64, k3: f64) -> Result<Self, ParamError> {
        // `!(a > 0)` also rejects NaN
        if !(ydot_max > 0.0 && ydot_max.is_finite()) {
            return Err(ParamError::UpperBound(ydot_max));
        }
        if !(ydot_min < 0.0 && ydot_min.is_finite()) {
            return Err(ParamError::LowerBound(ydot_min));
        }
        for (name, value) in [("k1", k1), ("k2", k2), ("k3", k3)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::Gain { name, value });
            }
        }
        Ok(Self { ydot_max, ydot_min, k1, k2, k3 })
    }

    /// Symmetric bounds `±rate`.
    pub fn symmetric(rate: f64, k1: f64, k2: f64, k3: f64) -> Result<Self, ParamError> {
        Self::new(rate, -rate, k1, k2, k3)
    }

    pub fn ydot_max(&self) -> f64 {
        self.ydot_max
    }

    pub fn ydot_min(&self) -> f64 {
        self.ydot_min
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn k3(&self) -> f64 {
        self.k3
    }

    /// `c = -ydot_max * ydot_min`, always positive.
    pub fn c(&self) -> f64 {
        -self.ydot_max * self.ydot_min
    }

    /// Largest bound magnitude.
    pub fn bound_scale(&self) -> f64 {
        self.ydot_max.max(-self.ydot_min)
    }

    /// Tuning heuristic: close replication of the conventional limiter
    /// usually needs `k1 > k2`. Not enforced.
    pub fn replicates_conventional(&self) -> bool {
        self.k1 > self.k2
    }

    /// Same gains, new bounds.
    pub fn with_bounds(&self, ydot_max: f64, ydot_min: f64) -> Result<Self, ParamError> {
        Self::new(ydot_max, ydot_min, self.k1, self.k2, self.k3)
    }

    /// Same bounds, new gains.
    pub fn with_gains(&self, k1: f64, k2: f64, k3: f64) -> Result<Self, ParamError> {
        Self::new(self.ydot_max, self.ydot_min, k1, k2, k3)
    }

    /// Right-hand side of the smooth limiter for input `u`.
    pub fn smooth_rhs(&self, state: RlState, u: f64) -> (f64, f64) {
        self.regulator_rhs(state, u - state.y)
    }

    /// Right-hand side of the regulator form, where the tracking error
    /// `u - y` is replaced by an externally evaluated `g(z, y)`.
    pub fn regulator_rhs(&self, state: RlState, g_value: f64) -> (f64, f64) {
        let x = state.x;
        let window = (self.ydot_max - x) * (x - self.ydot_min);
        let dx = window * (self.k1 * g_value - self.k2 * x) - self.k3 * x;
        (x, dx)
    }

    /// One sample of the conventional limiter in tracking form: the rate
    /// needed to reach `u_now` in one period is clamped to the bounds.
    pub fn conventional_step(&self, y_prev: f64, u_now: f64, h: f64) -> Result<f64, ParamError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ParamError::SamplePeriod(h));
        }
        let rate = (u_now - y_prev) / h;
        Ok(y_prev + h * rate.clamp(self.ydot_min, self.ydot_max))
    }

    /// Closed-form linearization at `(u*, 0)`. Independent of `u*`.
    pub fn linearize(&self) -> RlLinearization {
        let c = self.c();
        RlLinearization {
            a_matrix: [[0.0, 1.0], [-self.k1 * c, -(self.k2 * c + self.k3)]],
            b_vector: [0.0, self.k1 * c],
        }
    }

    /// Lyapunov rate for `V = x²/2`, evaluated exactly in the printed form
    ///
    /// ```text
    /// (ydot_max - x)(ydot_min - x)[k1 (u - y) x - k2 x²] - k3 x²
    /// ```
    ///
    /// The second factor is `(ydot_min - x)`, the negative of the factor in
    /// the dynamics, so away from the bounds this differs in sign from
    /// `x * dx/dt` in its first term. Both forms reduce to `-k3 x²` at
    /// `x = ydot_max` and `x = ydot_min`, which is the property the
    /// boundedness argument uses. See [`Self::lyapunov_rate_along_flow`].
    pub fn lyapunov_rate(&self, state: RlState, u: f64) -> f64 {
        let x = state.x;
        (self.ydot_max - x) * (self.ydot_min - x) * (self.k1 * (u - state.y) * x - self.k2 * x * x) - self.k3 * x * x
    }

    /// `x * dx/dt`, the derivative of `V = x²/2` along the smooth dynamics.
    pub fn lyapunov_rate_along_flow(&self, state: RlState, u: f64) -> f64 {
        state.x * self.smooth_rhs(state, u).1
    }

    /// Open interval test on the derivative state.
    pub fn rate_within_bounds(&self, x: f64) -> bool {
        x > self.ydot_min && x < self.ydot_max
    }
}

/// Output `y` and its derivative `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RlState {
    pub y: f64,
    pub x: f64,
}

impl RlState {
    pub fn new(y: f64, x: f64) -> Self {
        Self { y, x }
    }

    /// Equilibrium at input `u`.
    pub fn at_rest(u: f64) -> Self {
        Self { y: u, x: 0.0 }
    }
}

/// Small-signal model over `(Δy, Δx)` with input `Δu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlLinearization {
    pub a_matrix: [[f64; 2]; 2],
    pub b_vector: [f64; 2],
}

impl RlLinearization {
    /// Roots of `λ² - tr(A) λ + det(A)`, upper-half-plane root first.
    pub fn eigenvalues(&self) -> [num_complex::Complex64; 2] {
        use num_complex::Complex64;
        let a = &self.a_matrix;
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            // avoid cancellation for the small root
            let big = tr / 2.0 + s.copysign(tr);
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (r1, r2) = if big >= small { (big, small) } else { (small, big) };
            [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
        } else {
            let im = (-disc).sqrt();
            [Complex64::new(tr / 2.0, im), Complex64::new(tr / 2.0, -im)]
        }
    }
}

/// Regulator form of the smooth limiter: drives a scalar function
/// `g(z, y)` of an external state `z` and the limiter output to zero while
/// bounding the output rate.
pub struct RegulatorSpec<G> {
    pub params: RateLimiterParams,
    pub target: G,
}

impl<G> RegulatorSpec<G>
where
    G: Fn(&[f64], f64) -> f64,
{
    pub fn new(params: RateLimiterParams, target: G) -> Self {
        Self { params, target }
    }

    pub fn rhs(&self, z: &[f64], state: RlState) -> (f64, f64) {
        self.params.regulator_rhs(state, (self.target)(z, state.y))
    }
}
