//! Building blocks for the scenario diagrams.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::ode::{DiscreteBlock, DynamicalSystem};
use crate::rate_limiter::{ParamError, RateLimiterParams, RlState};

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Smooth limiter as a block: states `y, x`, input `u`, outputs `y, ydot`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothRateLimiter {
    pub params: RateLimiterParams,
}

impl SmoothRateLimiter {
    pub fn new(params: RateLimiterParams) -> Self {
        Self { params }
    }
}

impl DynamicalSystem for SmoothRateLimiter {
    fn state_names(&self) -> Vec<String> {
        names(&["y", "x"])
    }
    fn dimension(&self) -> usize {
        2
    }
    fn input_names(&self) -> Vec<String> {
        names(&["u"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["y", "ydot"])
    }
    fn rhs(&self, _t: f64, s: &[f64], u: &[f64], dx: &mut [f64]) {
        let (a, b) = self.params.smooth_rhs(RlState::new(s[0], s[1]), u[0]);
        dx[0] = a;
        dx[1] = b;
    }
    fn outputs(&self, _t: f64, s: &[f64], _u: &[f64], y: &mut [f64]) {
        y[0] = s[0];
        y[1] = s[1];
    }
}

/// Regulator form: input `g` is the regulated quantity, driven to zero.
#[derive(Debug, Clone, Copy)]
pub struct SmoothRegulator {
    pub params: RateLimiterParams,
}

impl DynamicalSystem for SmoothRegulator {
    fn state_names(&self) -> Vec<String> {
        names(&["y", "x"])
    }
    fn dimension(&self) -> usize {
        2
    }
    fn input_names(&self) -> Vec<String> {
        names(&["g"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["y", "ydot"])
    }
    fn rhs(&self, _t: f64, s: &[f64], g: &[f64], dx: &mut [f64]) {
        let (a, b) = self.params.regulator_rhs(RlState::new(s[0], s[1]), g[0]);
        dx[0] = a;
        dx[1] = b;
    }
    fn outputs(&self, _t: f64, s: &[f64], _u: &[f64], y: &mut [f64]) {
        y[0] = s[0];
        y[1] = s[1];
    }
}

/// Conventional limiter sampled every `period` seconds. Outputs the held
/// value `y` and the rate `ydot` applied over the last period.
#[derive(Debug, Clone)]
pub struct ConventionalRateLimiter {
    params: RateLimiterParams,
    period: f64,
    initial: f64,
    y: f64,
}

impl ConventionalRateLimiter {
    pub fn new(params: RateLimiterParams, period: f64, initial: f64) -> Result<Self, ParamError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(ParamError::SamplePeriod(period));
        }
        Ok(Self { params, period, initial, y: initial })
    }
}

impl DiscreteBlock for ConventionalRateLimiter {
    fn input_names(&self) -> Vec<String> {
        names(&["u"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["y", "ydot"])
    }
    fn period(&self) -> f64 {
        self.period
    }
    fn reset(&mut self) -> Vec<f64> {
        self.y = self.initial;
        vec![self.y, 0.0]
    }
    fn update(&mut self, _t: f64, inputs: &[f64], out: &mut [f64]) {
        let prev = self.y;
        self.y = self.params.conventional_step(prev, inputs[0], self.period).expect("period validated at construction");
        out[0] = self.y;
        out[1] = (self.y - prev) / self.period;
    }
}

/// Identity block standing in for an absent limiter.
#[derive(Debug, Clone, Copy, Default)]
pub struct Passthrough;

impl DynamicalSystem for Passthrough {
    fn state_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn dimension(&self) -> usize {
        0
    }
    fn input_names(&self) -> Vec<String> {
        names(&["u"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["y"])
    }
    fn direct_feedthrough(&self) -> bool {
        true
    }
    fn rhs(&self, _t: f64, _s: &[f64], _u: &[f64], _dx: &mut [f64]) {}
    fn outputs(&self, _t: f64, _s: &[f64], u: &[f64], y: &mut [f64]) {
        y[0] = u[0];
    }
}

/// `l di/dt = -r i + v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantRL {
    pub l: f64,
    pub r: f64,
}

impl PlantRL {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(format!("plant inductance must be positive, got {}", self.l));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(format!("plant resistance must be non-negative, got {}", self.r));
        }
        Ok(())
    }
}

impl DynamicalSystem for PlantRL {
    fn state_names(&self) -> Vec<String> {
        names(&["i"])
    }
    fn dimension(&self) -> usize {
        1
    }
    fn input_names(&self) -> Vec<String> {
        names(&["v"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["i"])
    }
    fn rhs(&self, _t: f64, s: &[f64], v: &[f64], dx: &mut [f64]) {
        dx[0] = (-self.r * s[0] + v[0]) / self.l;
    }
    fn outputs(&self, _t: f64, s: &[f64], _u: &[f64], y: &mut [f64]) {
        y[0] = s[0];
    }
}

/// PI on `ref - meas`: output `kp e + ki z`, with `dz/dt = e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiController {
    pub kp: f64,
    pub ki: f64,
}

impl PiController {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.kp >= 0.0 && self.kp.is_finite() && self.ki >= 0.0 && self.ki.is_finite()) {
            return Err(format!("PI gains must be non-negative, got kp={} ki={}", self.kp, self.ki));
        }
        Ok(())
    }
}

impl DynamicalSystem for PiController {
    fn state_names(&self) -> Vec<String> {
        names(&["z"])
    }
    fn dimension(&self) -> usize {
        1
    }
    fn input_names(&self) -> Vec<String> {
        names(&["ref", "meas"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["v"])
    }
    fn direct_feedthrough(&self) -> bool {
        true
    }
    fn rhs(&self, _t: f64, _s: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = u[0] - u[1];
    }
    fn outputs(&self, _t: f64, s: &[f64], u: &[f64], y: &mut [f64]) {
        y[0] = self.kp * (u[0] - u[1]) + self.ki * s[0];
    }
}

/// `e = ref - meas`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorBlock;

impl DynamicalSystem for ErrorBlock {
    fn state_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn dimension(&self) -> usize {
        0
    }
    fn input_names(&self) -> Vec<String> {
        names(&["ref", "meas"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["e"])
    }
    fn direct_feedthrough(&self) -> bool {
        true
    }
    fn rhs(&self, _t: f64, _s: &[f64], _u: &[f64], _dx: &mut [f64]) {}
    fn outputs(&self, _t: f64, _s: &[f64], u: &[f64], y: &mut [f64]) {
        y[0] = u[0] - u[1];
    }
}

/// Classical swing equation in per unit:
/// `dδ/dt = ω_s ω`, `2H dω/dt = τ_m - p_e - D ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingMachine {
    pub inertia: f64,
    pub damping: f64,
    pub omega_s: f64,
}

impl DynamicalSystem for SwingMachine {
    fn state_names(&self) -> Vec<String> {
        names(&["delta", "omega"])
    }
    fn dimension(&self) -> usize {
        2
    }
    fn input_names(&self) -> Vec<String> {
        names(&["tm", "pe"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["delta", "omega"])
    }
    fn rhs(&self, _t: f64, s: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = self.omega_s * s[1];
        dx[1] = (u[0] - u[1] - self.damping * s[1]) / (2.0 * self.inertia);
    }
    fn outputs(&self, _t: f64, s: &[f64], _u: &[f64], y: &mut [f64]) {
        y[0] = s[0];
        y[1] = s[1];
    }
}

/// First-order governor with droop: `T dp/dt = p_ref - ω/R - p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Governor {
    pub time_constant: f64,
    pub droop: f64,
}

impl DynamicalSystem for Governor {
    fn state_names(&self) -> Vec<String> {
        names(&["pg"])
    }
    fn dimension(&self) -> usize {
        1
    }
    fn input_names(&self) -> Vec<String> {
        names(&["pref", "omega"])
    }
    fn output_names(&self) -> Vec<String> {
        names(&["pg"])
    }
    fn rhs(&self, _t: f64, s: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = (u[0] - u[1] / self.droop - s[0]) / self.time_constant;
    }
    fn outputs(&self, _t: f64, s: &[f64], _u: &[f64], y: &mut [f64]) {
        y[0] = s[0];
    }
}

/// Lossless network between machines and an infinite bus at angle zero:
/// `p_e,i = Σ_j B_ij sin(δ_i - δ_j) + B_i0 sin δ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    coupling: Matrix,
    tie: Vec<f64>,
}

impl Network {
    pub fn new(coupling: Matrix, tie: Vec<f64>) -> Result<Self, String> {
        let n = tie.len();
        if coupling.rows() != n || coupling.cols() != n {
            return Err(format!("coupling must be {n}x{n}"));
        }
        for i in 0..n {
            for j in 0..n {
                if coupling[(i, j)] != coupling[(j, i)] {
                    return Err(format!("coupling is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { coupling, tie })
    }

    pub fn size(&self) -> usize {
        self.tie.len()
    }
}

impl DynamicalSystem for Network {
    fn state_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn dimension(&self) -> usize {
        0
    }
    fn input_names(&self) -> Vec<String> {
        (1..=self.size()).map(|i| format!("delta{i}")).collect()
    }
    fn output_names(&self) -> Vec<String> {
        (1..=self.size()).map(|i| format!("pe{i}")).collect()
    }
    fn direct_feedthrough(&self) -> bool {
        true
    }
    fn rhs(&self, _t: f64, _s: &[f64], _u: &[f64], _dx: &mut [f64]) {}
    fn outputs(&self, _t: f64, _s: &[f64], delta: &[f64], pe: &mut [f64]) {
        let n = self.size();
        for i in 0..n {
            let mut p = self.tie[i] * delta[i].sin();
            for j in 0..n {
                if j != i {
                    p += self.coupling[(i, j)] * (delta[i] - delta[j]).sin();
                }
            }
            pe[i] = p;
        }
    }
}
