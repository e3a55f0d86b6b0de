//! Reproducible scenarios built from the limiter models, the integrator
//! and the linear analysis.
//!
//! A [`Scenario`] is plain data: it serializes to TOML, and
//! [`Scenario::run`] / [`Scenario::linearize`] are deterministic functions
//! of it.

pub mod metrics;
mod models;
pub mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{PiController, PlantRL};
use crate::linear::{small_signal_report, EquilibriumOptions, LinearError, LinearizationResult};
use crate::ode::{integrate_hybrid, AdaptiveOptions, ComposeError, IntegrationError, Method, SimulationTrace};
use crate::rate_limiter::{ParamError, RateLimiterParams};

pub use models::Built;
pub use sweep::{sweep_csv, sweep_gains, SweepGrid, SweepMetrics, SweepOutcome, SweepRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Linear(#[from] LinearError),
}

/// Which limiter model sits in the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    None,
    Conventional,
    Smooth,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::None, Variant::Conventional, Variant::Smooth];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Conventional => "conventional",
            Variant::Smooth => "smooth",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Variant::None),
            "conventional" => Ok(Variant::Conventional),
            "smooth" => Ok(Variant::Smooth),
            other => Err(format!("unknown variant {other:?} (expected none|conventional|smooth)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the reduced multi-machine system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimachineModel {
    /// Inertia constant H, s.
    pub inertia: f64,
    /// Damping D, pu.
    pub damping: f64,
    /// Synchronous speed, rad/s.
    pub omega_s: f64,
    pub governor_time_constant: f64,
    pub droop: f64,
    /// Symmetric machine-to-machine coupling, pu; diagonal ignored.
    pub coupling: Vec<Vec<f64>>,
    /// Coupling of each machine to the infinite bus, pu.
    pub tie: Vec<f64>,
    /// Pre-disturbance power order of each machine, pu.
    pub p0: Vec<f64>,
    /// Step in the power order, pu.
    pub disturbance: f64,
    /// Machine receiving the step, 1-based.
    pub disturbed_machine: usize,
    pub limiter: RateLimiterParams,
}

impl MultimachineModel {
    pub fn machines(&self) -> usize {
        self.tie.len()
    }
}

/// The system under study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Model {
    /// Limiter alone, input stepping from 0 to `amplitude` at t = 0.
    StepResponse { amplitude: f64, limiter: RateLimiterParams },
    /// Current plant under PI control with a limiter on the PI output.
    PiRlLoop { plant: PlantRL, pi: PiController, i_ref: f64, limiter: RateLimiterParams },
    /// Current plant driven directly by the regulator form of the smooth
    /// limiter with `g = i_ref - i`.
    SmoothRegulator { plant: PlantRL, i_ref: f64, limiter: RateLimiterParams },
    /// Cascaded power and current PI loops on the current plant with a
    /// limiter on the voltage command; stands in for a grid-following
    /// converter in power control.
    StiffGfl { plant: PlantRL, outer: PiController, inner: PiController, p_ref: f64, limiter: RateLimiterParams },
    /// Swing-equation machines with governors whose torque passes through a
    /// limiter.
    Multimachine(MultimachineModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::StepResponse { .. } => "step-response",
            Model::PiRlLoop { .. } => "pi-rl-loop",
            Model::SmoothRegulator { .. } => "smooth-regulator",
            Model::StiffGfl { .. } => "stiff-gfl",
            Model::Multimachine(_) => "multimachine",
        }
    }

    pub fn limiter(&self) -> &RateLimiterParams {
        match self {
            Model::StepResponse { limiter, .. }
            | Model::PiRlLoop { limiter, .. }
            | Model::SmoothRegulator { limiter, .. }
            | Model::StiffGfl { limiter, .. } => limiter,
            Model::Multimachine(m) => &m.limiter,
        }
    }

    pub fn limiter_mut(&mut self) -> &mut RateLimiterParams {
        match self {
            Model::StepResponse { limiter, .. }
            | Model::PiRlLoop { limiter, .. }
            | Model::SmoothRegulator { limiter, .. }
            | Model::StiffGfl { limiter, .. } => limiter,
            Model::Multimachine(m) => &mut m.limiter,
        }
    }

    /// Exported trace columns holding the limiter output and its rate.
    pub fn limiter_signals(&self) -> (String, String) {
        match self {
            Model::StepResponse { .. } => ("y".into(), "ydot".into()),
            Model::Multimachine(m) => (format!("tm{}", m.disturbed_machine), format!("tmdot{}", m.disturbed_machine)),
            _ => ("v".into(), "vdot".into()),
        }
    }

    pub fn supports(&self, variant: Variant) -> bool {
        !matches!(self, Model::SmoothRegulator { .. }) || variant == Variant::Smooth
    }
}

/// A named, fully specified experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub variant: Variant,
    pub t_end: f64,
    /// Sample period of the conventional limiter, s.
    pub h_ctrl: f64,
    pub solver: Method,
    pub model: Model,
}

/// `(kp, ki)` pairs of the rate-limited PI comparison: every combination
/// of kp in {0.1, 0.5, 1} and ki in {0, 5, 20}.
pub fn pi_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for kp in [0.1, 0.5, 1.0] {
        for ki in [0.0, 5.0, 20.0] {
            out.push((kp, ki));
        }
    }
    out
}

/// Names of the built-in scenarios.
pub const BUILTIN: [&str; 5] = ["step-response", "pi-rl-loop", "smooth-regulator", "stiff-gfl", "multimachine"];

impl Scenario {
    /// Built-in scenario by name, in its default variant.
    pub fn builtin(name: &str) -> Option<Scenario> {
        Some(match name {
            "step-response" => Self::step_response(Variant::Smooth),
            "pi-rl-loop" => Self::pi_rl_loop(0.5, 5.0),
            "smooth-regulator" => Self::smooth_regulator(),
            "stiff-gfl" => Self::stiff_gfl(Variant::Smooth),
            "multimachine" => Self::multimachine(3, Variant::Smooth),
            _ => return None,
        })
    }

    /// Limiter alone: ±0.05 pu/s, k = (1800, 120, 0.1), step 0 → 0.15 pu.
    pub fn step_response(variant: Variant) -> Scenario {
        Scenario {
            name: "step-response".into(),
            variant,
            t_end: 25.0,
            h_ctrl: 0.01,
            solver: Method::Adaptive(AdaptiveOptions::default()),
            model: Model::StepResponse {
                amplitude: 0.15,
                limiter: RateLimiterParams::symmetric(0.05, 1800.0, 120.0, 0.1).expect("valid"),
            },
        }
    }

    /// Conventional limiter (±5 /s) on a PI driving `l = 1 mH`, `r = 0.1 Ω`,
    /// reference step 0 → 15 A.
    pub fn pi_rl_loop(kp: f64, ki: f64) -> Scenario {
        Scenario {
            name: "pi-rl-loop".into(),
            variant: Variant::Conventional,
            t_end: 4.0,
            h_ctrl: 1e-4,
            solver: Method::Rk4 { h: 1e-4 },
            model: Model::PiRlLoop {
                plant: PlantRL { l: 1e-3, r: 0.1 },
                pi: PiController { kp, ki },
                i_ref: 15.0,
                limiter: RateLimiterParams::symmetric(5.0, 155.5, 63.0, 10.0).expect("valid"),
            },
        }
    }

    /// Regulator form with k = (155.5, 63, 10), ±5 /s on the same plant.
    pub fn smooth_regulator() -> Scenario {
        Scenario {
            name: "smooth-regulator".into(),
            variant: Variant::Smooth,
            t_end: 4.0,
            h_ctrl: 1e-4,
            solver: Method::Adaptive(AdaptiveOptions::default()),
            model: Model::SmoothRegulator {
                plant: PlantRL { l: 1e-3, r: 0.1 },
                i_ref: 15.0,
                limiter: RateLimiterParams::symmetric(5.0, 155.5, 63.0, 10.0).expect("valid"),
            },
        }
    }

    /// Cascaded-loop surrogate with the stiff gains k = (14.5e6, 2.69e3,
    /// 0.1), ±5 pu/s, and a 1e-3 pu power reference step.
    pub fn stiff_gfl(variant: Variant) -> Scenario {
        Scenario {
            name: "stiff-gfl".into(),
            variant,
            t_end: 2.0,
            h_ctrl: 1e-5,
            solver: Method::Adaptive(AdaptiveOptions { h_max: 1e-3, ..AdaptiveOptions::default() }),
            model: Model::StiffGfl {
                plant: PlantRL { l: 1e-3, r: 0.1 },
                outer: PiController { kp: 0.5, ki: 100.0 },
                inner: PiController { kp: 1.0, ki: 100.0 },
                p_ref: 1e-3,
                limiter: RateLimiterParams::symmetric(5.0, 14.5e6, 2.69e3, 0.1).expect("valid"),
            },
        }
    }

    /// `n` swing machines tied to each other and to an infinite bus, with a
    /// +0.7 pu power-order step on machine 1 and ±0.1 pu/s torque limits.
    pub fn multimachine(n: usize, variant: Variant) -> Scenario {
        let coupling = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 0.2 + 0.05 * ((i + j) % 3) as f64 }).collect())
            .collect();
        Scenario {
            name: "multimachine".into(),
            variant,
            t_end: 15.0,
            h_ctrl: 1e-3,
            solver: Method::Adaptive(AdaptiveOptions { h_max: 1e-2, ..AdaptiveOptions::default() }),
            model: Model::Multimachine(MultimachineModel {
                inertia: 4.0,
                damping: 1.0,
                omega_s: 2.0 * std::f64::consts::PI * 60.0,
                governor_time_constant: 0.5,
                droop: 0.05,
                coupling,
                tie: (0..n).map(|i| 0.4 + 0.1 * (i % 3) as f64).collect(),
                p0: vec![0.1; n],
                disturbance: 0.7,
                disturbed_machine: 1,
                limiter: RateLimiterParams::symmetric(0.1, 1e6, 3e4, 0.1).expect("valid"),
            }),
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Scenario {
        self.variant = variant;
        self
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.h_ctrl > 0.0 && self.h_ctrl.is_finite()) {
            return bad(format!("h_ctrl must be positive, got {}", self.h_ctrl));
        }
        self.solver.validate()?;
        if !self.model.supports(self.variant) {
            return Err(ScenarioError::Unsupported(format!(
                "scenario kind {} has no {} variant",
                self.model.kind(),
                self.variant
            )));
        }
        models::validate(&self.model)
    }

    /// Assembles the block diagram for the configured variant.
    pub fn build(&self) -> Result<Built, ScenarioError> {
        self.validate()?;
        models::build(self)
    }

    /// Simulates from the pre-disturbance equilibrium over `[0, t_end]`.
    pub fn run(&self) -> Result<SimulationTrace, ScenarioError> {
        let mut built = self.build()?;
        let x0 = built.initial_state()?;
        let raw = integrate_hybrid(&mut built.system, &built.inputs, &x0, (0.0, self.t_end), &self.solver)?;
        let picks: Vec<(&str, &str)> = built.columns.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Ok(raw.select(&picks).expect("scenario columns exist"))
    }

    /// Small-signal report at the pre-disturbance operating point.
    ///
    /// The conventional limiter has no Jacobian: at an equilibrium its
    /// output simply equals its input, so a linearization would silently
    /// coincide with the no-limiter case. That request is refused.
    pub fn linearize(&self) -> Result<LinearizationResult, ScenarioError> {
        if self.variant == Variant::Conventional {
            return Err(ScenarioError::Unsupported(
                "the conventional rate limiter is discontinuous and cannot be linearized; \
                 its rate bounds vanish at an equilibrium, so use --variant none for the \
                 equivalent baseline or --variant smooth to include the limiter"
                    .into(),
            ));
        }
        let built = self.build()?;
        Ok(small_signal_report(&built.system, &built.operating_inputs, &built.guess, &EquilibriumOptions::default())?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Scenario, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_round_trip_through_toml() {
        for name in BUILTIN {
            let sc = Scenario::builtin(name).unwrap();
            sc.validate().unwrap();
            let text = sc.to_toml();
            let back = Scenario::from_toml(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(back, sc);
            assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = Scenario::step_response(Variant::Smooth).to_toml();
        text = text.replace("t_end = ", "bogus = 1\nt_end = ");
        assert!(Scenario::from_toml(&text).is_err());
    }

    #[test]
    fn regulator_only_smooth() {
        let sc = Scenario::smooth_regulator().with_variant(Variant::Conventional);
        assert!(matches!(sc.validate(), Err(ScenarioError::Unsupported(_))));
    }

    #[test]
    fn conventional_linearization_refused() {
        let sc = Scenario::step_response(Variant::Conventional);
        assert!(matches!(sc.linearize(), Err(ScenarioError::Unsupported(_))));
    }
}
