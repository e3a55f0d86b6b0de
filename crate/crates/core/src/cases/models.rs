use std::collections::HashMap;

use crate::blocks::{
    ConventionalRateLimiter, ErrorBlock, Governor, Network, Passthrough, SmoothRateLimiter, SmoothRegulator,
    SwingMachine,
};
use crate::linalg::Matrix;
use crate::linear::{find_equilibrium, EquilibriumOptions};
use crate::ode::{compose, Block, Composite, DynamicalSystem, InputSignal, Wiring};
use crate::rate_limiter::RateLimiterParams;

use super::{Model, MultimachineModel, Scenario, ScenarioError, Variant};

/// A scenario turned into something the engine can run.
pub struct Built {
    pub system: Composite,
    /// One signal per external input of `system`, in its order.
    pub inputs: Vec<InputSignal>,
    /// External inputs before the disturbance, used for the initial
    /// equilibrium and for linearization.
    pub operating_inputs: Vec<f64>,
    /// Newton starting point.
    pub guess: Vec<f64>,
    /// `(raw trace column, exported name)` pairs.
    pub columns: Vec<(String, String)>,
}

impl Built {
    /// Equilibrium under the operating inputs.
    pub fn initial_state(&self) -> Result<Vec<f64>, ScenarioError> {
        Ok(find_equilibrium(&self.system, &self.operating_inputs, &self.guess, &EquilibriumOptions::default())?)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

fn positive(name: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive, got {v}"))
    }
}

fn finite(name: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be finite, got {v}"))
    }
}

pub(super) fn validate(model: &Model) -> Result<(), ScenarioError> {
    match model {
        Model::StepResponse { amplitude, .. } => finite("amplitude", *amplitude),
        Model::PiRlLoop { plant, pi, i_ref, .. } => {
            plant.validate().map_err(ScenarioError::Invalid)?;
            pi.validate().map_err(ScenarioError::Invalid)?;
            finite("i_ref", *i_ref)
        }
        Model::SmoothRegulator { plant, i_ref, .. } => {
            plant.validate().map_err(ScenarioError::Invalid)?;
            finite("i_ref", *i_ref)
        }
        Model::StiffGfl { plant, outer, inner, p_ref, .. } => {
            plant.validate().map_err(ScenarioError::Invalid)?;
            outer.validate().map_err(ScenarioError::Invalid)?;
            inner.validate().map_err(ScenarioError::Invalid)?;
            finite("p_ref", *p_ref)
        }
        Model::Multimachine(m) => validate_multimachine(m),
    }
}

fn validate_multimachine(m: &MultimachineModel) -> Result<(), ScenarioError> {
    let n = m.machines();
    if n < 2 {
        return invalid(format!("need at least 2 machines, got {n}"));
    }
    positive("inertia", m.inertia)?;
    positive("omega_s", m.omega_s)?;
    positive("governor_time_constant", m.governor_time_constant)?;
    positive("droop", m.droop)?;
    if !(m.damping >= 0.0 && m.damping.is_finite()) {
        return invalid(format!("damping must be non-negative, got {}", m.damping));
    }
    if m.p0.len() != n {
        return invalid(format!("p0 has {} entries for {n} machines", m.p0.len()));
    }
    if m.coupling.len() != n || m.coupling.iter().any(|r| r.len() != n) {
        return invalid(format!("coupling must be {n}x{n}"));
    }
    if !(1..=n).contains(&m.disturbed_machine) {
        return invalid(format!("disturbed_machine must be in 1..={n}, got {}", m.disturbed_machine));
    }
    finite("disturbance", m.disturbance)?;
    for v in m.tie.iter().chain(&m.p0).chain(m.coupling.iter().flatten()) {
        finite("network data", *v)?;
    }
    coupling_matrix(m).map(|_| ())
}

fn coupling_matrix(m: &MultimachineModel) -> Result<Network, ScenarioError> {
    let n = m.machines();
    let b = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { m.coupling[i][j] });
    Network::new(b, m.tie.clone()).map_err(ScenarioError::Invalid)
}

/// The limiter block for `variant`; a passthrough when there is none.
fn limiter(variant: Variant, params: RateLimiterParams, h_ctrl: f64, initial: f64) -> Result<Block, ScenarioError> {
    Ok(match variant {
        Variant::None => Block::continuous(Passthrough),
        Variant::Conventional => Block::discrete(ConventionalRateLimiter::new(params, h_ctrl, initial)?),
        Variant::Smooth => Block::continuous(SmoothRateLimiter::new(params)),
    })
}

fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

/// Limiter output columns, with `ydot` only when the variant has one.
fn limiter_columns(variant: Variant, block: &str, y: &str, ydot: &str) -> Vec<(String, String)> {
    let mut cols = vec![(format!("{block}.y"), y.to_string())];
    if variant != Variant::None {
        cols.push((format!("{block}.ydot"), ydot.to_string()));
    }
    cols
}

struct Draft {
    blocks: Vec<(String, Block)>,
    wiring: Wiring,
    signals: HashMap<String, (InputSignal, f64)>,
    guess: HashMap<String, f64>,
    columns: Vec<(String, String)>,
}

impl Draft {
    fn new() -> Self {
        Self {
            blocks: Vec::new(),
            wiring: Wiring::new(),
            signals: HashMap::new(),
            guess: HashMap::new(),
            columns: Vec::new(),
        }
    }

    fn block(&mut self, name: &str, block: Block) {
        self.blocks.push((name.to_string(), block));
    }

    fn wire(&mut self, from: &str, to: &str) {
        self.wiring = std::mem::take(&mut self.wiring).connect(from, to);
    }

    /// External input stepping from `before` to `after` at t = 0.
    fn step_input(&mut self, name: &str, before: f64, after: f64) {
        self.signals.insert(name.to_string(), (InputSignal::step(0.0, before, after), before));
    }

    fn finish(self) -> Result<Built, ScenarioError> {
        let mut system = compose(self.blocks, &self.wiring)?;
        system.reset_discrete();
        let mut inputs = Vec::new();
        let mut operating_inputs = Vec::new();
        for name in system.input_names() {
            let Some((signal, op)) = self.signals.get(&name) else {
                return invalid(format!("no signal for external input {name:?}"));
            };
            inputs.push(signal.clone());
            operating_inputs.push(*op);
        }
        let guess = system.state_names().iter().map(|s| self.guess.get(s).copied().unwrap_or(0.0)).collect();
        Ok(Built { system, inputs, operating_inputs, guess, columns: self.columns })
    }
}

pub(super) fn build(sc: &Scenario) -> Result<Built, ScenarioError> {
    let v = sc.variant;
    let mut d = Draft::new();
    match &sc.model {
        Model::StepResponse { amplitude, limiter: p } => {
            d.block("rl", limiter(v, *p, sc.h_ctrl, 0.0)?);
            d.wire("u", "rl.u");
            d.step_input("u", 0.0, *amplitude);
            d.columns = pairs(&[("u", "u")]);
            d.columns.extend(limiter_columns(v, "rl", "y", "ydot"));
        }
        Model::PiRlLoop { plant, pi, i_ref, limiter: p } => {
            d.block("pi", Block::continuous(*pi));
            d.block("rl", limiter(v, *p, sc.h_ctrl, 0.0)?);
            d.block("plant", Block::continuous(*plant));
            d.wire("i_ref", "pi.ref");
            d.wire("plant.i", "pi.meas");
            d.wire("pi.v", "rl.u");
            d.wire("rl.y", "plant.v");
            d.step_input("i_ref", 0.0, *i_ref);
            d.columns = pairs(&[("i_ref", "i_ref"), ("plant.i", "i"), ("pi.v", "u"), ("pi.z", "z")]);
            d.columns.extend(limiter_columns(v, "rl", "v", "vdot"));
        }
        Model::SmoothRegulator { plant, i_ref, limiter: p } => {
            d.block("err", Block::continuous(ErrorBlock));
            d.block("rl", Block::continuous(SmoothRegulator { params: *p }));
            d.block("plant", Block::continuous(*plant));
            d.wire("i_ref", "err.ref");
            d.wire("plant.i", "err.meas");
            d.wire("err.e", "rl.g");
            d.wire("rl.y", "plant.v");
            d.step_input("i_ref", 0.0, *i_ref);
            d.columns = pairs(&[("i_ref", "i_ref"), ("plant.i", "i")]);
            d.columns.extend(limiter_columns(v, "rl", "v", "vdot"));
        }
        Model::StiffGfl { plant, outer, inner, p_ref, limiter: p } => {
            d.block("outer", Block::continuous(*outer));
            d.block("inner", Block::continuous(*inner));
            d.block("rl", limiter(v, *p, sc.h_ctrl, 0.0)?);
            d.block("plant", Block::continuous(*plant));
            d.wire("p_ref", "outer.ref");
            d.wire("plant.i", "outer.meas");
            d.wire("outer.v", "inner.ref");
            d.wire("plant.i", "inner.meas");
            d.wire("inner.v", "rl.u");
            d.wire("rl.y", "plant.v");
            d.step_input("p_ref", 0.0, *p_ref);
            d.columns = pairs(&[("p_ref", "p_ref"), ("plant.i", "p"), ("outer.v", "i_ref"), ("inner.v", "u")]);
            d.columns.extend(limiter_columns(v, "rl", "v", "vdot"));
        }
        Model::Multimachine(m) => build_multimachine(&mut d, m, v, sc.h_ctrl)?,
    }
    d.finish()
}

fn build_multimachine(d: &mut Draft, m: &MultimachineModel, v: Variant, h_ctrl: f64) -> Result<(), ScenarioError> {
    let machine = SwingMachine { inertia: m.inertia, damping: m.damping, omega_s: m.omega_s };
    let governor = Governor { time_constant: m.governor_time_constant, droop: m.droop };
    for k in 1..=m.machines() {
        let p0 = m.p0[k - 1];
        let (mk, gk, rk) = (format!("m{k}"), format!("gov{k}"), format!("rl{k}"));
        d.block(&mk, Block::continuous(machine));
        d.block(&gk, Block::continuous(governor));
        d.block(&rk, limiter(v, m.limiter, h_ctrl, p0)?);
        let pref = format!("pref{k}");
        d.wire(&pref, &format!("{gk}.pref"));
        d.wire(&format!("{mk}.omega"), &format!("{gk}.omega"));
        d.wire(&format!("{gk}.pg"), &format!("{rk}.u"));
        d.wire(&format!("{rk}.y"), &format!("{mk}.tm"));
        d.wire(&format!("net.pe{k}"), &format!("{mk}.pe"));
        d.wire(&format!("{mk}.delta"), &format!("net.delta{k}"));
        let after = if k == m.disturbed_machine { p0 + m.disturbance } else { p0 };
        d.step_input(&pref, p0, after);
        d.guess.insert(format!("{gk}.pg"), p0);
        d.guess.insert(format!("{rk}.y"), p0);
    }
    d.block("net", Block::continuous(coupling_matrix(m)?));
    for k in 1..=m.machines() {
        d.columns.push((format!("m{k}.omega"), format!("omega{k}")));
    }
    for k in 1..=m.machines() {
        d.columns.push((format!("m{k}.delta"), format!("delta{k}")));
    }
    for k in 1..=m.machines() {
        d.columns.push((format!("gov{k}.pg"), format!("pg{k}")));
        d.columns.extend(limiter_columns(v, &format!("rl{k}"), &format!("tm{k}"), &format!("tmdot{k}")));
    }
    Ok(())
}
