//! Time integration of state-space systems.

mod compose;
mod input;
mod integrate;
mod trace;

pub use compose::{compose, Block, ComposeError, Composite, DiscreteBlock, Wiring};
pub use input::InputSignal;
pub use integrate::{integrate_adaptive, integrate_fixed, integrate_hybrid, AdaptiveOptions, IntegrationError, Method};
pub(crate) use trace::write_csv_value;
pub use trace::SimulationTrace;

/// A continuous-time block `dx/dt = f(t, x, u)`, `y = h(t, x, u)`.
///
/// Port and state names are fixed for the lifetime of a value; vector
/// arguments always have the lengths those names imply.
pub trait DynamicalSystem: Send + Sync {
    fn state_names(&self) -> Vec<String>;

    fn dimension(&self) -> usize {
        self.state_names().len()
    }

    fn input_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn output_names(&self) -> Vec<String> {
        Vec::new()
    }

    /// Whether `outputs` reads `inputs`. Blocks that only read their state
    /// break algebraic loops.
    fn direct_feedthrough(&self) -> bool {
        false
    }

    fn rhs(&self, t: f64, state: &[f64], inputs: &[f64], dx: &mut [f64]);

    fn outputs(&self, _t: f64, _state: &[f64], _inputs: &[f64], _y: &mut [f64]) {}
}

impl<S: DynamicalSystem + ?Sized> DynamicalSystem for Box<S> {
    fn state_names(&self) -> Vec<String> {
        (**self).state_names()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn input_names(&self) -> Vec<String> {
        (**self).input_names()
    }
    fn output_names(&self) -> Vec<String> {
        (**self).output_names()
    }
    fn direct_feedthrough(&self) -> bool {
        (**self).direct_feedthrough()
    }
    fn rhs(&self, t: f64, state: &[f64], inputs: &[f64], dx: &mut [f64]) {
        (**self).rhs(t, state, inputs, dx)
    }
    fn outputs(&self, t: f64, state: &[f64], inputs: &[f64], y: &mut [f64]) {
        (**self).outputs(t, state, inputs, y)
    }
}

type RhsFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// Closure-backed system with no outputs, mostly for tests and ad-hoc models.
pub struct FnSystem {
    states: Vec<String>,
    inputs: Vec<String>,
    f: Box<RhsFn>,
}

impl FnSystem {
    pub fn new<F>(dimension: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { states: (0..dimension).map(|i| format!("x{i}")).collect(), inputs: Vec::new(), f: Box::new(f) }
    }

    pub fn with_inputs(mut self, names: &[&str]) -> Self {
        self.inputs = names.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl DynamicalSystem for FnSystem {
    fn state_names(&self) -> Vec<String> {
        self.states.clone()
    }
    fn dimension(&self) -> usize {
        self.states.len()
    }
    fn input_names(&self) -> Vec<String> {
        self.inputs.clone()
    }
    fn rhs(&self, t: f64, state: &[f64], inputs: &[f64], dx: &mut [f64]) {
        (self.f)(t, state, inputs, dx)
    }
}
