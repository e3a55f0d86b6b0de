use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::input::sample;
use super::{Composite, DynamicalSystem, InputSignal, SimulationTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error(
        "step size underflow at t = {t}: h = {h:e} below h_min = {h_min:e} \
         (system too stiff for the requested tolerances)"
    )]
    StepUnderflow { t: f64, h: f64, h_min: f64, state: Vec<f64> },
    #[error("step budget of {limit} exhausted at t = {t}")]
    TooManySteps { t: f64, limit: usize },
    #[error("invalid integration settings: {0}")]
    InvalidSettings(String),
    #[error("system expects {expected} {what}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
}

/// Step control for the embedded 5(4) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_init: 1e-6, h_min: 1e-14, h_max: 0.1, max_steps: 20_000_000 }
    }
}

impl AdaptiveOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |m: &str| Err(IntegrationError::InvalidSettings(m.to_string()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return bad("need 0 < h_min <= h_init <= h_max");
        }
        Ok(())
    }
}

/// Integration method selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    /// Classical Runge–Kutta with uniform step `h`.
    Rk4 {
        h: f64,
    },
    Adaptive(AdaptiveOptions),
}

impl Default for Method {
    fn default() -> Self {
        Method::Adaptive(AdaptiveOptions::default())
    }
}

impl Method {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        match self {
            Method::Rk4 { h } if !(*h > 0.0 && h.is_finite()) => {
                Err(IntegrationError::InvalidSettings(format!("step h must be positive, got {h}")))
            }
            Method::Rk4 { .. } => Ok(()),
            Method::Adaptive(o) => o.validate(),
        }
    }

    pub fn integrate<S: DynamicalSystem + ?Sized>(
        &self,
        sys: &S,
        inputs: &[InputSignal],
        x0: &[f64],
        t_span: (f64, f64),
    ) -> Result<SimulationTrace, IntegrationError> {
        match self {
            Method::Rk4 { h } => integrate_fixed(sys, inputs, x0, t_span, *h),
            Method::Adaptive(o) => integrate_adaptive(sys, inputs, x0, t_span, o),
        }
    }
}

/// Evaluation context shared by both integrators.
struct Evaluator<'a, S: ?Sized> {
    sys: &'a S,
    inputs: &'a [InputSignal],
    u: Vec<f64>,
    y: Vec<f64>,
    row: Vec<f64>,
}

impl<'a, S: DynamicalSystem + ?Sized> Evaluator<'a, S> {
    fn new(sys: &'a S, inputs: &'a [InputSignal], x0: &[f64]) -> Result<Self, IntegrationError> {
        let n_in = sys.input_names().len();
        if inputs.len() != n_in {
            return Err(IntegrationError::Dimension { what: "inputs", expected: n_in, got: inputs.len() });
        }
        let n = sys.dimension();
        if x0.len() != n {
            return Err(IntegrationError::Dimension { what: "states", expected: n, got: x0.len() });
        }
        for s in inputs {
            s.validate().map_err(IntegrationError::InvalidSettings)?;
        }
        let n_out = sys.output_names().len();
        Ok(Self { sys, inputs, u: vec![0.0; n_in], y: vec![0.0; n_out], row: Vec::with_capacity(n + n_out + n_in) })
    }

    fn trace(&self) -> SimulationTrace {
        let mut cols = self.sys.state_names();
        let n = cols.len();
        cols.extend(self.sys.output_names());
        cols.extend(self.sys.input_names());
        SimulationTrace::new(cols, n)
    }

    /// Returns false when the derivative is not finite.
    fn eval(&mut self, t: f64, x: &[f64], dx: &mut [f64]) -> bool {
        sample(self.inputs, t, &mut self.u);
        self.sys.rhs(t, x, &self.u, dx);
        dx.iter().all(|v| v.is_finite())
    }

    fn record(&mut self, trace: &mut SimulationTrace, t: f64, x: &[f64]) {
        sample(self.inputs, t, &mut self.u);
        self.sys.outputs(t, x, &self.u, &mut self.y);
        self.row.clear();
        self.row.extend_from_slice(x);
        self.row.extend_from_slice(&self.y);
        self.row.extend_from_slice(&self.u);
        trace.push(t, &self.row);
    }
}

fn check_span(t_span: (f64, f64)) -> Result<(), IntegrationError> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(IntegrationError::InvalidSettings(format!("bad time span ({t0}, {t1})")));
    }
    Ok(())
}

/// Classical fourth-order Runge–Kutta on a uniform grid; the final step is
/// shortened to land exactly on `t_span.1`.
pub fn integrate_fixed<S: DynamicalSystem + ?Sized>(
    sys: &S,
    inputs: &[InputSignal],
    x0: &[f64],
    t_span: (f64, f64),
    h: f64,
) -> Result<SimulationTrace, IntegrationError> {
    check_span(t_span)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegrationError::InvalidSettings(format!("step h must be positive, got {h}")));
    }
    let mut ev = Evaluator::new(sys, inputs, x0)?;
    let mut trace = ev.trace();
    let n = x0.len();
    let (t0, t1) = t_span;
    let steps = (((t1 - t0) / h) - 1e-9).ceil().max(0.0) as usize;

    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    ev.record(&mut trace, t0, &x);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let t_next = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        let dt = t_next - t;
        if !ev.eval(t, &x, &mut k1) {
            return Err(IntegrationError::NonFinite { t });
        }
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        if !ev.eval(t + 0.5 * dt, &tmp, &mut k2) {
            return Err(IntegrationError::NonFinite { t: t + 0.5 * dt });
        }
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        if !ev.eval(t + 0.5 * dt, &tmp, &mut k3) {
            return Err(IntegrationError::NonFinite { t: t + 0.5 * dt });
        }
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        if !ev.eval(t_next, &tmp, &mut k4) {
            return Err(IntegrationError::NonFinite { t: t_next });
        }
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        ev.record(&mut trace, t_next, &x);
    }
    Ok(trace)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Dormand–Prince 5(4) with per-component error control
/// `|err_i| <= atol + rtol * max(|x_i|, |x_new_i|)`. Every accepted step is
/// recorded. Steps are shortened to land on input breakpoints.
pub fn integrate_adaptive<S: DynamicalSystem + ?Sized>(
    sys: &S,
    inputs: &[InputSignal],
    x0: &[f64],
    t_span: (f64, f64),
    opts: &AdaptiveOptions,
) -> Result<SimulationTrace, IntegrationError> {
    check_span(t_span)?;
    opts.validate()?;
    let mut ev = Evaluator::new(sys, inputs, x0)?;
    let mut trace = ev.trace();
    let n = x0.len();
    let (t0, t1) = t_span;

    let mut breaks: Vec<f64> = inputs.iter().flat_map(|s| s.breakpoints()).filter(|&b| b > t0 && b < t1).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks.push(t1);
    let mut next_break = 0;

    let mut x = x0.to_vec();
    let mut x_new = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];

    ev.record(&mut trace, t0, &x);
    if t1 == t0 {
        return Ok(trace);
    }
    let mut t = t0;
    if !ev.eval(t, &x, &mut k[0]) {
        return Err(IntegrationError::NonFinite { t });
    }
    let mut h_prop = opts.h_init;
    let mut steps = 0usize;

    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(IntegrationError::TooManySteps { t, limit: opts.max_steps });
        }
        if h_prop < opts.h_min {
            return Err(IntegrationError::StepUnderflow { t, h: h_prop, h_min: opts.h_min, state: x });
        }
        let target = breaks[next_break];
        let mut h = h_prop.min(opts.h_max);
        let mut clipped = false;
        // land exactly when within a hair of the target
        if t + h >= target - 1e-12 * target.abs().max(1.0) {
            h = target - t;
            clipped = true;
        }

        let mut finite = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                tmp[i] = x[i] + h * acc;
            }
            if !ev.eval(t + C[s] * h, &tmp, &mut k[s]) {
                finite = false;
                break;
            }
            if s == 6 {
                x_new.copy_from_slice(&tmp);
            }
        }

        let err = if finite {
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                let scale = opts.atol + opts.rtol * x[i].abs().max(x_new[i].abs());
                worst = worst.max((h * e).abs() / scale);
            }
            worst
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            t = if clipped { target } else { t + h };
            std::mem::swap(&mut x, &mut x_new);
            ev.record(&mut trace, t, &x);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if clipped {
                next_break += 1;
                // a step shortened to land carries little information
                if factor < 1.0 && h >= 0.5 * h_prop {
                    h_prop *= factor;
                }
                // inputs may jump here; restart the first stage
                if t < t1 && !ev.eval(t, &x, &mut k[0]) {
                    return Err(IntegrationError::NonFinite { t });
                }
            } else {
                h_prop = h * factor;
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
        } else {
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h_prop = h * factor;
            if h_prop < opts.h_min && !(clipped && h < opts.h_min) {
                return Err(IntegrationError::StepUnderflow { t, h: h_prop, h_min: opts.h_min, state: x });
            }
        }
    }
    Ok(trace)
}

/// Integrates a composite whose discrete blocks run on a fixed control grid.
///
/// At each grid point after the first, discrete blocks sample their inputs
/// and update their held outputs; the continuous part is then integrated to
/// the next grid point with `method`. The recorded row at a grid time shows
/// the values after the update, except at `t_end`, where no update is made.
pub fn integrate_hybrid(
    sys: &mut Composite,
    inputs: &[InputSignal],
    x0: &[f64],
    t_span: (f64, f64),
    method: &Method,
) -> Result<SimulationTrace, IntegrationError> {
    check_span(t_span)?;
    method.validate()?;
    sys.reset_discrete();
    let Some(period) = sys.control_period() else {
        return method.integrate(&*sys, inputs, x0, t_span);
    };
    let (t0, t1) = t_span;
    let segments = (((t1 - t0) / period) - 1e-9).ceil().max(0.0) as usize;
    let mut x = x0.to_vec();
    let mut trace: Option<SimulationTrace> = None;
    let mut u = vec![0.0; inputs.len()];
    for seg in 0..segments.max(1) {
        let ta = t0 + seg as f64 * period;
        let tb = if seg + 1 >= segments { t1 } else { t0 + (seg + 1) as f64 * period };
        if seg > 0 {
            sample(inputs, ta, &mut u);
            sys.update_discrete(ta, &x, &u);
        }
        let seg_method = match *method {
            Method::Rk4 { h } => Method::Rk4 { h: h.min(period) },
            Method::Adaptive(o) => {
                Method::Adaptive(AdaptiveOptions { h_init: o.h_init.min(tb - ta).max(o.h_min), ..o })
            }
        };
        let part = seg_method.integrate(&*sys, inputs, &x, (ta, tb))?;
        x.copy_from_slice(part.last_state().expect("segment trace is never empty"));
        match trace.as_mut() {
            None => trace = Some(part),
            Some(tr) => {
                tr.pop();
                tr.extend_from(&part);
            }
        }
    }
    Ok(trace.expect("at least one segment"))
}
