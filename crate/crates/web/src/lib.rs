//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function has a plain Rust counterpart (`*_curves`,
//! [`limiter_poles`]) that returns `Result<_, String>`, so the numerics can
//! be tested natively.

use smoothrl::cases::{Model, Scenario, Variant};
use smoothrl::ode::SimulationTrace;
use smoothrl::RateLimiterParams;
use wasm_bindgen::prelude::*;

/// Curves sampled on a common time grid, stored row by row.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    columns: Vec<String>,
    data: Vec<f64>,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn columns(&self) -> Vec<String> {
        self.columns.clone()
    }

    /// Row-major samples, `columns().length` values per row; the first
    /// column is time.
    #[wasm_bindgen(getter)]
    pub fn data(&self) -> Vec<f64> {
        self.data.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.columns.len()
    }
}

impl Curves {
    pub fn rows(&self) -> usize {
        self.data.len() / self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.data.iter().skip(j).step_by(self.columns.len()).copied().collect())
    }
}

const SAMPLES: usize = 400;

/// Resamples `(trace, column, label)` triples onto `SAMPLES + 1` uniform
/// points of `[0, t_end]`.
fn resample(t_end: f64, picks: &[(&SimulationTrace, &str, &str)]) -> Curves {
    let mut columns = vec!["t".to_string()];
    columns.extend(picks.iter().map(|(_, _, label)| label.to_string()));
    let mut data = Vec::with_capacity((SAMPLES + 1) * columns.len());
    for k in 0..=SAMPLES {
        let t = t_end * k as f64 / SAMPLES as f64;
        data.push(t);
        for (trace, col, _) in picks {
            data.push(trace.interpolate(col, t).unwrap_or(f64::NAN));
        }
    }
    Curves { columns, data }
}

fn params(rate: f64, k1: f64, k2: f64, k3: f64) -> Result<RateLimiterParams, String> {
    RateLimiterParams::symmetric(rate, k1, k2, k3).map_err(|e| e.to_string())
}

fn run(sc: &Scenario) -> Result<SimulationTrace, String> {
    sc.run().map_err(|e| e.to_string())
}

/// Conventional and smooth limiter responses to a step of `amplitude`.
/// Columns: `t, u, y_conventional, y_smooth, ydot_conventional, ydot_smooth`.
pub fn step_response_curves(
    rate: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    amplitude: f64,
    t_end: f64,
) -> Result<Curves, String> {
    if !(t_end > 0.0 && t_end <= 200.0) {
        return Err(format!("horizon must be in (0, 200] s, got {t_end}"));
    }
    let limiter = params(rate, k1, k2, k3)?;
    let mut sc = Scenario::step_response(Variant::Smooth);
    sc.t_end = t_end;
    sc.model = Model::StepResponse { amplitude, limiter };
    let smooth = run(&sc)?;
    let conventional = run(&sc.with_variant(Variant::Conventional))?;
    Ok(resample(
        t_end,
        &[
            (&smooth, "u", "u"),
            (&conventional, "y", "y_conventional"),
            (&smooth, "y", "y_smooth"),
            (&conventional, "ydot", "ydot_conventional"),
            (&smooth, "ydot", "ydot_smooth"),
        ],
    ))
}

/// Small-signal poles of the smooth limiter as `[re1, im1, re2, im2]`.
pub fn limiter_poles(rate: f64, k1: f64, k2: f64, k3: f64) -> Result<Vec<f64>, String> {
    let [a, b] = params(rate, k1, k2, k3)?.linearize().eigenvalues();
    Ok(vec![a.re, a.im, b.re, b.im])
}

/// Plant current under the smooth regulator (gains 155.5, 63, 10) and under a
/// rate-limited PI with gains `kp`, `ki`.
/// Columns: `t, i_ref, i_regulator, i_pi`.
pub fn regulator_vs_pi_curves(kp: f64, ki: f64, t_end: f64) -> Result<Curves, String> {
    if !(t_end > 0.0 && t_end <= 10.0) {
        return Err(format!("horizon must be in (0, 10] s, got {t_end}"));
    }
    let mut reg = Scenario::smooth_regulator();
    reg.t_end = t_end;
    let mut pi = Scenario::pi_rl_loop(kp, ki);
    pi.t_end = t_end;
    pi.validate().map_err(|e| e.to_string())?;
    let reg_trace = run(&reg)?;
    let pi_trace = run(&pi)?;
    Ok(resample(t_end, &[(&reg_trace, "i_ref", "i_ref"), (&reg_trace, "i", "i_regulator"), (&pi_trace, "i", "i_pi")]))
}

#[wasm_bindgen(js_name = stepResponse)]
pub fn step_response(rate: f64, k1: f64, k2: f64, k3: f64, amplitude: f64, t_end: f64) -> Result<Curves, JsError> {
    step_response_curves(rate, k1, k2, k3, amplitude, t_end).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = limiterPoles)]
pub fn limiter_poles_js(rate: f64, k1: f64, k2: f64, k3: f64) -> Result<Vec<f64>, JsError> {
    limiter_poles(rate, k1, k2, k3).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = regulatorVsPi)]
pub fn regulator_vs_pi(kp: f64, ki: f64, t_end: f64) -> Result<Curves, JsError> {
    regulator_vs_pi_curves(kp, ki, t_end).map_err(|e| JsError::new(&e))
}
