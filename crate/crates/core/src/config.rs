//! Run configuration and the jobs behind each command-line verb.
//!
//! A [`RunConfig`] names a scenario (built-in or a TOML file), optional
//! solver and horizon overrides, an output directory and what to compute.
//! [`RunConfig::resolve`] applies and validates every override before any
//! computation starts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cases::{sweep_csv, sweep_gains, Scenario, ScenarioError, SweepGrid, SweepOutcome, Variant, BUILTIN};
use crate::io::write_atomic;
use crate::linear::LinearizationResult;
use crate::ode::{AdaptiveOptions, Method};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown scenario {0:?}: not a built-in name and no such file")]
    UnknownScenario(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl ConfigError {
    /// Process exit status: 2 for bad input, 3 for requests the model
    /// cannot honour, 4 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Parse { .. } | ConfigError::UnknownScenario(_) | ConfigError::Invalid(_) => 2,
            ConfigError::Read { .. } => 2,
            ConfigError::Write { .. } => 1,
            ConfigError::Scenario(e) => match e {
                ScenarioError::Unsupported(_) => 3,
                ScenarioError::Integration(_) | ScenarioError::Linear(_) => 4,
                ScenarioError::Invalid(_) | ScenarioError::Param(_) | ScenarioError::Compose(_) => 2,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Rk4,
    Adaptive,
}

impl std::str::FromStr for MethodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" => Ok(MethodKind::Rk4),
            "adaptive" => Ok(MethodKind::Adaptive),
            other => Err(format!("unknown method {other:?} (expected rk4|adaptive)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Trace,
    SmallSignal,
    Sweep,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Trace]
}

fn is_default_out(p: &Path) -> bool {
    p == Path::new("out")
}

fn is_default_analyses(a: &[Analysis]) -> bool {
    a == [Analysis::Trace]
}

/// What to run and where to put the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in scenario name, or path to a scenario TOML file.
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodKind>,
    /// Fixed step for rk4, initial step for adaptive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_out", skip_serializing_if = "is_default_out")]
    pub out: PathBuf,
    /// Worker threads for sweeps; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default = "default_analyses", skip_serializing_if = "is_default_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
}

impl RunConfig {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            variant: None,
            method: None,
            h: None,
            rtol: None,
            atol: None,
            t_end: None,
            out: default_out(),
            jobs: None,
            analyses: default_analyses(),
            sweep: None,
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Canonical TOML form; parsing it gives back an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The scenario with every override applied, fully validated.
    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, v) in [("h", self.h), ("rtol", self.rtol), ("atol", self.atol)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive and finite, got {v}"));
                }
            }
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("t_end must be non-negative and finite, got {t}"));
            }
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if let Some(grid) = &self.sweep {
            if grid.is_empty() {
                return bad("sweep grid has no points".into());
            }
        }

        let mut sc = load_scenario(&self.scenario)?;
        if let Some(v) = self.variant {
            sc.variant = v;
        }
        if let Some(t) = self.t_end {
            sc.t_end = t;
        }
        let kind = self.method.unwrap_or(match sc.solver {
            Method::Rk4 { .. } => MethodKind::Rk4,
            Method::Adaptive(_) => MethodKind::Adaptive,
        });
        sc.solver = match (kind, sc.solver) {
            (MethodKind::Rk4, current) => {
                if self.rtol.is_some() || self.atol.is_some() {
                    return bad("rtol and atol apply to the adaptive method only".into());
                }
                let h = match (self.h, current) {
                    (Some(h), _) => h,
                    (None, Method::Rk4 { h }) => h,
                    (None, Method::Adaptive(_)) => sc.h_ctrl,
                };
                Method::Rk4 { h }
            }
            (MethodKind::Adaptive, current) => {
                let mut o = match current {
                    Method::Adaptive(o) => o,
                    Method::Rk4 { .. } => AdaptiveOptions::default(),
                };
                if let Some(r) = self.rtol {
                    o.rtol = r;
                }
                if let Some(a) = self.atol {
                    o.atol = a;
                }
                if let Some(h) = self.h {
                    o.h_init = h;
                    o.h_min = o.h_min.min(h);
                    o.h_max = o.h_max.max(h);
                }
                Method::Adaptive(o)
            }
        };
        sc.validate()?;
        Ok(sc)
    }

    fn scenario_dir(&self, sc: &Scenario) -> PathBuf {
        self.out.join(&sc.name)
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), ConfigError> {
    write_atomic(path, text.as_bytes())
        .map_err(|source| ConfigError::Write { path: path.display().to_string(), source })
}

/// Built-in scenario by name, otherwise a scenario TOML file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario, ConfigError> {
    if let Some(sc) = Scenario::builtin(name_or_path) {
        return Ok(sc);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(ConfigError::UnknownScenario(name_or_path.to_string()));
    }
    let text = read(path)?;
    Scenario::from_toml(&text)
        .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })
}

/// Built-in scenarios with one-line descriptions.
pub fn list_scenarios() -> Vec<(&'static str, &'static str)> {
    BUILTIN
        .iter()
        .map(|&name| {
            let about = match name {
                "step-response" => "limiter alone, 0 -> 0.15 pu input step, +-0.05 pu/s",
                "pi-rl-loop" => "PI current control of an RL plant through a rate limiter",
                "smooth-regulator" => "RL plant regulated directly by the smooth limiter",
                "stiff-gfl" => "cascaded power/current loops with a stiff smooth limiter",
                "multimachine" => "3 swing machines with rate-limited governor torque",
                _ => "",
            };
            (name, about)
        })
        .collect()
}

/// TOML for a scenario, ready to be edited and passed back as a file.
pub fn export_scenario(name: &str, variant: Option<Variant>) -> Result<String, ConfigError> {
    let mut sc = Scenario::builtin(name).ok_or_else(|| ConfigError::UnknownScenario(name.to_string()))?;
    if let Some(v) = variant {
        sc.variant = v;
    }
    sc.validate()?;
    Ok(sc.to_toml())
}

/// Outcome of `simulate`.
#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub scenario: String,
    pub variant: Variant,
    pub path: PathBuf,
    pub rows: usize,
    /// Last row of the exported columns.
    pub final_values: Vec<(String, f64)>,
    /// Largest `|ydot|` of the limiter, when the variant has one.
    pub peak_rate: Option<f64>,
    pub wall: Duration,
}

impl fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {} rows, final", self.scenario, self.variant, self.rows)?;
        for (name, v) in &self.final_values {
            write!(f, " {name}={v:.6e}")?;
        }
        if let Some(p) = self.peak_rate {
            write!(f, ", peak |ydot|={p:.6e}")?;
        }
        write!(f, ", {:.3} s -> {}", self.wall.as_secs_f64(), self.path.display())
    }
}

/// Runs the scenario and writes `<out>/<scenario>/trace.csv`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateSummary, ConfigError> {
    let sc = cfg.resolve()?;
    let start = Instant::now();
    let trace = sc.run()?;
    let wall = start.elapsed();
    let path = cfg.scenario_dir(&sc).join("trace.csv");
    write(&path, &trace.to_csv())?;
    let last = trace.len() - 1;
    let final_values = trace.columns().iter().cloned().zip(trace.row(last).iter().copied()).collect();
    let (_, rate) = sc.model.limiter_signals();
    let peak_rate = trace.column(&rate).map(|c| crate::cases::metrics::peak_abs(&c));
    Ok(SimulateSummary {
        scenario: sc.name.clone(),
        variant: sc.variant,
        path,
        rows: trace.len(),
        final_values,
        peak_rate,
        wall,
    })
}

/// Outcome of `linearize`.
#[derive(Debug, Clone)]
pub struct LinearizeSummary {
    pub scenario: String,
    pub variant: Variant,
    pub dir: PathBuf,
    pub report: LinearizationResult,
}

impl fmt::Display for LinearizeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {} states, ", self.scenario, self.variant, self.report.dimension())?;
        match self.report.dominant() {
            Some(d) => write!(f, "dominant pole {:.6e}{:+.6e}j", d.re, d.im)?,
            None => write!(f, "no poles")?,
        }
        let verdict = if self.report.stable { "stable" } else { "unstable" };
        write!(f, ", {verdict} -> {}", self.dir.display())
    }
}

/// Writes `poles.csv`, `state_matrix.csv` and `pole_map.csv`. The pole map
/// also carries the no-limiter baseline when the scenario has one, so the
/// two spectra can be overlaid.
pub fn cmd_linearize(cfg: &RunConfig) -> Result<LinearizeSummary, ConfigError> {
    let sc = cfg.resolve()?;
    let report = sc.linearize()?;
    let dir = cfg.scenario_dir(&sc);
    write(&dir.join("poles.csv"), &report.poles_csv())?;
    write(&dir.join("state_matrix.csv"), &report.state_matrix_csv())?;
    let mut map = String::from("case,re,im\n");
    report.pole_map_rows(sc.variant.as_str(), &mut map);
    if sc.variant != Variant::None && sc.model.supports(Variant::None) {
        let base = sc.clone().with_variant(Variant::None).linearize()?;
        base.pole_map_rows(Variant::None.as_str(), &mut map);
    }
    write(&dir.join("pole_map.csv"), &map)?;
    Ok(LinearizeSummary { scenario: sc.name.clone(), variant: sc.variant, dir, report })
}

/// Gains at half, one and two times the scenario's own, per axis.
pub fn default_grid(sc: &Scenario) -> SweepGrid {
    let p = sc.model.limiter();
    let axis = |k: f64| vec![0.5 * k, k, 2.0 * k];
    SweepGrid { k1: axis(p.k1()), k2: axis(p.k2()), k3: axis(p.k3()) }
}

/// Outcome of `sweep`.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub scenario: String,
    pub path: PathBuf,
    pub rows: usize,
    pub invalid: usize,
    pub failed: usize,
    pub wall: Duration,
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} grid points ({} invalid, {} failed), {:.3} s -> {}",
            self.scenario,
            self.rows,
            self.invalid,
            self.failed,
            self.wall.as_secs_f64(),
            self.path.display()
        )
    }
}

/// Writes `<out>/<scenario>/metrics.csv`, one row per grid point.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepSummary, ConfigError> {
    let sc = cfg.resolve()?;
    let grid = cfg.sweep.clone().unwrap_or_else(|| default_grid(&sc));
    let start = Instant::now();
    let rows = sweep_gains(&sc, &grid, cfg.jobs)?;
    let wall = start.elapsed();
    let path = cfg.scenario_dir(&sc).join("metrics.csv");
    write(&path, &sweep_csv(&rows))?;
    let count = |f: fn(&SweepOutcome) -> bool| rows.iter().filter(|r| f(&r.outcome)).count();
    Ok(SweepSummary {
        scenario: sc.name.clone(),
        path,
        rows: rows.len(),
        invalid: count(|o| matches!(o, SweepOutcome::Invalid(_))),
        failed: count(|o| matches!(o, SweepOutcome::Failed(_))),
        wall,
    })
}

/// Runs every analysis listed in the config, in order, and returns one
/// summary line per analysis.
pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<String>, ConfigError> {
    cfg.resolve()?;
    let mut lines = Vec::new();
    for a in &cfg.analyses {
        lines.push(match a {
            Analysis::Trace => cmd_simulate(cfg)?.to_string(),
            Analysis::SmallSignal => cmd_linearize(cfg)?.to_string(),
            Analysis::Sweep => cmd_sweep(cfg)?.to_string(),
        });
    }
    Ok(lines)
}
