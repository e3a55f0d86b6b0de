//! Limiter gain sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{first_crossing, peak_abs, settling_time};
use super::{Scenario, ScenarioError, Variant};
use crate::rate_limiter::RateLimiterParams;

/// Values for each gain; the sweep visits their Cartesian product with
/// `k1` varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k3: Vec<f64>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.k1.len() * self.k2.len() * self.k3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lexicographic order.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.len());
        for &a in &self.k1 {
            for &b in &self.k2 {
                for &c in &self.k3 {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }
}

/// Step-response figures of the limiter output for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMetrics {
    /// 2% settling time of the limiter output; `None` if it never settles.
    pub settling_time: Option<f64>,
    /// Largest excursion of the limiter rate against the direction of the
    /// step, relative to the rate bound in that direction.
    pub overshoot: f64,
    pub peak_ydot: f64,
    /// First time the rate reaches 90% of its bound; `None` if it never
    /// does.
    pub t90_ydot: Option<f64>,
    pub dominant_pole_re: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Ok(SweepMetrics),
    /// The gains are not admissible.
    Invalid(String),
    /// The gains are admissible but simulation or linearization failed.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gains: [f64; 3],
    pub outcome: SweepOutcome,
}

impl SweepRow {
    pub fn metrics(&self) -> Option<&SweepMetrics> {
        match &self.outcome {
            SweepOutcome::Ok(m) => Some(m),
            _ => None,
        }
    }
}

/// Runs `base` with the smooth limiter once per grid point, on up to `jobs`
/// worker threads (all cores when `None`). Rows come back in grid order
/// whatever the thread count.
pub fn sweep_gains(base: &Scenario, grid: &SweepGrid, jobs: Option<usize>) -> Result<Vec<SweepRow>, ScenarioError> {
    if grid.is_empty() {
        return Err(ScenarioError::Invalid("sweep grid has no points".into()));
    }
    let base = base.clone().with_variant(Variant::Smooth);
    base.validate()?;
    let points = grid.points();
    let work = || points.par_iter().map(|g| evaluate(&base, *g)).collect::<Vec<_>>();
    let rows = match jobs {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ScenarioError::Invalid(format!("thread pool: {e}")))?
            .install(work),
    };
    Ok(rows)
}

fn evaluate(base: &Scenario, gains: [f64; 3]) -> SweepRow {
    let limiter = base.model.limiter();
    let outcome = match limiter.with_gains(gains[0], gains[1], gains[2]) {
        Err(e) => SweepOutcome::Invalid(e.to_string()),
        Ok(params) => {
            let mut sc = base.clone();
            *sc.model.limiter_mut() = params;
            match measure(&sc, &params) {
                Ok(m) => SweepOutcome::Ok(m),
                Err(e) => SweepOutcome::Failed(e.to_string()),
            }
        }
    };
    SweepRow { gains, outcome }
}

fn measure(sc: &Scenario, params: &RateLimiterParams) -> Result<SweepMetrics, ScenarioError> {
    let trace = sc.run()?;
    let (y_name, ydot_name) = sc.model.limiter_signals();
    let y = trace.expect_column(&y_name);
    let ydot = trace.expect_column(&ydot_name);
    let times = trace.times();
    let (y0, y1) = (y[0], y[y.len() - 1]);
    let rising = y1 >= y0;
    let (bound, reverse) = if rising {
        (params.ydot_max(), -ydot.iter().copied().fold(0.0, f64::min))
    } else {
        (params.ydot_min(), ydot.iter().copied().fold(0.0, f64::max))
    };
    let report = sc.linearize()?;
    Ok(SweepMetrics {
        settling_time: settling_time(times, &y, y0, y1, 0.02),
        overshoot: reverse / bound.abs(),
        peak_ydot: peak_abs(&ydot),
        t90_ydot: first_crossing(times, &ydot, 0.9 * bound),
        dominant_pole_re: report.dominant().map_or(f64::NAN, |d| d.re),
    })
}

/// `metrics.csv`: one row per grid point with a `status` of `ok`,
/// `invalid` or `failed`. Metrics that do not exist are left empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("k1,k2,k3,status,settling_time,overshoot,peak_ydot,dominant_pole_re,t90_ydot\n");
    for row in rows {
        for g in row.gains {
            crate::ode::write_csv_value(&mut s, g);
            s.push(',');
        }
        match &row.outcome {
            SweepOutcome::Ok(m) => {
                s.push_str("ok");
                for v in [m.settling_time, Some(m.overshoot), Some(m.peak_ydot), Some(m.dominant_pole_re), m.t90_ydot] {
                    s.push(',');
                    if let Some(v) = v {
                        crate::ode::write_csv_value(&mut s, v);
                    }
                }
            }
            SweepOutcome::Invalid(_) => s.push_str("invalid,,,,,"),
            SweepOutcome::Failed(_) => s.push_str("failed,,,,,"),
        }
        s.push('\n');
    }
    s
}
