use serde::{Deserialize, Serialize};

/// Exogenous signal `u(t)`, defined for every `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSignal {
    Constant {
        value: f64,
    },
    /// `before` for `t < at`, `after` from `at` on.
    Step {
        at: f64,
        before: f64,
        after: f64,
    },
    /// `initial` until `at`, then rises with `slope`.
    Ramp {
        at: f64,
        initial: f64,
        slope: f64,
    },
    /// Linear interpolation through `(t, value)` points, held beyond the ends.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    /// Sampled data with zero-order hold between samples.
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl InputSignal {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn step(at: f64, before: f64, after: f64) -> Self {
        Self::Step { at, before, after }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Step { at, before, after } => {
                if t < *at {
                    *before
                } else {
                    *after
                }
            }
            Self::Ramp { at, initial, slope } => {
                if t < *at {
                    *initial
                } else {
                    initial + slope * (t - at)
                }
            }
            Self::PiecewiseLinear { points } => {
                let Some(first) = points.first() else {
                    return 0.0;
                };
                if t <= first.0 {
                    return first.1;
                }
                let idx = points.partition_point(|p| p.0 <= t);
                if idx >= points.len() {
                    return points[points.len() - 1].1;
                }
                let (t0, v0) = points[idx - 1];
                let (t1, v1) = points[idx];
                if t1 <= t0 {
                    return v1;
                }
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
            Self::Sampled { times, values } => {
                if times.is_empty() {
                    return 0.0;
                }
                let idx = times.partition_point(|&s| s <= t);
                values[idx.saturating_sub(1).min(values.len() - 1)]
            }
        }
    }

    /// Times where the signal or its slope jumps; integrators land on them.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Constant { .. } => Vec::new(),
            Self::Sampled { times, .. } => times.clone(),
            Self::Step { at, .. } | Self::Ramp { at, .. } => vec![*at],
            Self::PiecewiseLinear { points } => points.iter().map(|p| p.0).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: f64| v.is_finite();
        match self {
            Self::Constant { value } if !finite(*value) => Err("constant input is not finite".into()),
            Self::Step { at, before, after } if ![*at, *before, *after].into_iter().all(finite) => {
                Err("step input has non-finite fields".into())
            }
            Self::Ramp { at, initial, slope } if ![*at, *initial, *slope].into_iter().all(finite) => {
                Err("ramp input has non-finite fields".into())
            }
            Self::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err("piecewise-linear input needs at least one point".into());
                }
                if points.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err("piecewise-linear times must be non-decreasing".into());
                }
                Ok(())
            }
            Self::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err("sampled input needs equal, nonzero numbers of times and values".into());
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("sampled input times must be increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Input vector at `t`.
pub(crate) fn sample(inputs: &[InputSignal], t: f64, out: &mut [f64]) {
    for (o, s) in out.iter_mut().zip(inputs) {
        *o = s.value(t);
    }
}
