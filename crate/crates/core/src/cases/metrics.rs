//! Scalar summaries of step responses.

/// Time after which `values` stays within `band * |target - initial|` of
/// `target`. `None` when the last sample is outside the band.
pub fn settling_time(times: &[f64], values: &[f64], initial: f64, target: f64, band: f64) -> Option<f64> {
    let tol = band * (target - initial).abs().max(f64::MIN_POSITIVE);
    let outside = |v: f64| (v - target).abs() > tol;
    match values.iter().rposition(|&v| outside(v)) {
        None => times.first().copied(),
        Some(k) if k + 1 == values.len() => None,
        Some(k) => Some(times[k + 1]),
    }
}

/// Peak excursion beyond `target`, in the direction of travel from
/// `initial`, as a fraction of the step size. Zero when never exceeded.
pub fn overshoot(values: &[f64], initial: f64, target: f64) -> f64 {
    let step = target - initial;
    if step == 0.0 {
        return 0.0;
    }
    let beyond = values.iter().map(|&v| (v - target) * step.signum()).fold(0.0, f64::max);
    beyond / step.abs()
}

pub fn peak_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// First time `values` reaches `level` (from below when `level > values[0]`).
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let rising = values.first().is_none_or(|&v0| level >= v0);
    values.iter().position(|&v| if rising { v >= level } else { v <= level }).map(|k| times[k])
}

/// Largest pointwise gap between two sampled signals, the second one
/// linearly interpolated onto the first one's times.
pub fn max_deviation(ta: &[f64], a: &[f64], tb: &[f64], b: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (&t, &va) in ta.iter().zip(a) {
        worst = worst.max((va - interp(tb, b, t)).abs());
    }
    worst
}

pub fn interp(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t <= ts[0] {
        return vs[0];
    }
    if t >= ts[n - 1] {
        return vs[n - 1];
    }
    let k = ts.partition_point(|&s| s <= t);
    let (t0, t1) = (ts[k - 1], ts[k]);
    vs[k - 1] + (vs[k] - vs[k - 1]) * (t - t0) / (t1 - t0)
}
