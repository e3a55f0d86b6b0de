use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Time-indexed table of states followed by other named signals.
///
/// The first `n_states` columns are the integrated state vector; the rest are
/// outputs and inputs recorded at the same instants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationTrace {
    columns: Vec<String>,
    n_states: usize,
    times: Vec<f64>,
    data: Vec<f64>,
}

impl SimulationTrace {
    pub fn new(columns: Vec<String>, n_states: usize) -> Self {
        assert!(n_states <= columns.len());
        Self { columns, n_states, times: Vec::new(), data: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Appends a row. Rows at or before the last recorded time are dropped
    /// so that times stay strictly increasing.
    pub fn push(&mut self, t: f64, row: &[f64]) {
        assert_eq!(row.len(), self.width(), "trace row width");
        if let Some(&last) = self.times.last() {
            if t <= last {
                return;
            }
        }
        self.times.push(t);
        self.data.extend_from_slice(row);
    }

    pub(crate) fn pop(&mut self) {
        if self.times.pop().is_some() {
            self.data.truncate(self.times.len() * self.width());
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.row(i)[..self.n_states]
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some((0..self.len()).map(|i| self.row(i)[j]).collect())
    }

    /// Column by name, panicking with the name when absent.
    pub fn expect_column(&self, name: &str) -> Vec<f64> {
        self.column(name).unwrap_or_else(|| panic!("trace has no column {name:?}"))
    }

    /// Linear interpolation of a column at time `t` (clamped to the range).
    pub fn interpolate(&self, name: &str, t: f64) -> Option<f64> {
        let j = self.column_index(name)?;
        let n = self.len();
        if n == 0 {
            return None;
        }
        if t <= self.times[0] {
            return Some(self.row(0)[j]);
        }
        if t >= self.times[n - 1] {
            return Some(self.row(n - 1)[j]);
        }
        let k = self.times.partition_point(|&s| s <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.row(k - 1)[j], self.row(k)[j]);
        Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// New trace with only the named columns, in the given order, renamed
    /// `(source, target)`. The result has no state columns.
    pub fn select(&self, picks: &[(&str, &str)]) -> Option<SimulationTrace> {
        let idx: Vec<usize> = picks.iter().map(|(src, _)| self.column_index(src)).collect::<Option<_>>()?;
        let mut out = SimulationTrace::new(picks.iter().map(|(_, dst)| dst.to_string()).collect(), 0);
        let mut buf = vec![0.0; idx.len()];
        for i in 0..self.len() {
            let row = self.row(i);
            for (b, &j) in buf.iter_mut().zip(&idx) {
                *b = row[j];
            }
            out.push(self.times[i], &buf);
        }
        Some(out)
    }

    /// Concatenates a trace with identical columns; the first row of `other`
    /// is skipped if it repeats the last time.
    pub fn extend_from(&mut self, other: &SimulationTrace) {
        assert_eq!(self.columns, other.columns, "trace columns differ");
        for i in 0..other.len() {
            self.push(other.times[i], other.row(i));
        }
    }

    /// CSV text: header `t,<columns>`, one row per sample, 17 significant
    /// digits per value.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * (self.width() + 1) * (self.len() + 1));
        s.push('t');
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for i in 0..self.len() {
            write_csv_value(&mut s, self.times[i]);
            for &v in self.row(i) {
                s.push(',');
                write_csv_value(&mut s, v);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}

pub(crate) fn write_csv_value(s: &mut String, v: f64) {
    // normalise -0.0 so repeat runs and platforms diff cleanly
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(s, "{v:.16e}");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimulationTrace {
        let mut tr = SimulationTrace::new(vec!["a".into(), "b".into()], 1);
        tr.push(0.0, &[1.0, 10.0]);
        tr.push(1.0, &[3.0, 20.0]);
        tr.push(1.0, &[99.0, 99.0]);
        tr.push(2.0, &[5.0, 30.0]);
        tr
    }

    #[test]
    fn push_keeps_times_increasing() {
        let tr = sample();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(tr.state(1), &[3.0]);
        assert_eq!(tr.last_state(), Some(&[5.0][..]));
    }

    #[test]
    fn interpolate_and_select() {
        let tr = sample();
        assert_eq!(tr.interpolate("a", 0.5), Some(2.0));
        assert_eq!(tr.interpolate("b", 5.0), Some(30.0));
        assert_eq!(tr.interpolate("zz", 0.5), None);
        let s = tr.select(&[("b", "bee")]).unwrap();
        assert_eq!(s.columns(), &["bee".to_string()]);
        assert_eq!(s.expect_column("bee"), vec![10.0, 20.0, 30.0]);
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let mut tr = SimulationTrace::new(vec!["y".into()], 1);
        tr.push(0.0, &[1.0 / 3.0]);
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,y"));
        let row = lines.next().unwrap();
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }
}
