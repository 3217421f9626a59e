use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid times closer than this are treated as equal.
pub const TIME_TOLERANCE: f64 = 1e-12;

/// Time-stamped states `(t_k, y_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::invalid(format!("{} times but {} states", times.len(), states.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        if let Some(n) = states.first().map(Vec::len) {
            if states.iter().any(|s| s.len() != n) {
                return Err(Error::invalid("trajectory states have mixed dimensions"));
            }
        }
        Ok(Trajectory { times, states })
    }

    pub fn start(t0: f64, y0: Vec<f64>) -> Self {
        Trajectory { times: vec![t0], states: vec![y0] }
    }

    /// Appends a state; `t` must exceed the last recorded time.
    pub fn push(&mut self, t: f64, y: Vec<f64>) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.states.push(y);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.times.last().map(|&t| (t, self.states.last().unwrap().as_slice()))
    }

    /// CSV with header `t,y1,..,yn` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> =
            std::iter::once("t".to_string()).chain((1..=self.dim()).map(|i| format!("y{i}"))).collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, y) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in y {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ErrorReport {
    pub e_max: f64,
    pub e_rms: f64,
    pub wall_time_seconds: f64,
}

/// Maximum and root-mean-square pointwise errors over all components and
/// recorded times. Both trajectories must share a grid.
pub fn error_metrics(candidate: &Trajectory, reference: &Trajectory) -> Result<ErrorReport> {
    if candidate.len() != reference.len() {
        return Err(Error::invalid(format!(
            "grid mismatch: {} vs {} points",
            candidate.len(),
            reference.len()
        )));
    }
    if candidate.dim() != reference.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            candidate.dim(),
            reference.dim()
        )));
    }
    for (k, (a, b)) in candidate.times.iter().zip(&reference.times).enumerate() {
        if (a - b).abs() > TIME_TOLERANCE {
            return Err(Error::invalid(format!("grid mismatch at index {k}: t = {a} vs {b}")));
        }
    }
    let mut e_max = 0.0f64;
    let mut sq = 0.0;
    let mut count = 0usize;
    for (yc, ye) in candidate.states.iter().zip(&reference.states) {
        for (a, b) in yc.iter().zip(ye) {
            let e = (a - b).abs();
            if e.is_nan() {
                e_max = f64::NAN;
            } else {
                e_max = e_max.max(e);
            }
            sq += e * e;
            count += 1;
        }
    }
    let e_rms = if count == 0 { 0.0 } else { (sq / count as f64).sqrt() };
    Ok(ErrorReport { e_max, e_rms, wall_time_seconds: 0.0 })
}


/// Times `t0, t0+dt, …` up to `tf`, with the last interval shortened so the
/// grid ends exactly on `tf`. Grid points are computed as `t0 + k·dt` to
/// avoid accumulated rounding.
pub fn uniform_grid(t0: f64, tf: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("step must be positive, got {dt}")));
    }
    if !(tf >= t0) {
        return Err(Error::invalid(format!("need tf >= t0, got [{t0}, {tf}]")));
    }
    let ratio = (tf - t0) / dt;
    let steps = (ratio - 1e-9 * ratio.max(1.0)).ceil().max(0.0) as usize;
    let mut g: Vec<f64> = (0..steps).map(|k| t0 + k as f64 * dt).collect();
    g.push(tf);
    Ok(g)
}

#[cfg(test)]
mod grid_tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(uniform_grid(0.0, 1.0, 0.02).unwrap().len(), 51);
        assert_eq!(uniform_grid(0.0, 0.0, 0.02).unwrap(), vec![0.0]);
        let g = uniform_grid(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(*uniform_grid(0.0, 200.0, 0.2).unwrap().last().unwrap(), 200.0);
        assert_eq!(uniform_grid(0.0, 200.0, 0.2).unwrap().len(), 1001);
    }
}
