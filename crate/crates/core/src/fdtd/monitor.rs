use std::path::Path;

use super::state::{Component, YeeState};
use crate::error::Result;

/// Uniformly or irregularly sampled scalar record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    /// Sample times in seconds.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `t_seconds,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_seconds", "value"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([format!("{t:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Records one field component at one grid index. Reads the state only.
#[derive(Debug, Clone)]
pub struct PointProbe {
    pub component: Component,
    pub index: [usize; 3],
    pub series: TimeSeries,
}

impl PointProbe {
    pub fn new(component: Component, index: [usize; 3]) -> Self {
        PointProbe { component, index, series: TimeSeries::default() }
    }

    pub fn observe(&mut self, state: &YeeState) {
        let [i, j, k] = self.index;
        let t = state.time() * state.cell_size() / crate::units::SPEED_OF_LIGHT;
        self.series.push(t, state.get(self.component, i, j, k));
    }
}

/// Copies the tangential electric field on one z plane, restricted to an
/// in-plane window of the grid.
#[derive(Debug, Clone)]
pub struct PlaneRecorder {
    pub k: usize,
    pub x: (usize, usize),
    pub y: (usize, usize),
}

impl PlaneRecorder {
    pub fn dims(&self) -> (usize, usize) {
        (self.x.1 - self.x.0, self.y.1 - self.y.0)
    }

    /// `(Ex, Ey)` snapshot, x fastest.
    pub fn capture(&self, state: &YeeState) -> (Vec<f64>, Vec<f64>) {
        let (nx, ny) = self.dims();
        let mut ex = Vec::with_capacity(nx * ny);
        let mut ey = Vec::with_capacity(nx * ny);
        for j in self.y.0..self.y.1 {
            let row = state.index(self.x.0, j, self.k);
            ex.extend_from_slice(&state.field(Component::Ex)[row..row + nx]);
            ey.extend_from_slice(&state.field(Component::Ey)[row..row + nx]);
        }
        (ex, ey)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdtd::{Boundary, PmlSpec};

    #[test]
    fn monitors_do_not_touch_the_fields() {
        let run = |observe: bool| {
            let mut s = YeeState::uniform([12, 12, 12], 1e-8, 1.0, PmlSpec::none(), [Boundary::Pec; 3]).unwrap();
            let idx = s.index(6, 6, 6);
            s.field_mut(Component::Ez)[idx] = 1.0;
            let mut probe = PointProbe::new(Component::Ez, [6, 6, 6]);
            let plane = PlaneRecorder { k: 6, x: (2, 10), y: (3, 9) };
            for _ in 0..50 {
                s.step().unwrap();
                if observe {
                    probe.observe(&s);
                    let _ = plane.capture(&s);
                }
            }
            s.field(Component::Ez).to_vec()
        };
        assert_eq!(run(true), run(false));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut ts = TimeSeries::default();
        ts.push(0.0, 1.0);
        ts.push(1e-15, -0.5);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        ts.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_seconds,value");
        assert_eq!(lines.len(), 3);
    }
}
