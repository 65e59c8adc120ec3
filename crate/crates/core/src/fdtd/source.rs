use serde::{Deserialize, Serialize};

use super::state::YeeState;

/// In-plane orientation of a dipole (and of the cavity mode it excites).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    X,
    Y,
}

impl Orientation {
    pub fn axis(self) -> usize {
        match self {
            Orientation::X => 0,
            Orientation::Y => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Orientation::X => "x",
            Orientation::Y => "y",
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "h" => Ok(Orientation::X),
            "y" | "v" => Ok(Orientation::Y),
            other => Err(crate::Error::config(format!("orientation must be x or y, got {other:?}"))),
        }
    }
}

/// Gaussian-enveloped point dipole current.
///
/// Times and wavelengths are in grid units (Δ/c and Δ). The envelope has a
/// full width at half maximum of `width_periods` carrier periods, peaks at
/// 2.5 widths and is cut to exactly zero from 5 widths on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleSource {
    /// Grid node the dipole is centred on.
    pub node: [usize; 3],
    pub orientation: Orientation,
    pub wavelength: f64,
    pub width_periods: f64,
    pub amplitude: f64,
}

impl DipoleSource {
    pub fn new(node: [usize; 3], orientation: Orientation, wavelength: f64) -> Self {
        DipoleSource { node, orientation, wavelength, width_periods: 10.0, amplitude: 1.0 }
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    pub fn width(&self) -> f64 {
        self.width_periods * self.wavelength
    }

    pub fn peak_time(&self) -> f64 {
        2.5 * self.width()
    }

    pub fn off_time(&self) -> f64 {
        5.0 * self.width()
    }

    pub fn current(&self, t: f64) -> f64 {
        if !(0.0..self.off_time()).contains(&t) {
            return 0.0;
        }
        let u = (t - self.peak_time()) / self.width();
        let envelope = (-4.0 * std::f64::consts::LN_2 * u * u).exp();
        self.amplitude * envelope * (self.angular_frequency() * (t - self.peak_time())).sin()
    }

    /// Inject the current for the step that takes E from `n` to `n + 1`,
    /// split evenly over the two E edges adjacent to the node.
    pub fn apply(&self, state: &mut YeeState) {
        let t = (state.step_index() as f64 - 0.5) * state.dt();
        let j = self.current(t);
        if j == 0.0 {
            return;
        }
        let axis = self.orientation.axis();
        let [i, jj, k] = self.node;
        let mut before = [i, jj, k];
        before[axis] -= 1;
        let a = state.index(before[0], before[1], before[2]);
        let b = state.index(i, jj, k);
        state.inject(axis, a, 0.5 * j);
        state.inject(axis, b, 0.5 * j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_off_after_five_widths() {
        let s = DipoleSource::new([5, 5, 5], Orientation::X, 40.0);
        assert_eq!(s.current(s.off_time()), 0.0);
        assert_eq!(s.current(s.off_time() + 123.4), 0.0);
        assert_eq!(s.current(-1.0), 0.0);
        assert!(s.current(s.peak_time() + 10.0).abs() > 0.1);
    }

    #[test]
    fn envelope_half_maximum_at_half_width() {
        let s = DipoleSource::new([0; 3], Orientation::Y, 40.0);
        // half a width plus a quarter period past the peak: carrier phase is π/2
        let dt = 0.5 * s.width() + 10.0;
        let u = dt / s.width();
        let expected = (-4.0 * std::f64::consts::LN_2 * u * u).exp();
        assert!((s.current(s.peak_time() + dt) - expected).abs() < 1e-12);
        let at_half = (-4.0 * std::f64::consts::LN_2 * 0.25f64).exp();
        assert!((at_half - 0.5).abs() < 1e-12);
    }
}
