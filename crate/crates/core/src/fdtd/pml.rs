use serde::{Deserialize, Serialize};

/// Split-field perfectly matched layer parameters.
///
/// The conductivity profile is `σ(u) = σ_max (u / L)^m` with `u` the depth
/// into a layer of `L = thickness_cells`. Conductivity is expressed as an
/// inverse time in units of `c/Δ`; the same profile stretches both E and H,
/// so the layer stays matched to any permittivity it runs through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlSpec {
    pub thickness_cells: usize,
    pub grading_order: u32,
    pub max_conductivity: f64,
}

impl PmlSpec {
    /// Profile giving a theoretical normal-incidence round-trip reflection `reflection`.
    pub fn with_reflection(thickness_cells: usize, grading_order: u32, reflection: f64) -> Self {
        let l = thickness_cells.max(1) as f64;
        PmlSpec {
            thickness_cells,
            grading_order,
            max_conductivity: -((grading_order + 1) as f64) * reflection.ln() / (2.0 * l),
        }
    }

    pub fn new(thickness_cells: usize) -> Self {
        Self::with_reflection(thickness_cells, 3, 1e-8)
    }

    pub fn none() -> Self {
        PmlSpec { thickness_cells: 0, grading_order: 3, max_conductivity: 0.0 }
    }

    /// Conductivity at coordinate `x` (cells, node = integer) on an axis of `n` cells.
    pub fn conductivity(&self, x: f64, n: usize) -> f64 {
        let l = self.thickness_cells as f64;
        if self.thickness_cells == 0 {
            return 0.0;
        }
        let depth = if x < l {
            l - x
        } else if x > n as f64 - l {
            x - (n as f64 - l)
        } else {
            0.0
        };
        if depth <= 0.0 {
            0.0
        } else {
            self.max_conductivity * (depth / l).powi(self.grading_order as i32)
        }
    }
}

impl Default for PmlSpec {
    fn default() -> Self {
        PmlSpec::new(12)
    }
}

/// Exponential time-stepping coefficients along one axis.
#[derive(Debug, Clone)]
pub(crate) struct AxisCoefficients {
    /// `exp(−σ dt)` at integer positions.
    pub decay_int: Vec<f64>,
    /// `(1 − exp(−σ dt)) / σ`, or `dt` where σ = 0.
    pub gain_int: Vec<f64>,
    pub decay_half: Vec<f64>,
    pub gain_half: Vec<f64>,
}

impl AxisCoefficients {
    pub fn new(spec: &PmlSpec, n: usize, dt: f64, absorbing: bool) -> Self {
        let coeff = |x: f64| {
            let s = if absorbing { spec.conductivity(x, n) } else { 0.0 };
            if s == 0.0 {
                (1.0, dt)
            } else {
                let d = (-s * dt).exp();
                (d, (1.0 - d) / s)
            }
        };
        let (decay_int, gain_int) = (0..n).map(|i| coeff(i as f64)).unzip();
        let (decay_half, gain_half) = (0..n).map(|i| coeff(i as f64 + 0.5)).unzip();
        AxisCoefficients { decay_int, gain_int, decay_half, gain_half }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_vanishes_in_the_interior_and_grows_outward() {
        let spec = PmlSpec::new(10);
        assert_eq!(spec.conductivity(10.0, 100), 0.0);
        assert_eq!(spec.conductivity(50.0, 100), 0.0);
        assert_eq!(spec.conductivity(90.0, 100), 0.0);
        assert!(spec.conductivity(2.0, 100) > spec.conductivity(5.0, 100));
        assert!((spec.conductivity(0.0, 100) - spec.max_conductivity).abs() < 1e-12);
        assert!((spec.conductivity(100.0, 100) - spec.max_conductivity).abs() < 1e-12);
    }

    #[test]
    fn theoretical_reflection_is_recovered() {
        let spec = PmlSpec::with_reflection(8, 3, 1e-6);
        // R = exp(−2 ∫σ) with ∫σ = σ_max L / (m + 1)
        let r = (-2.0 * spec.max_conductivity * 8.0 / 4.0).exp();
        assert!((r - 1e-6).abs() < 1e-12);
    }
}
