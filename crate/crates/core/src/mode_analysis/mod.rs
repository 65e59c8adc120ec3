//! Resonance parameters, mode volume, Purcell factor and emitter coupling.

mod fit;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::Orientation;
use crate::field::{PlaneField, VolumeField};
use crate::geometry::DielectricMap;
use crate::units::SPEED_OF_LIGHT;

pub use fit::{fit_decay, DecayFit, MAX_FIT_RESIDUAL};

/// Resonance of one polarization of the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCharacterization {
    pub polarization: Orientation,
    /// Vacuum resonant wavelength, in meters.
    pub wavelength: f64,
    /// Field amplitude decay rate Γc, in 1/s.
    pub decay_rate: f64,
    pub quality_factor: f64,
    /// Mode volume in units of (λc/n)³.
    pub mode_volume: f64,
    pub purcell_max: f64,
}

impl ModeCharacterization {
    /// Assemble the figures from a fitted angular frequency (rad/s), field
    /// decay rate (1/s) and normalized mode volume.
    pub fn new(polarization: Orientation, omega: f64, decay_rate: f64, mode_volume: f64) -> Result<Self> {
        if !(omega > 0.0) || !(decay_rate > 0.0) || !(mode_volume > 0.0) {
            return Err(Error::Analysis(format!(
                "non-physical resonance: ω = {omega:e}, Γ = {decay_rate:e}, V = {mode_volume}"
            )));
        }
        let quality_factor = omega / (2.0 * decay_rate);
        Ok(ModeCharacterization {
            polarization,
            wavelength: 2.0 * PI * SPEED_OF_LIGHT / omega,
            decay_rate,
            quality_factor,
            mode_volume,
            purcell_max: purcell_max(quality_factor, mode_volume),
        })
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }
}

/// Maximal Purcell factor `3Q / (4π² V)` with `V` in cubic material wavelengths.
pub fn purcell_max(quality_factor: f64, mode_volume: f64) -> f64 {
    3.0 * quality_factor / (4.0 * PI * PI * mode_volume)
}

/// Resonant wavelength (m) from the empirical linear fit over the studied
/// band: `λc = 0.28 µm·d + 0.69·h + 0.82 µm`, with `h` in meters.
pub fn predicted_wavelength(inner_hole_shift: f64, membrane_thickness: f64) -> f64 {
    (0.28 * inner_hole_shift + 0.69 * membrane_thickness * 1e6 + 0.82) * 1e-6
}

/// Total power emitted by a mode of field decay rate Γ holding energy `U`.
pub fn emitted_power(decay_rate: f64, energy: f64) -> f64 {
    2.0 * decay_rate * energy
}

/// `ε|E|²` at grid node `(i, j, k)`: each E sample is shared by the two
/// nodes at the ends of its edge, so summing this over all nodes gives the
/// discrete `Σ ε|E|²` of the edges exactly.
fn node_density(field: &VolumeField, map: &DielectricMap, i: usize, j: usize, k: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let mut prev = [i, j, k];
        if prev[a] == 0 {
            continue;
        }
        prev[a] -= 1;
        for at in [[i, j, k], prev] {
            let idx = field.index(at[0], at[1], at[2]);
            s += 0.5 * map.edge_permittivity(a, at[0], at[1], at[2]) * field.e[a][idx].norm_sqr();
        }
    }
    s
}

/// Mode volume `∫ε|E|² dV / max(ε|E|²)` in cubic meters over the non-PML part
/// of the grid.
pub fn mode_volume_m3(field: &VolumeField, map: &DielectricMap) -> Result<f64> {
    if field.dims != map.dims {
        return Err(Error::Analysis(format!(
            "field grid {:?} does not match dielectric grid {:?}",
            field.dims, map.dims
        )));
    }
    let p = map.pml_cells;
    let [nx, ny, nz] = map.dims;
    let (mut total, mut peak) = (0.0, 0.0f64);
    for k in p.max(1)..nz - p {
        for j in p.max(1)..ny - p {
            for i in p.max(1)..nx - p {
                let u = node_density(field, map, i, j, k);
                total += u;
                peak = peak.max(u);
            }
        }
    }
    if !(peak > 0.0) {
        return Err(Error::Analysis("mode field vanishes inside the simulation region".into()));
    }
    Ok(total / peak * map.cell_size.powi(3))
}

/// Mode volume in units of `(λ/n)³`, with `n` the slab index.
pub fn mode_volume(field: &VolumeField, map: &DielectricMap, wavelength: f64) -> Result<f64> {
    let unit = (wavelength / map.slab_index).powi(3);
    Ok(mode_volume_m3(field, map)? / unit)
}

/// How β compares the mode field at the dot site with its value at the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaConvention {
    /// Ratio of squared field moduli.
    #[default]
    Intensity,
    /// Ratio of field moduli.
    Amplitude,
}

impl std::str::FromStr for BetaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "intensity" => Ok(BetaConvention::Intensity),
            "amplitude" => Ok(BetaConvention::Amplitude),
            other => Err(Error::config(format!("beta convention must be intensity or amplitude, got {other:?}"))),
        }
    }
}

/// Normalized coupling of a dot displaced by `offset` (m, in the mid-plane)
/// to the X and Y modes.
///
/// Each dipole of the dot couples to the field component along its own axis,
/// so β_X uses Ex of the X mode and β_Y uses Ey of the Y mode; both equal 1
/// for a centred dot.
pub fn beta_factors(
    mode_x: &PlaneField,
    mode_y: &PlaneField,
    offset: [f64; 2],
    convention: BetaConvention,
) -> Result<(f64, f64)> {
    let outside = || {
        Error::OutOfRange(format!(
            "dot offset ({:.1} nm, {:.1} nm) lies outside the recorded field",
            offset[0] * 1e9,
            offset[1] * 1e9
        ))
    };
    let ratio = |plane: &PlaneField, pick: fn((num_complex::Complex64, num_complex::Complex64)) -> f64| {
        let at = pick(plane.sample(offset[0], offset[1]).ok_or_else(outside)?);
        let centre = pick(plane.sample(0.0, 0.0).ok_or_else(outside)?);
        if !(centre > 0.0) {
            return Err(Error::Analysis("mode field vanishes at the cavity centre".into()));
        }
        let r = at / centre;
        Ok(match convention {
            BetaConvention::Intensity => r,
            BetaConvention::Amplitude => r.sqrt(),
        })
    };
    let bx = ratio(mode_x, |(ex, _)| ex.norm_sqr())?;
    let by = ratio(mode_y, |(_, ey)| ey.norm_sqr())?;
    Ok((bx, by))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn map(dims: [usize; 3], eps: f64) -> DielectricMap {
        DielectricMap {
            permittivity: vec![eps; dims[0] * dims[1] * dims[2]],
            dims,
            cell_size: 1.0,
            center: [dims[0] / 2, dims[1] / 2, dims[2] / 2],
            pml_cells: 0,
            slab_index: eps.sqrt(),
        }
    }

    fn volume(dims: [usize; 3], f: impl Fn(usize, usize, usize) -> f64) -> VolumeField {
        let n = dims[0] * dims[1] * dims[2];
        let mut v = VolumeField { dims, cell_size: 1.0, e: [vec![Complex64::default(); n], vec![], vec![]] };
        v.e[1] = vec![Complex64::default(); n];
        v.e[2] = vec![Complex64::default(); n];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let idx = v.index(i, j, k);
                    v.e[2][idx] = Complex64::new(f(i, j, k), 0.0);
                }
            }
        }
        v
    }

    #[test]
    fn uniform_field_fills_the_box() {
        let dims = [10, 10, 10];
        let v = volume(dims, |_, _, _| 1.0);
        // nodes 1..10 on each axis; the z edges below node k=1 are included
        let vol = mode_volume_m3(&v, &map(dims, 2.0)).unwrap();
        assert!((vol - 9f64.powi(3)).abs() < 1e-9, "{vol}");
    }

    #[test]
    fn half_amplitude_in_half_the_box() {
        let dims = [9, 9, 17];
        // Ez edges at z = k + ½; nodes 1..=16 in z see edges 0..=16
        let v = volume(dims, |_, _, k| if k < 8 { 1.0 } else { 0.5 });
        let vol = mode_volume_m3(&v, &map(dims, 1.0)).unwrap();
        let full = 8.0 * 8.0 * 16.0;
        // node layers 1..=7 at full weight, 9..=16 at quarter weight, node 8 mixed
        let expected = 8.0 * 8.0 * (7.0 + 0.5 * (1.0 + 0.25) + 8.0 * 0.25);
        assert!((vol - expected).abs() < 1e-9, "{vol} vs {expected}");
        // the continuum value 0.625·V0 is approached as the interface cell shrinks
        assert!((vol / full - 0.625).abs() < 0.03);
    }

    #[test]
    fn volume_ignores_global_scale() {
        let dims = [8, 8, 8];
        let v = volume(dims, |i, j, k| ((i * 7 + j * 3 + k) % 5) as f64 + 0.5);
        let mut w = v.clone();
        w.e.iter_mut().flatten().for_each(|x| *x *= Complex64::new(0.0, -3.7));
        let m = map(dims, 5.0);
        let (a, b) = (mode_volume_m3(&v, &m).unwrap(), mode_volume_m3(&w, &m).unwrap());
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn purcell_formula() {
        let fp = purcell_max(1000.0, 0.7);
        assert!((fp - 3.0 * 1000.0 / (4.0 * PI * PI * 0.7)).abs() < 1e-12);
        assert!((fp - 108.56).abs() < 0.01);
        // Fp = 110 at V = 0.7 needs Q ≈ 1013
        let q = 110.0 * 4.0 * PI * PI * 0.7 / 3.0;
        assert!((q - 1013.0).abs() < 1.0);
        assert_eq!(purcell_max(0.0, 0.7), 0.0);
    }

    #[test]
    fn linear_fit_wavelengths() {
        assert!((predicted_wavelength(0.0, 0.26e-6) - 0.9994e-6).abs() < 1e-13);
        assert!((predicted_wavelength(0.16, 0.26e-6) - 1.0442e-6).abs() < 1e-13);
    }

    #[test]
    fn emitted_power_formula() {
        assert_eq!(emitted_power(1e11, 1.0), 2e11);
        assert_eq!(emitted_power(0.0, 5.0), 0.0);
    }

    #[test]
    fn characterization_is_consistent() {
        let omega = 2.0 * PI * SPEED_OF_LIGHT / 1.0e-6;
        let m = ModeCharacterization::new(Orientation::X, omega, omega / 2000.0, 0.7).unwrap();
        assert!((m.quality_factor - 1000.0).abs() < 1e-9);
        assert!((m.wavelength - 1.0e-6).abs() < 1e-18);
        assert!((m.purcell_max - purcell_max(1000.0, 0.7)).abs() < 1e-12);
        assert!(ModeCharacterization::new(Orientation::Y, omega, 0.0, 0.7).is_err());
    }

    fn gaussian_plane(sx: f64, sy: f64) -> PlaneField {
        let mut p = PlaneField::zeros(41, 41, 10e-9, [20, 20], 1e-6);
        for j in 0..41 {
            for i in 0..41 {
                let x = (i as f64 - 20.0 + 0.5) * 10e-9;
                let y = (j as f64 - 20.0) * 10e-9;
                p.ex[i + 41 * j] = Complex64::new((-(x / sx).powi(2) - (y / sy).powi(2)).exp(), 0.0);
                let x = (i as f64 - 20.0) * 10e-9;
                let y = (j as f64 - 20.0 + 0.5) * 10e-9;
                p.ey[i + 41 * j] = Complex64::new((-(x / sy).powi(2) - (y / sx).powi(2)).exp(), 0.0);
            }
        }
        p
    }

    #[test]
    fn beta_is_one_at_centre_and_errors_outside() {
        let p = gaussian_plane(80e-9, 120e-9);
        let (bx, by) = beta_factors(&p, &p, [0.0, 0.0], BetaConvention::Intensity).unwrap();
        assert!((bx - 1.0).abs() < 1e-12 && (by - 1.0).abs() < 1e-12);
        let err = beta_factors(&p, &p, [1e-6, 0.0], BetaConvention::Intensity).unwrap_err();
        assert!(matches!(err, Error::OutOfRange(_)));
    }

    #[test]
    fn beta_mirror_symmetry_and_conventions() {
        let p = gaussian_plane(80e-9, 120e-9);
        let a = beta_factors(&p, &p, [30e-9, 20e-9], BetaConvention::Intensity).unwrap();
        let b = beta_factors(&p, &p, [30e-9, -20e-9], BetaConvention::Intensity).unwrap();
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        let amp = beta_factors(&p, &p, [30e-9, 20e-9], BetaConvention::Amplitude).unwrap();
        assert!((amp.0 * amp.0 - a.0).abs() < 1e-12);
        // the Y mode is elongated along x, so it keeps more coupling there
        let c = beta_factors(&p, &p, [60e-9, 0.0], BetaConvention::Intensity).unwrap();
        assert!(c.1 > c.0);
    }
}
