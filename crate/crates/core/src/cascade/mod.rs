//! Biexciton-cascade photon-pair states and their Bell parameters.
//!
//! Rates are angular (rad/s or 1/s); energies are in eV unless stated.

mod density;
mod mismatch;

use std::f64::consts::SQRT_2;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::units::{Energy, Rate, HBAR_EV_S};

pub use density::{bell_fixed_angle, bell_horodecki, PairDensityMatrix, EIGENVALUE_FLOOR, HERMITIAN_TOLERANCE};
pub use mismatch::{
    asymmetry_from_betas, bell_vs_mismatch, r_contours, write_contours_csv, ContourRow, EmitterParams, MismatchRow, MismatchTable,
    CONTOUR_LEVELS,
};

fn de_rate<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Rate::deserialize(d).map(|r| r.0)
}

/// Incoherent and coherent rates of the exciton relay level.
///
/// Config files accept plain numbers (1/s) or energy-suffixed strings such
/// as `"2ueV"`, converted through `E/ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeRates {
    /// Exciton radiative decay rate γ1.
    #[serde(deserialize_with = "de_rate")]
    pub gamma1: f64,
    /// Mean incoherent spin-flip rate between the two exciton states.
    #[serde(deserialize_with = "de_rate")]
    pub gamma_flip: f64,
    /// Asymmetry of the spin-flip rates.
    #[serde(deserialize_with = "de_rate")]
    pub delta_gamma_flip: f64,
    /// Cross-dephasing Γ = Γ_H + Γ_V.
    #[serde(deserialize_with = "de_rate")]
    pub cross_dephasing: f64,
    /// δω, half of the exciton level splitting 2ħδω.
    #[serde(deserialize_with = "de_rate")]
    pub splitting_half: f64,
    /// Polarization-independent pure dephasing. It drops out of every
    /// coefficient of the pair state and is kept for reference only.
    #[serde(deserialize_with = "de_rate")]
    pub pure_dephasing: f64,
}

impl CascadeRates {
    /// Radiative cascade with no incoherent processes and degenerate excitons.
    pub fn ideal(gamma1: f64) -> Self {
        CascadeRates { gamma1, ..Default::default() }
    }

    /// Parse rates from TOML; keys are the field names.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let rates: CascadeRates = toml::from_str(text).map_err(|e| Error::config(format!("cascade rates: {e}")))?;
        rates.validate()?;
        Ok(rates)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("gamma1", self.gamma1),
            ("gamma_flip", self.gamma_flip),
            ("cross_dephasing", self.cross_dephasing),
            ("splitting_half", self.splitting_half),
            ("pure_dephasing", self.pure_dephasing),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidRates(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if !(self.gamma1 > 0.0) {
            return Err(Error::InvalidRates("gamma1 must be positive".into()));
        }
        if !(self.delta_gamma_flip.abs() <= self.gamma_flip) {
            return Err(Error::InvalidRates(format!(
                "|delta_gamma_flip| = {} exceeds gamma_flip = {}",
                self.delta_gamma_flip.abs(),
                self.gamma_flip
            )));
        }
        Ok(())
    }
}

/// Coefficients of the cascade pair state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeCoefficients {
    pub alpha: f64,
    pub d: f64,
    pub c1: f64,
    pub c2: f64,
}

impl CascadeCoefficients {
    pub fn from_rates(rates: &CascadeRates) -> Result<Self> {
        rates.validate()?;
        let CascadeRates { gamma1: g1, gamma_flip: gf, delta_gamma_flip: dgf, cross_dephasing: gc, splitting_half: dw, .. } =
            *rates;
        let denom = (2.0 * dw).powi(2) + (g1 + gf + gc).powi(2) - dgf * dgf;
        if !(denom > 0.0) {
            return Err(Error::InvalidRates(format!("coherence denominator {denom:e} is not positive")));
        }
        Ok(CascadeCoefficients {
            alpha: 0.5 * (g1 + gf) / (g1 + 2.0 * gf),
            d: 0.5 * g1 * (g1 + 2.0 * gc + gf) / denom,
            c1: 0.5 * g1 * dw / denom,
            c2: 0.5 * g1 * dgf / denom,
        })
    }

    /// The pair state before any spatial-mode overlap is applied.
    pub fn density_matrix(&self) -> Result<PairDensityMatrix> {
        let z = Complex64::new;
        let CascadeCoefficients { alpha, d, c1, c2 } = *self;
        let o = z(0.0, 0.0);
        let b = 0.5 - alpha;
        #[rustfmt::skip]
        let m = Matrix4::new(
            z(alpha, 0.0), o,           o,           z(d, -c1),
            o,             z(b, 0.0),   z(c2, 0.0),  o,
            o,             z(c2, 0.0),  z(b, 0.0),   o,
            z(d, c1),      o,           o,           z(alpha, 0.0),
        );
        PairDensityMatrix::new(m)
    }
}

/// Pair state of the cascade and its coefficients.
pub fn ideal_density_matrix(rates: &CascadeRates) -> Result<(PairDensityMatrix, CascadeCoefficients)> {
    let coeffs = CascadeCoefficients::from_rates(rates)?;
    Ok((coeffs.density_matrix()?, coeffs))
}

/// Scale the two coherences (and their conjugates) by the far-field overlap `K`.
pub fn apply_overlap(rho: &PairDensityMatrix, k: f64) -> Result<PairDensityMatrix> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::OutOfRange(format!("overlap factor {k} outside [0, 1]")));
    }
    let mut m = *rho.matrix();
    for (r, c) in [(0, 3), (3, 0), (1, 2), (2, 1)] {
        m[(r, c)] *= k;
    }
    PairDensityMatrix::new(m)
}

/// Bell parameter of the cascade state for fixed CHSH settings,
/// `S = 2√2 (α + K (d − c2))`.
pub fn bell_closed_form(alpha: f64, d: f64, c2: f64, k: f64) -> f64 {
    2.0 * SQRT_2 * (alpha + k * (d - c2))
}

/// Relative Purcell asymmetry and normalized splitting of a dot coupled to
/// the two polarization modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryParams {
    /// `(F_H − F_V)/(F_H + F_V)`.
    pub delta_f: f64,
    /// `2δω / (γ_bulk (F_H + F_V))` with `ħδω` the full exciton splitting.
    pub g: f64,
}

impl AsymmetryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_f.abs() <= 1.0) {
            return Err(Error::OutOfRange(format!("delta_f = {} outside [-1, 1]", self.delta_f)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::OutOfRange(format!("g = {} must be finite and non-negative", self.g)));
        }
        Ok(())
    }
}

/// Pair state of a cascade whose two polarization channels are
/// Purcell-enhanced by different factors and whose exciton levels are split.
///
/// Both photons of channel `u` decay at `F_u γ_bulk`; integrating the
/// Wigner–Weisskopf two-photon amplitudes over frequency gives the
/// branching ratios `(1 ± δF)/2` on the diagonal and the coherence
/// `(1 − δF²) / (2(1 − i g))` between `|HH⟩` and `|VV⟩`.
pub fn asymmetric_density_matrix(p: &AsymmetryParams) -> Result<PairDensityMatrix> {
    p.validate()?;
    let (f, g) = (p.delta_f, p.g);
    let coherence = Complex64::new(1.0 - f * f, 0.0) / Complex64::new(2.0, -2.0 * g);
    x_state(0.5 * (1.0 + f), 0.5 * (1.0 - f), coherence)
}

/// The asymmetric-Purcell state in its published closed form, diagonal
/// `((1 + δF)³, (1 − δF)³)` and coherence `(1 − δF²)²/(1 − i g)`,
/// normalized to unit trace.
///
/// Kept for comparison with [`asymmetric_density_matrix`]; the two agree
/// only at `δF = 0`.
pub fn annexe_printed_density_matrix(p: &AsymmetryParams) -> Result<PairDensityMatrix> {
    p.validate()?;
    let (f, g) = (p.delta_f, p.g);
    let (hh, vv) = ((1.0 + f).powi(3), (1.0 - f).powi(3));
    let norm = hh + vv;
    let coherence = Complex64::new((1.0 - f * f).powi(2), 0.0) / Complex64::new(norm, -norm * g);
    x_state(hh / norm, vv / norm, coherence)
}

fn x_state(hh: f64, vv: f64, coherence: Complex64) -> Result<PairDensityMatrix> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = Complex64::new(hh, 0.0);
    m[(3, 3)] = Complex64::new(vv, 0.0);
    m[(0, 3)] = coherence;
    m[(3, 0)] = coherence.conj();
    PairDensityMatrix::new(m)
}

/// Dimensionless figure of merit `r = T1_bulk · ΔE / (ħ · Fp_max)`, with
/// `ΔE` the full exciton splitting.
pub fn figure_of_merit(t1_bulk: f64, splitting: Energy, purcell_max: f64) -> f64 {
    t1_bulk * splitting.ev() / (HBAR_EV_S * purcell_max)
}
