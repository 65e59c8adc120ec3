use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeRates, EmitterParams};
use crate::error::{Error, Result};
use crate::farfield::OverlapConvention;
use crate::fdtd::RingdownConfig;
use crate::geometry::{CavityDesign, MAX_INNER_SHIFT, MIN_RESOLUTION};
use crate::mode_analysis::BetaConvention;
use crate::units::{Energy, Length};

/// Largest resolution accepted in a sweep plan (cells per lattice constant).
pub const MAX_RESOLUTION: u32 = 64;

/// Largest dot displacement analysed, in meters.
pub const MAX_OFFSET: f64 = 500e-9;

/// Largest membrane thickness accepted, in meters.
pub const MAX_THICKNESS: f64 = 2e-6;

/// An axis given either as an explicit list or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Axis<T> {
    List(Vec<T>),
    Range { start: T, stop: T, step: T },
}

impl<T: Copy> Axis<T> {
    fn expand(&self, name: &str, value: impl Fn(T) -> f64) -> Result<Vec<f64>> {
        let mut out = match self {
            Axis::List(v) => v.iter().map(|&x| value(x)).collect::<Vec<_>>(),
            Axis::Range { start, stop, step } => {
                let (a, b, s) = (value(*start), value(*stop), value(*step));
                if !(s > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::config(format!("{name}: range needs start ≤ stop and a positive step")));
                }
                let n = ((b - a) / s + 1e-9).floor() as usize;
                if n > 10_000 {
                    return Err(Error::config(format!("{name}: range has too many points")));
                }
                // print and re-read each value so that 0.1 + 2·0.01 comes out as 0.12
                (0..=n).map(|i| format!("{:.12e}", a + i as f64 * s).parse::<f64>().unwrap()).collect()
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{name}: values must be finite")));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        if out.is_empty() {
            return Err(Error::config(format!("{name}: axis is empty")));
        }
        Ok(out)
    }
}

/// Quantum-dot parameters for a mismatch analysis. When `purcell_max` is
/// absent the mean computed Purcell factor of the two modes is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterPreset {
    pub name: String,
    /// Bulk exciton lifetime in seconds.
    #[serde(default = "default_t1")]
    pub t1_bulk: f64,
    pub splitting: Energy,
    #[serde(default)]
    pub purcell_max: Option<f64>,
}

fn default_t1() -> f64 {
    1e-9
}

impl EmitterPreset {
    pub fn params(&self, computed_purcell: f64) -> EmitterParams {
        EmitterParams {
            t1_bulk: self.t1_bulk,
            splitting: self.splitting,
            purcell_max: self.purcell_max.unwrap_or(computed_purcell),
        }
    }
}

/// Named cascade rates whose Bell parameter is traced against the overlap K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadePreset {
    pub name: String,
    pub rates: CascadeRates,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    #[serde(default)]
    design: CavityDesign,
    #[serde(default)]
    shifts: Option<Axis<f64>>,
    #[serde(default)]
    thicknesses: Option<Axis<Length>>,
    #[serde(default)]
    numerical_apertures: Option<Axis<f64>>,
    #[serde(default)]
    offsets: Option<Axis<Length>>,
    #[serde(default)]
    resolution: Option<u32>,
    #[serde(default)]
    ringdown: RingdownConfig,
    #[serde(default)]
    emitters: Option<Vec<EmitterPreset>>,
    #[serde(default)]
    cascades: Option<Vec<CascadePreset>>,
    #[serde(default)]
    overlap_convention: OverlapConvention,
    #[serde(default)]
    beta_convention: BetaConvention,
    #[serde(default)]
    strict: bool,
    #[serde(default)]
    workers: Option<usize>,
}

/// Every axis and setting of a design sweep, expanded and validated.
///
/// Shifts are in units of the lattice constant; thicknesses and offsets in
/// meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub design: CavityDesign,
    pub shifts: Vec<f64>,
    pub thicknesses: Vec<f64>,
    pub numerical_apertures: Vec<f64>,
    pub offsets: Vec<f64>,
    pub resolution: u32,
    pub ringdown: RingdownConfig,
    pub emitters: Vec<EmitterPreset>,
    pub cascades: Vec<CascadePreset>,
    pub overlap_convention: OverlapConvention,
    pub beta_convention: BetaConvention,
    /// Reject near fields that are not negligible at the plane edge.
    pub strict: bool,
    /// Size of the worker pool for sweep points (all cores when absent).
    pub workers: Option<usize>,
}

pub fn default_shifts() -> Vec<f64> {
    Axis::Range { start: 0.0, stop: MAX_INNER_SHIFT, step: 0.01 }.expand("shifts", |v| v).unwrap()
}

pub fn default_thicknesses() -> Vec<f64> {
    vec![0.22e-6, 0.24e-6, 0.26e-6, 0.28e-6, 0.30e-6]
}

pub fn default_numerical_apertures() -> Vec<f64> {
    vec![0.2, 0.5, 0.7]
}

pub fn default_offsets() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 10e-9).collect()
}

fn default_emitters() -> Vec<EmitterPreset> {
    [2.0, 5.0]
        .iter()
        .map(|&uev| EmitterPreset {
            name: format!("fss{uev}ueV"),
            t1_bulk: 1e-9,
            splitting: Energy::from_uev(uev),
            purcell_max: Some(10.0),
        })
        .collect()
}

fn default_cascades() -> Vec<CascadePreset> {
    vec![CascadePreset { name: "ideal".into(), rates: CascadeRates::ideal(1e9) }]
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            design: CavityDesign::default(),
            shifts: default_shifts(),
            thicknesses: default_thicknesses(),
            numerical_apertures: default_numerical_apertures(),
            offsets: default_offsets(),
            resolution: RingdownConfig::default().resolution,
            ringdown: RingdownConfig::default(),
            emitters: default_emitters(),
            cascades: default_cascades(),
            overlap_convention: OverlapConvention::default(),
            beta_convention: BetaConvention::default(),
            strict: false,
            workers: None,
        }
    }
}

impl SweepPlan {
    /// Parse a TOML plan. Missing axes take their defaults; every axis may be
    /// a list or a `{ start, stop, step }` table.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| Error::config(format!("sweep plan: {e}")))?;
        let length = |l: Length| l.0;
        let plan = SweepPlan {
            design: file.design,
            shifts: match file.shifts {
                Some(a) => a.expand("shifts", |v| v)?,
                None => default_shifts(),
            },
            thicknesses: match file.thicknesses {
                Some(a) => a.expand("thicknesses", length)?,
                None => default_thicknesses(),
            },
            numerical_apertures: match file.numerical_apertures {
                Some(a) => a.expand("numerical_apertures", |v| v)?,
                None => default_numerical_apertures(),
            },
            offsets: match file.offsets {
                Some(a) => a.expand("offsets", length)?,
                None => default_offsets(),
            },
            resolution: file.resolution.unwrap_or(file.ringdown.resolution),
            ringdown: file.ringdown,
            emitters: file.emitters.unwrap_or_else(default_emitters),
            cascades: file.cascades.unwrap_or_else(default_cascades),
            overlap_convention: file.overlap_convention,
            beta_convention: file.beta_convention,
            strict: file.strict,
            workers: file.workers,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("shifts", &self.shifts),
            ("thicknesses", &self.thicknesses),
            ("numerical_apertures", &self.numerical_apertures),
            ("offsets", &self.offsets),
        ];
        for (name, axis) in axes {
            if axis.is_empty() {
                return Err(Error::config(format!("{name}: axis is empty")));
            }
        }
        let check = |name: &str, axis: &[f64], ok: &dyn Fn(f64) -> bool, range: &str| {
            match axis.iter().find(|&&v| !ok(v)) {
                Some(v) => Err(Error::OutOfRange(format!("{name}: {v} outside {range}"))),
                None => Ok(()),
            }
        };
        check("shifts", &self.shifts, &|v| (0.0..=MAX_INNER_SHIFT).contains(&v), "[0, 0.18]")?;
        check("thicknesses", &self.thicknesses, &|v| v > 0.0 && v <= MAX_THICKNESS, "(0, 2 μm]")?;
        check("numerical_apertures", &self.numerical_apertures, &|v| v > 0.0 && v <= 1.0, "(0, 1]")?;
        check("offsets", &self.offsets, &|v| (0.0..=MAX_OFFSET).contains(&v), "[0, 500 nm]")?;
        if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&self.resolution) {
            return Err(Error::OutOfRange(format!(
                "resolution {} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}] cells per lattice constant",
                self.resolution
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        for e in &self.emitters {
            if !(e.t1_bulk > 0.0) || !(e.splitting.ev() >= 0.0) || e.purcell_max.is_some_and(|f| !(f > 0.0)) {
                return Err(Error::config(format!("emitter {:?}: lifetime and Purcell factor must be positive", e.name)));
            }
        }
        for c in &self.cascades {
            c.rates.validate().map_err(|e| Error::config(format!("cascade preset {:?}: {e}", c.name)))?;
        }
        for (d, h) in self.points() {
            self.design_at(d, h).validate()?;
        }
        Ok(())
    }

    /// Design points in sweep order: thickness-major, shift-minor.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.thicknesses.iter().flat_map(|&h| self.shifts.iter().map(move |&d| (d, h))).collect()
    }

    pub fn design_at(&self, d: f64, h: f64) -> CavityDesign {
        self.design.clone().with_shift(d).with_thickness(h)
    }

    /// Ring-down settings for one polarization at the plan resolution.
    pub fn ringdown_for(&self, orientation: crate::fdtd::Orientation) -> RingdownConfig {
        RingdownConfig { resolution: self.resolution, orientation, ..self.ringdown.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_documented_axes() {
        let plan = SweepPlan::from_toml_str("").unwrap();
        assert_eq!(plan.shifts.len(), 19);
        assert_eq!(plan.shifts[0], 0.0);
        assert_eq!(plan.shifts[18], 0.18);
        assert_eq!(plan.shifts[12], 0.12);
        assert_eq!(plan.numerical_apertures, vec![0.2, 0.5, 0.7]);
        assert_eq!(plan.offsets.len(), 11);
        assert!(plan.thicknesses.contains(&0.26e-6));
    }

    #[test]
    fn parses_lists_ranges_and_units() {
        let plan = SweepPlan::from_toml_str(
            r#"
            resolution = 10
            shifts = [0.16, 0.14]
            thicknesses = { start = "0.24um", stop = "0.28um", step = "20nm" }
            numerical_apertures = [0.5]
            offsets = ["0nm", "50nm"]
            [design]
            lattice_rings = 5
            [ringdown]
            free_cycles = 40
            max_free_cycles = 80
            [[emitters]]
            name = "dot"
            splitting = "3ueV"
            "#,
        )
        .unwrap();
        assert_eq!(plan.shifts, vec![0.14, 0.16]);
        assert_eq!(plan.thicknesses.len(), 3);
        assert!((plan.thicknesses[1] - 0.26e-6).abs() < 1e-18);
        assert_eq!(plan.offsets.len(), 2);
        assert!(plan.offsets[0] == 0.0 && (plan.offsets[1] - 50e-9).abs() < 1e-20);
        assert_eq!(plan.ringdown_for(crate::fdtd::Orientation::Y).resolution, 10);
        assert_eq!(plan.design.lattice_rings, 5);
        assert_eq!(plan.emitters[0].t1_bulk, 1e-9);
        assert!((plan.emitters[0].splitting.uev() - 3.0).abs() < 1e-12);
        assert_eq!(plan.points().len(), 6);
    }

    #[test]
    fn rejects_invalid_plans() {
        let err = |t: &str| SweepPlan::from_toml_str(t).unwrap_err();
        assert!(err("shifts = []").is_validation());
        assert!(err("shifts = [0.2]").is_validation());
        assert!(err("numerical_apertures = [1.2]").is_validation());
        assert!(err("resolution = 4").is_validation());
        assert!(err("offsets = [\"-5nm\"]").is_validation());
        assert!(err("unknown_key = 1").is_validation());
        assert!(err("shifts = { start = 0.1, stop = 0.0, step = 0.01 }").is_validation());
    }
}
