use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{obtain, ResultCache};
use super::plan::SweepPlan;
use super::record::{ModeRecord, ENGINE_VERSION};
use crate::cascade::{
    apply_overlap, bell_closed_form, bell_horodecki, bell_vs_mismatch, r_contours, CascadeCoefficients, ContourRow,
    MismatchTable, CONTOUR_LEVELS,
};
use crate::error::{Error, Result};
use crate::farfield::{collection_efficiency, overlap_k, radiation_pattern, Aperture, RadiationPattern, EDGE_FIELD_LIMIT};
use crate::fdtd::Orientation;

/// Resonance figures of one polarization at one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    /// Vacuum wavelength, in meters.
    pub wavelength: f64,
    pub quality_factor: f64,
    /// In units of (λ/n)³.
    pub mode_volume: f64,
    pub purcell_max: f64,
    pub decay_rate: f64,
    pub fit_residual: f64,
    pub free_cycles: f64,
}

impl From<&ModeRecord> for ModeSummary {
    fn from(r: &ModeRecord) -> Self {
        ModeSummary {
            wavelength: r.mode.wavelength,
            quality_factor: r.mode.quality_factor,
            mode_volume: r.mode.mode_volume,
            purcell_max: r.mode.purcell_max,
            decay_rate: r.mode.decay_rate,
            fit_residual: r.fit.residual,
            free_cycles: r.free_cycles,
        }
    }
}

/// Collection efficiencies and mode overlap for one numerical aperture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureResult {
    pub numerical_aperture: f64,
    pub eta_x: Option<f64>,
    pub eta_y: Option<f64>,
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchResult {
    pub emitter: String,
    pub purcell_max: f64,
    pub table: MismatchTable,
    pub contours: Vec<ContourRow>,
}

/// Everything computed at one `(d, h)` design point. Missing values mark
/// stages that failed; the reasons are in the sweep's failure list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub shift: f64,
    /// Membrane thickness in meters.
    pub thickness: f64,
    /// Cache keys of the X and Y ring-downs.
    pub keys: [String; 2],
    pub modes: [Option<ModeSummary>; 2],
    pub apertures: Vec<ApertureResult>,
    pub mismatch: Vec<MismatchResult>,
    /// Normalized radiation patterns; not serialized, rebuilt from the
    /// cache when a report is made from saved results.
    #[serde(skip)]
    pub patterns: [Option<RadiationPattern>; 2],
}

impl PointResult {
    pub fn mode(&self, o: Orientation) -> Option<&ModeSummary> {
        self.modes[o.axis()].as_ref()
    }

    pub fn aperture(&self, na: f64) -> Option<&ApertureResult> {
        self.apertures.iter().find(|a| a.numerical_aperture == na)
    }
}

/// One failed stage of one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Design point, absent for plan-level stages.
    pub shift: Option<f64>,
    pub thickness: Option<f64>,
    pub stage: String,
    pub orientation: Option<Orientation>,
    pub message: String,
    /// Whether the failure is a validation problem rather than a numerical one.
    pub validation: bool,
}

/// Bell parameter of a cascade preset as a function of the overlap K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub preset: String,
    pub coefficients: CascadeCoefficients,
    /// `(K, S closed form, S optimal)` rows.
    pub rows: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepStats {
    pub fdtd_runs: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub engine: String,
    pub plan: SweepPlan,
    pub points: Vec<PointResult>,
    pub failures: Vec<Failure>,
    pub overlap_curves: Vec<OverlapCurve>,
    pub stats: SweepStats,
}

impl SweepResults {
    pub fn point(&self, shift: f64, thickness: f64) -> Option<&PointResult> {
        self.points.iter().find(|p| p.shift == shift && p.thickness == thickness)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Format { path: path.display().to_string(), detail: e.to_string() })
    }
}

struct PointOutcome {
    result: PointResult,
    failures: Vec<Failure>,
    stats: SweepStats,
}

const ORIENTATIONS: [Orientation; 2] = [Orientation::X, Orientation::Y];

fn run_point(plan: &SweepPlan, cache: Option<&ResultCache>, shift: f64, thickness: f64) -> PointOutcome {
    let design = plan.design_at(shift, thickness);
    let mut failures = Vec::new();
    let mut stats = SweepStats::default();
    let mut fail = |stage: &str, orientation: Option<Orientation>, e: &Error| {
        warn!("d={shift} h={thickness:e}: {stage} failed: {e}");
        failures.push(Failure {
            shift: Some(shift),
            thickness: Some(thickness),
            stage: stage.into(),
            orientation,
            message: e.to_string(),
            validation: e.is_validation(),
        });
    };

    let mut records: [Option<ModeRecord>; 2] = [None, None];
    let mut keys: [String; 2] = Default::default();
    for o in ORIENTATIONS {
        let config = plan.ringdown_for(o);
        keys[o.axis()] = ResultCache::key(&design, &config);
        match obtain(cache, &design, &config) {
            Ok((record, ran)) => {
                if ran {
                    stats.fdtd_runs += 1;
                } else {
                    stats.cache_hits += 1;
                }
                records[o.axis()] = Some(record);
            }
            Err(e) => fail("ringdown", Some(o), &e),
        }
    }

    let modes = [0, 1].map(|i| records[i].as_ref().map(ModeSummary::from));
    let patterns = [0, 1].map(|i| records[i].as_ref().map(|r| radiation_pattern(&r.far_field)));

    // far-field figures need a near field that has decayed at the plane edge
    let usable: [Option<&ModeRecord>; 2] = [0, 1].map(|i| {
        records[i].as_ref().filter(|r| {
            let ok = !plan.strict || r.edge_ratio <= EDGE_FIELD_LIMIT;
            if !ok {
                fail(
                    "farfield",
                    Some(ORIENTATIONS[i]),
                    &Error::Analysis(format!(
                        "near-field plane is too small: border field is {:.1} % of the maximum",
                        100.0 * r.edge_ratio
                    )),
                );
            }
            ok
        })
    });

    let mut apertures = Vec::with_capacity(plan.numerical_apertures.len());
    for &na in &plan.numerical_apertures {
        let aperture = match Aperture::new(na) {
            Ok(a) => a,
            Err(e) => {
                fail("aperture", None, &e);
                continue;
            }
        };
        let mut eta = [None, None];
        for (i, r) in usable.iter().enumerate() {
            if let Some(r) = r {
                match collection_efficiency(&r.far_field, aperture, r.emitted_power) {
                    Ok(v) => eta[i] = Some(v),
                    Err(e) => fail(&format!("efficiency NA={na}"), Some(ORIENTATIONS[i]), &e),
                }
            }
        }
        let overlap = match usable {
            [Some(x), Some(y)] => match overlap_k(&x.far_field, &y.far_field, aperture, plan.overlap_convention) {
                Ok(k) => Some(k),
                Err(e) => {
                    fail(&format!("overlap NA={na}"), None, &e);
                    None
                }
            },
            _ => None,
        };
        apertures.push(ApertureResult { numerical_aperture: na, eta_x: eta[0], eta_y: eta[1], overlap });
    }

    let mut mismatch = Vec::new();
    if let [Some(x), Some(y)] = &records {
        let computed = 0.5 * (x.mode.purcell_max + y.mode.purcell_max);
        for preset in &plan.emitters {
            let params = preset.params(computed);
            let analysed = bell_vs_mismatch(&x.midplane, &y.midplane, &params, &plan.offsets, plan.beta_convention)
                .and_then(|table| {
                    let contours = r_contours(&table, &CONTOUR_LEVELS)?;
                    Ok(MismatchResult { emitter: preset.name.clone(), purcell_max: params.purcell_max, table, contours })
                });
            match analysed {
                Ok(m) => mismatch.push(m),
                Err(e) => fail(&format!("mismatch {}", preset.name), None, &e),
            }
        }
    }

    PointOutcome {
        result: PointResult { shift, thickness, keys, modes, apertures, mismatch, patterns },
        failures,
        stats,
    }
}

/// Number of samples of each S(K) curve.
const OVERLAP_SAMPLES: usize = 101;

pub fn overlap_curves(plan: &SweepPlan) -> (Vec<OverlapCurve>, Vec<Failure>) {
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for preset in &plan.cascades {
        let curve = CascadeCoefficients::from_rates(&preset.rates).and_then(|c| {
            let rho = c.density_matrix()?;
            let rows = (0..OVERLAP_SAMPLES)
                .map(|i| {
                    let k = i as f64 / (OVERLAP_SAMPLES - 1) as f64;
                    let s = bell_horodecki(&apply_overlap(&rho, k)?);
                    Ok([k, bell_closed_form(c.alpha, c.d, c.c2, k), s])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OverlapCurve { preset: preset.name.clone(), coefficients: c, rows })
        });
        match curve {
            Ok(c) => curves.push(c),
            Err(e) => failures.push(Failure {
                shift: None,
                thickness: None,
                stage: format!("cascade {}", preset.name),
                orientation: None,
                message: e.to_string(),
                validation: e.is_validation(),
            }),
        }
    }
    (curves, failures)
}

/// Run every design point of the plan.
///
/// Points are independent and run on a pool of `plan.workers` threads;
/// results are merged in plan order, so the output does not depend on the
/// pool size or on scheduling. A failing point is recorded in the failure
/// list and the sweep carries on.
pub fn run_sweep(plan: &SweepPlan, cache: Option<&ResultCache>) -> Result<SweepResults> {
    plan.validate()?;
    let points = plan.points();
    info!("sweeping {} design points at {} cells per lattice constant", points.len(), plan.resolution);
    let work = || -> Vec<PointOutcome> {
        points.par_iter().map(|&(d, h)| run_point(plan, cache, d, h)).collect()
    };
    let outcomes = match plan.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let (overlap_curves, mut failures) = overlap_curves(plan);
    let mut stats = SweepStats::default();
    let mut results = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        stats.fdtd_runs += o.stats.fdtd_runs;
        stats.cache_hits += o.stats.cache_hits;
        failures.extend(o.failures);
        results.push(o.result);
    }
    Ok(SweepResults {
        engine: ENGINE_VERSION.to_string(),
        plan: plan.clone(),
        points: results,
        failures,
        overlap_curves,
        stats,
    })
}
