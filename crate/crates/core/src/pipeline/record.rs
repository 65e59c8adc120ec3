use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::farfield::{edge_ratio, near_to_far, FarFieldMap};
use crate::fdtd::{run_ringdown, RingdownConfig, RingdownResult};
use crate::field::PlaneField;
use crate::geometry::CavityDesign;
use crate::mode_analysis::{DecayFit, ModeCharacterization};

/// Version tag of the numerical engine. Changing any solver or analysis
/// convention must bump it, which invalidates every cached result.
pub const ENGINE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+yee1");

/// What a sweep keeps from one ring-down: the resonance figures, the two
/// field planes and the far field above the membrane.
///
/// The far field is computed without the strict edge check; `edge_ratio`
/// records how much field reaches the plane boundary so that strict
/// consumers can apply the check themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub engine: String,
    pub design: CavityDesign,
    pub config: RingdownConfig,
    pub mode: ModeCharacterization,
    pub fit: DecayFit,
    pub steps: u64,
    pub free_cycles: f64,
    pub energy_at_record: f64,
    /// `2ΓU` in solver units.
    pub emitted_power: f64,
    pub flux_at_record: f64,
    pub edge_ratio: f64,
    pub far_field: FarFieldMap,
    #[serde(skip)]
    pub plane_top: PlaneField,
    #[serde(skip)]
    pub midplane: PlaneField,
}

impl ModeRecord {
    pub fn from_ringdown(design: &CavityDesign, config: &RingdownConfig, r: &RingdownResult) -> Result<Self> {
        let mut far_field = near_to_far(&r.plane_top, false)?;
        far_field.polarization = Some(r.orientation);
        Ok(ModeRecord {
            engine: ENGINE_VERSION.to_string(),
            design: design.clone(),
            config: config.clone(),
            mode: r.mode,
            fit: r.fit,
            steps: r.steps,
            free_cycles: r.free_cycles,
            energy_at_record: r.energy_at_record,
            emitted_power: r.emitted_power,
            flux_at_record: r.flux_at_record,
            edge_ratio: edge_ratio(&r.plane_top),
            far_field,
            plane_top: r.plane_top.clone(),
            midplane: r.midplane.clone(),
        })
    }
}

/// Run one ring-down and keep both the full result and its record.
pub fn simulate_mode(design: &CavityDesign, config: &RingdownConfig) -> Result<(ModeRecord, RingdownResult)> {
    let result = run_ringdown(design, config)?;
    let record = ModeRecord::from_ringdown(design, config, &result)?;
    Ok((record, result))
}
