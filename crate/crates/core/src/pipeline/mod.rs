//! Sweeps over cavity designs, result caching and report generation.

mod cache;
mod plan;
mod record;
mod report;
mod sweep;

pub use cache::{obtain, ResultCache, CACHE_DIR_ENV};
pub use plan::{
    default_numerical_apertures, default_offsets, default_shifts, default_thicknesses, CascadePreset, EmitterPreset,
    SweepPlan, MAX_OFFSET, MAX_RESOLUTION, MAX_THICKNESS,
};
pub use record::{simulate_mode, ModeRecord, ENGINE_VERSION};
pub use report::{write_report, ReportSummary, GAP};
pub use sweep::{
    overlap_curves, run_sweep, ApertureResult, Failure, MismatchResult, ModeSummary, OverlapCurve, PointResult,
    SweepResults, SweepStats,
};
