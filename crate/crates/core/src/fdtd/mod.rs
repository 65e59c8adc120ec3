//! Three-dimensional Yee-lattice FDTD with split-field PML, pulsed dipole
//! excitation and ring-down monitors.

mod checkpoint;
mod monitor;
mod pml;
mod ringdown;
mod source;
mod state;

pub use monitor::{PlaneRecorder, PointProbe, TimeSeries};
pub use pml::PmlSpec;
pub use ringdown::{
    lagrange_weights, record_plane_complex, run_ringdown, RingdownConfig, RingdownResult,
};
pub use source::{DipoleSource, Orientation};
pub use state::{Boundary, Component, YeeState, COURANT_SAFETY};
