//! Simulation and analysis of H1 photonic-crystal membrane cavities as
//! sources of polarization-entangled photon pairs.
//!
//! The crate is organized along the data flow of a design study:
//!
//! * [`geometry`] parameterizes the cavity and rasterizes it to a permittivity grid;
//! * [`fdtd`] runs the Yee-lattice ring-down simulation;
//! * [`mode_analysis`] extracts resonance, Q, mode volume, Purcell factor and β factors;
//! * [`farfield`] turns near-field planes into radiation patterns, collection
//!   efficiency and the polarization-mode overlap `K`;
//! * [`cascade`] propagates those figures through the biexciton-cascade
//!   density-matrix model to Bell parameters;
//! * [`pipeline`] drives parameter sweeps, caching and report generation.

pub mod error;
pub mod units;

pub mod field;
pub mod geometry;
pub mod fdtd;
pub mod mode_analysis;
pub mod farfield;
pub mod cascade;
pub mod pipeline;

pub use error::{Error, Result};
