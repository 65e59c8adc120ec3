use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::monitor::{PlaneRecorder, PointProbe, TimeSeries};
use super::pml::PmlSpec;
use super::source::{DipoleSource, Orientation};
use super::state::{Boundary, Component, YeeState};
use crate::error::{Error, Result};
use crate::field::{PlaneField, VolumeField};
use crate::geometry::{rasterize, CavityDesign};
use crate::mode_analysis::{fit_decay, mode_volume, predicted_wavelength, DecayFit, ModeCharacterization};
use crate::units::SPEED_OF_LIGHT;

/// Smallest probe-to-peak field ratio accepted before the probe is deemed to
/// sit on a nodal plane of the mode.
const PROBE_NOISE_FLOOR: f64 = 1e-4;

/// Settings of one ring-down simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingdownConfig {
    /// Cells per lattice constant.
    pub resolution: u32,
    pub orientation: Orientation,
    /// Source carrier wavelength in meters; the linear-fit prediction for
    /// the design when absent.
    pub wavelength_guess: Option<f64>,
    /// Optical cycles of free evolution before the first decay fit.
    pub free_cycles: f64,
    /// Cycles added each time the fit has not yet settled.
    pub extension_cycles: f64,
    /// Hard limit on free evolution.
    pub max_free_cycles: f64,
    /// Probe position relative to the cavity centre, in lattice constants.
    pub probe_offset: [f64; 3],
    /// Interior energy is sampled every this many steps.
    pub energy_every: u32,
    /// Worker threads for the field updates (rayon's global pool when absent).
    pub threads: Option<usize>,
}

impl Default for RingdownConfig {
    fn default() -> Self {
        RingdownConfig {
            resolution: 12,
            orientation: Orientation::X,
            wavelength_guess: None,
            free_cycles: 300.0,
            extension_cycles: 30.0,
            max_free_cycles: 600.0,
            probe_offset: [0.2, 0.1, 0.0],
            energy_every: 8,
            threads: None,
        }
    }
}

/// Everything a ring-down run produces. Fitted rates are in SI units;
/// energies, powers and field values are in solver units (Δ = c = ε0 = 1).
#[derive(Debug, Clone)]
pub struct RingdownResult {
    pub orientation: Orientation,
    pub resolution: u32,
    pub cell_size: f64,
    pub dt_seconds: f64,
    pub steps: u64,
    /// Probe E component along the source axis, every step.
    pub probe: TimeSeries,
    /// Discrete interior energy.
    pub energy: TimeSeries,
    /// Time at which the source current is exactly zero for good (s).
    pub extinction_time: f64,
    /// Free-evolution cycles run before the fit settled.
    pub free_cycles: f64,
    /// Decay fit with `omega` in rad/s and `gamma` in 1/s.
    pub fit: DecayFit,
    pub mode: ModeCharacterization,
    /// Time of the quadrature snapshots (s).
    pub record_time: f64,
    /// Interior energy at `record_time`.
    pub energy_at_record: f64,
    /// `2ΓU` at `record_time`, per unit of Δ/c.
    pub emitted_power: f64,
    /// Outward Poynting flux through a box just inside the PML, averaged over
    /// one period and referred to `record_time`.
    pub flux_at_record: f64,
    /// Complex field one cell above the membrane.
    pub plane_top: PlaneField,
    /// Complex field in the membrane mid-plane.
    pub midplane: PlaneField,
    pub volume: VolumeField,
}

/// Cubic Lagrange weights for a value a fraction `frac ∈ [0, 1)` past the
/// second of four equally spaced samples at −1, 0, 1, 2.
pub fn lagrange_weights(frac: f64) -> [f64; 4] {
    let f = frac;
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Complex mode amplitude `E(t0) + i·E(t0 + T/4)·e^{ΓT/4}` from two real
/// snapshots a quarter period apart; the exponential undoes the decay over
/// that quarter period. `omega` and `decay_rate` share a time unit.
pub fn record_plane_complex(e0: &[f64], e_quarter: &[f64], decay_rate: f64, omega: f64) -> Vec<Complex64> {
    let gain = (decay_rate * 0.5 * PI / omega).exp();
    e0.iter().zip(e_quarter).map(|(&a, &b)| Complex64::new(a, b * gain)).collect()
}

struct Snapshot {
    top: (Vec<f64>, Vec<f64>),
    mid: (Vec<f64>, Vec<f64>),
    volume: [Vec<f64>; 3],
}

fn capture(state: &YeeState, top: &PlaneRecorder, mid: &PlaneRecorder) -> Snapshot {
    Snapshot {
        top: top.capture(state),
        mid: mid.capture(state),
        volume: [0, 1, 2].map(|a| state.field(Component::electric(a)).to_vec()),
    }
}

fn combine(quads: &[Snapshot], w: [f64; 4], pick: impl Fn(&Snapshot) -> &[f64]) -> Vec<f64> {
    let n = pick(&quads[0]).len();
    (0..n).map(|i| quads.iter().zip(w).map(|(s, wk)| wk * pick(s)[i]).sum()).collect()
}

struct Driver {
    state: YeeState,
    source: DipoleSource,
    probe: PointProbe,
    energy: TimeSeries,
    energy_every: u64,
}

impl Driver {
    /// One step; returns the energy at the starting time when sampled.
    fn advance(&mut self, force_energy: bool) -> Result<Option<f64>> {
        let n = self.state.step_index();
        let sample = force_energy || n % self.energy_every == 0;
        let u = if sample {
            let u = self.state.step_with_energy()?;
            let t = n as f64 * self.state.dt_seconds();
            self.energy.push(t, u);
            Some(u)
        } else {
            self.state.step()?;
            None
        };
        self.source.apply(&mut self.state);
        self.probe.observe(&self.state);
        Ok(u)
    }
}

/// Excite the cavity with a short dipole pulse at its centre, let it ring
/// down freely, fit the decay at the probe and record the complex mode
/// field. The free evolution is extended in steps until two successive fits
/// agree (Γ to 1 %, ω to 1e-4) or the cycle limit is reached.
pub fn run_ringdown(design: &CavityDesign, config: &RingdownConfig) -> Result<RingdownResult> {
    if !(config.free_cycles > 0.0 && config.max_free_cycles >= config.free_cycles && config.extension_cycles > 0.0) {
        return Err(Error::config("free-evolution cycle counts must be positive and ordered"));
    }
    let map = rasterize(design, config.resolution)?;
    let mut state = YeeState::new(&map, PmlSpec::new(map.pml_cells), [Boundary::Pec; 3])?;
    if let Some(t) = config.threads {
        state.set_threads(t)?;
    }
    let cell = map.cell_size;
    let dt = state.dt();
    let to_seconds = cell / SPEED_OF_LIGHT;

    let guess_m = config
        .wavelength_guess
        .unwrap_or_else(|| predicted_wavelength(design.inner_hole_shift, design.membrane_thickness));
    let source = DipoleSource::new(map.center, config.orientation, guess_m / cell);
    let res = config.resolution as f64;
    let probe_index: [usize; 3] =
        std::array::from_fn(|a| (map.center[a] as f64 + config.probe_offset[a] * res).round() as usize);
    let axis = config.orientation.axis();
    let component = Component::electric(axis);
    let [nx, ny, _] = map.dims;
    let p = map.pml_cells;
    let mid = PlaneRecorder { k: map.center[2], x: (p, nx - p), y: (p, ny - p) };
    let surface = (0.5 * design.membrane_thickness / cell - 1e-9).ceil() as usize;
    let top = PlaneRecorder { k: map.center[2] + surface + 1, ..mid.clone() };

    let mut drv = Driver {
        state,
        source,
        probe: PointProbe::new(component, probe_index),
        energy: TimeSeries::default(),
        energy_every: config.energy_every.max(1) as u64,
    };

    // Excitation: run until the source is off for good.
    let off_step = (drv.source.off_time() / dt).ceil() as u64 + 1;
    while drv.state.step_index() < off_step {
        drv.advance(false)?;
    }
    let guess_period = drv.source.wavelength / dt;
    let steps_for = |cycles: f64| (cycles * guess_period).round() as u64;

    let mut cycles = config.free_cycles;
    let mut previous: Option<DecayFit> = None;
    let fit = loop {
        let target = off_step + steps_for(cycles);
        while drv.state.step_index() < target {
            drv.advance(false)?;
        }
        let values = &drv.probe.series.values;
        // the probe sample `i` is taken after step `i + 1`
        let window = &values[(off_step + steps_for(cycles) / 2) as usize - 1..];
        let tail = &values[values.len() - (guess_period.ceil() as usize).min(values.len())..];
        let probe_peak = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (ex, ey) = mid.capture(&drv.state);
        let field_peak = ex.iter().chain(&ey).fold(0.0f64, |m, v| m.max(v.abs()));
        if !(probe_peak > PROBE_NOISE_FLOOR * field_peak) {
            return Err(Error::Analysis(format!(
                "probe at {probe_index:?} sees {:.1e} of the peak field: it sits on a nodal plane; \
                 move probe_offset off the symmetry axes",
                probe_peak / field_peak
            )));
        }
        let attempt = fit_decay(window, dt);
        let settled = match (&attempt, &previous) {
            (Ok(f), Some(p)) => {
                (f.gamma - p.gamma).abs() <= 0.01 * f.gamma.abs() && (f.omega - p.omega).abs() <= 1e-4 * f.omega
            }
            _ => false,
        };
        if settled || cycles >= config.max_free_cycles {
            break attempt?;
        }
        if let Ok(f) = attempt {
            previous = Some(f);
        }
        log::debug!("ring-down not settled after {cycles} cycles, extending");
        cycles = (cycles + config.extension_cycles).min(config.max_free_cycles);
    };
    if !(fit.gamma > 0.0) {
        return Err(Error::Analysis(format!("fitted decay rate {} is not positive", fit.gamma)));
    }

    // Quadrature snapshots a quarter period apart.
    let (omega, gamma) = (fit.omega, fit.gamma);
    let quarter = 0.5 * PI / omega / dt;
    let n0 = drv.state.step_index();
    let m = n0 + quarter.floor() as u64;
    let frac = quarter - quarter.floor();
    let period = (2.0 * PI / omega / dt).round() as u64;
    let lo = [p + 2; 3];
    let hi = [map.dims[0] - p - 2, map.dims[1] - p - 2, map.dims[2] - p - 2];

    let first = capture(&drv.state, &top, &mid);
    let energy_at_record = drv.advance(true)?.unwrap_or_default();
    let mut quads = Vec::with_capacity(4);
    let mut flux_sum = 0.0;
    let mut flux_count = 0u64;
    let end = (m + 2).max(n0 + period);
    loop {
        let s = drv.state.step_index();
        if s < n0 + period {
            let t = (s as f64 - 0.25 - n0 as f64) * dt;
            flux_sum += drv.state.poynting_flux(lo, hi) * (2.0 * gamma * t).exp();
            flux_count += 1;
        }
        if s + 1 >= m && s <= m + 2 {
            quads.push(capture(&drv.state, &top, &mid));
        }
        if s >= end {
            break;
        }
        drv.advance(false)?;
    }
    let w = lagrange_weights(frac);
    let complex = |e0: &[f64], pick: &dyn Fn(&Snapshot) -> &[f64]| {
        let eq = combine(&quads, w, pick);
        record_plane_complex(e0, &eq, gamma, omega)
    };

    let wavelength = 2.0 * PI / omega * cell;
    let plane = |rec: &PlaneRecorder, ex: Vec<Complex64>, ey: Vec<Complex64>| {
        let (pnx, pny) = rec.dims();
        PlaneField {
            nx: pnx,
            ny: pny,
            cell_size: cell,
            center: [map.center[0] - rec.x.0, map.center[1] - rec.y.0],
            height: (rec.k as f64 - map.center[2] as f64) * cell,
            wavelength,
            ex,
            ey,
        }
    };
    let plane_top = plane(
        &top,
        complex(&first.top.0, &|s: &Snapshot| &s.top.0),
        complex(&first.top.1, &|s: &Snapshot| &s.top.1),
    );
    let midplane = plane(
        &mid,
        complex(&first.mid.0, &|s: &Snapshot| &s.mid.0),
        complex(&first.mid.1, &|s: &Snapshot| &s.mid.1),
    );
    let volume = VolumeField {
        dims: map.dims,
        cell_size: cell,
        e: [0, 1, 2].map(|a| complex(&first.volume[a], &|s: &Snapshot| &s.volume[a])),
    };

    let fit_si = DecayFit { omega: omega / to_seconds, gamma: gamma / to_seconds, ..fit };
    let v = mode_volume(&volume, &map, wavelength)?;
    let mode = ModeCharacterization::new(config.orientation, fit_si.omega, fit_si.gamma, v)?;
    let steps = drv.state.step_index();
    Ok(RingdownResult {
        orientation: config.orientation,
        resolution: config.resolution,
        cell_size: cell,
        dt_seconds: drv.state.dt_seconds(),
        steps,
        probe: drv.probe.series,
        energy: drv.energy,
        extinction_time: off_step as f64 * dt * to_seconds,
        free_cycles: cycles,
        fit: fit_si,
        mode,
        record_time: n0 as f64 * dt * to_seconds,
        energy_at_record,
        emitted_power: 2.0 * gamma * energy_at_record,
        flux_at_record: flux_sum / flux_count.max(1) as f64,
        plane_top,
        midplane,
        volume,
    })
}
