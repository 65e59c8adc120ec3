//! Near-to-far-field transformation on the light cone, radiation patterns,
//! collection efficiency and the polarization-mode overlap factor.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::Orientation;
use crate::field::PlaneField;

/// Smallest zero-padding factor of the Fourier grid.
pub const MIN_PADDING: usize = 4;

/// The Fourier grid is padded further until the light cone spans at least
/// this many samples in radius.
pub const MIN_CONE_RADIUS: usize = 48;

/// Largest field modulus tolerated on the border of the near-field plane,
/// relative to its maximum.
pub const EDGE_FIELD_LIMIT: f64 = 0.01;

/// Slack allowed above the 50 % upward-emission bound before the power
/// normalization is declared inconsistent.
pub const ETA_TOLERANCE: f64 = 0.02;

/// Angular spectrum of the tangential field, restricted to the light cone.
///
/// Samples sit at `k∥ = (p, q)·dk` for `p, q ∈ −radius..=radius`, x fastest;
/// wavenumbers are in radians per cell. Everything outside `|k∥| ≤ k0` is
/// exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldMap {
    pub radius: usize,
    pub dk: f64,
    pub k0: f64,
    /// Vacuum wavelength, in meters.
    pub wavelength: f64,
    pub cell_size: f64,
    pub polarization: Option<Orientation>,
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
}

impl FarFieldMap {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn index(&self, p: isize, q: isize) -> usize {
        let r = self.radius as isize;
        ((p + r) + self.side() as isize * (q + r)) as usize
    }

    /// Direction cosines `(sinθ cosφ, sinθ sinφ)` of sample `idx`.
    pub fn direction(&self, idx: usize) -> (f64, f64) {
        let side = self.side();
        let r = self.radius as f64;
        let (p, q) = ((idx % side) as f64 - r, (idx / side) as f64 - r);
        (p * self.dk / self.k0, q * self.dk / self.k0)
    }

    /// Time-averaged upward power per unit transverse wavevector area,
    /// `cosθ/(8π²)·(|Êx|² + |Êy|² + |Êz|²)`, with `Êz` from transversality.
    pub fn power_density(&self, idx: usize) -> f64 {
        let (sx, sy) = self.direction(idx);
        let s2 = sx * sx + sy * sy;
        if s2 >= 1.0 {
            return 0.0;
        }
        let cos = (1.0 - s2).sqrt();
        let (ex, ey) = (self.ex[idx], self.ey[idx]);
        let ez = -(ex * sx + ey * sy) / cos;
        cos / (8.0 * PI * PI) * (ex.norm_sqr() + ey.norm_sqr() + ez.norm_sqr())
    }

    /// Power per unit solid angle, `dP/d²k · k0² cosθ`.
    pub fn radiant_intensity(&self, idx: usize) -> f64 {
        let (sx, sy) = self.direction(idx);
        let s2 = sx * sx + sy * sy;
        if s2 >= 1.0 {
            return 0.0;
        }
        self.power_density(idx) * self.k0 * self.k0 * (1.0 - s2).sqrt()
    }

    /// Upward power radiated into the aperture, in solver units.
    pub fn power_within(&self, aperture: Aperture) -> f64 {
        let area = self.dk * self.dk;
        (0..self.ex.len())
            .filter(|&i| aperture.accepts(self.direction(i)))
            .map(|i| self.power_density(i) * area)
            .sum()
    }

    fn same_grid(&self, other: &FarFieldMap) -> bool {
        self.radius == other.radius
            && (self.dk - other.dk).abs() <= 1e-12 * self.dk
            && (self.k0 - other.k0).abs() <= 1e-12 * self.k0
    }

    /// Power density at arbitrary direction cosines, bilinear between the
    /// four surrounding samples. Used to compare maps of modes whose
    /// wavelengths differ slightly, so that equal indices are not equal angles.
    pub fn power_density_at(&self, (sx, sy): (f64, f64)) -> f64 {
        if sx * sx + sy * sy >= 1.0 {
            return 0.0;
        }
        let r = self.radius as isize;
        let (u, v) = (sx * self.k0 / self.dk, sy * self.k0 / self.dk);
        let (p0, q0) = (u.floor() as isize, v.floor() as isize);
        let (fu, fv) = (u - p0 as f64, v - q0 as f64);
        let sample = |p: isize, q: isize| {
            if p.abs() > r || q.abs() > r {
                0.0
            } else {
                self.power_density(self.index(p, q))
            }
        };
        (1.0 - fu) * (1.0 - fv) * sample(p0, q0)
            + fu * (1.0 - fv) * sample(p0 + 1, q0)
            + (1.0 - fu) * fv * sample(p0, q0 + 1)
            + fu * fv * sample(p0 + 1, q0 + 1)
    }
}

/// Detector acceptance: the disc `sinθ ≤ NA` in the upper half space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub numerical_aperture: f64,
}

impl Aperture {
    pub fn new(numerical_aperture: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&numerical_aperture) {
            return Err(Error::OutOfRange(format!("numerical aperture {numerical_aperture} outside [0, 1]")));
        }
        Ok(Aperture { numerical_aperture })
    }

    /// Zero-aperture detectors accept nothing.
    pub fn accepts(&self, (sx, sy): (f64, f64)) -> bool {
        self.numerical_aperture > 0.0 && sx * sx + sy * sy <= self.numerical_aperture * self.numerical_aperture
    }
}

fn fft_buffer_len(n: usize, wavelength_cells: f64) -> usize {
    let need = (MIN_PADDING * n).max((MIN_CONE_RADIUS as f64 * wavelength_cells).ceil() as usize);
    need.next_power_of_two()
}

/// Largest tangential field modulus on the outermost ring of samples,
/// relative to the plane maximum.
pub fn edge_ratio(plane: &PlaneField) -> f64 {
    let (nx, ny) = (plane.nx, plane.ny);
    let modulus = |i: usize| plane.ex[i].norm().max(plane.ey[i].norm());
    let peak = (0..nx * ny).map(modulus).fold(0.0, f64::max);
    let edge = (0..nx * ny)
        .filter(|i| {
            let (x, y) = (i % nx, i / nx);
            x == 0 || y == 0 || x + 1 == nx || y + 1 == ny
        })
        .map(modulus)
        .fold(0.0, f64::max);
    if peak > 0.0 {
        edge / peak
    } else {
        0.0
    }
}

/// Angular spectrum of a complex near-field plane on the light cone.
///
/// The plane is zero-padded at least [`MIN_PADDING`]-fold and transformed
/// with FFTs along x, then along y for the columns inside the light cone
/// only. Sample positions follow the Yee staggering of the plane. A field
/// that has not decayed below [`EDGE_FIELD_LIMIT`] at the plane border is
/// reported as a warning, or as an error when `strict`.
pub fn near_to_far(plane: &PlaneField, strict: bool) -> Result<FarFieldMap> {
    if plane.nx < 2 || plane.ny < 2 || !(plane.wavelength > 0.0) || !(plane.cell_size > 0.0) {
        return Err(Error::Analysis("near-field plane is empty or lacks a wavelength".into()));
    }
    let edge = edge_ratio(plane);
    if edge > EDGE_FIELD_LIMIT {
        let msg = format!(
            "near-field plane is too small: border field is {:.1} % of the maximum (limit {:.0} %)",
            100.0 * edge,
            100.0 * EDGE_FIELD_LIMIT
        );
        if strict {
            return Err(Error::Analysis(msg));
        }
        log::warn!("{msg}");
    }

    let lambda = plane.wavelength / plane.cell_size;
    let n = fft_buffer_len(plane.nx.max(plane.ny), lambda);
    let dk = 2.0 * PI / n as f64;
    let k0 = 2.0 * PI / lambda;
    let radius = (k0 / dk).floor() as usize;
    let side = 2 * radius + 1;
    let wrap = |p: isize| p.rem_euclid(n as isize) as usize;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let [ci, cj] = plane.center.map(|c| c as f64);

    let transform = |data: &[Complex64], shift: [f64; 2]| -> Vec<Complex64> {
        // along x, row by row; keep the light-cone columns
        let mut rows = vec![Complex64::default(); plane.ny * side];
        let mut buf = vec![Complex64::default(); n];
        for j in 0..plane.ny {
            buf.iter_mut().for_each(|v| *v = Complex64::default());
            buf[..plane.nx].copy_from_slice(&data[j * plane.nx..(j + 1) * plane.nx]);
            fft.process(&mut buf);
            for (c, p) in (-(radius as isize)..=radius as isize).enumerate() {
                rows[j * side + c] = buf[wrap(p)];
            }
        }
        // along y for each kept column, then re-reference to the cavity axis
        let mut out = vec![Complex64::default(); side * side];
        for (c, p) in (-(radius as isize)..=radius as isize).enumerate() {
            buf.iter_mut().for_each(|v| *v = Complex64::default());
            for j in 0..plane.ny {
                buf[j] = rows[j * side + c];
            }
            fft.process(&mut buf);
            for (r, q) in (-(radius as isize)..=radius as isize).enumerate() {
                let (kx, ky) = (p as f64 * dk, q as f64 * dk);
                if kx * kx + ky * ky > k0 * k0 {
                    continue;
                }
                let phase = kx * (ci - shift[0]) + ky * (cj - shift[1]);
                out[c + side * r] = buf[wrap(q)] * Complex64::from_polar(1.0, phase);
            }
        }
        out
    };

    Ok(FarFieldMap {
        radius,
        dk,
        k0,
        wavelength: plane.wavelength,
        cell_size: plane.cell_size,
        polarization: None,
        ex: transform(&plane.ex, [0.5, 0.0]),
        ey: transform(&plane.ey, [0.0, 0.5]),
    })
}

/// Radiant intensity on the direction-cosine disc, normalized to a maximum of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiationPattern {
    pub radius: usize,
    /// Direction-cosine step between samples.
    pub step: f64,
    pub values: Vec<f64>,
}

impl RadiationPattern {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Long-format CSV: `sin_x,sin_y,intensity` for every sample on the disc.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["sin_x", "sin_y", "intensity"])?;
        let side = self.side();
        let r = self.radius as f64;
        for (i, v) in self.values.iter().enumerate() {
            let (sx, sy) = (((i % side) as f64 - r) * self.step, ((i / side) as f64 - r) * self.step);
            if sx * sx + sy * sy <= 1.0 {
                w.write_record([format!("{sx:.6}"), format!("{sy:.6}"), format!("{v:.6e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Plain (ASCII) 8-bit PGM with +sin_y pointing up.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let side = self.side();
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "P2\n{side} {side}\n255")?;
        for row in (0..side).rev() {
            let line: Vec<String> = (0..side)
                .map(|c| ((self.values[c + side * row].clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Normalized far-field radiation pattern.
pub fn radiation_pattern(map: &FarFieldMap) -> RadiationPattern {
    let mut values: Vec<f64> = (0..map.ex.len()).map(|i| map.radiant_intensity(i)).collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    RadiationPattern { radius: map.radius, step: map.dk / map.k0, values }
}

/// Fraction of the emitted power `p_ref` collected upward within the aperture.
pub fn collection_efficiency(map: &FarFieldMap, aperture: Aperture, p_ref: f64) -> Result<f64> {
    if !(p_ref > 0.0 && p_ref.is_finite()) {
        return Err(Error::Normalization(format!("reference power {p_ref:e} must be positive")));
    }
    let eta = map.power_within(aperture) / p_ref;
    if eta > 0.5 + ETA_TOLERANCE {
        return Err(Error::Normalization(format!(
            "collected fraction {eta:.3} exceeds the 50 % upward bound; reference power and near field disagree"
        )));
    }
    Ok(eta)
}

/// Which far-field quantity enters the overlap integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapConvention {
    /// Φ is the power per unit transverse wavevector area.
    #[default]
    Intensity,
    /// Φ is the modulus of the far-field amplitude, `√intensity`.
    Amplitude,
}

impl std::str::FromStr for OverlapConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "intensity" => Ok(OverlapConvention::Intensity),
            "amplitude" => Ok(OverlapConvention::Amplitude),
            other => Err(Error::config(format!("overlap convention must be intensity or amplitude, got {other:?}"))),
        }
    }
}

/// Overlap `K = (Σ t√(Φ_H Φ_V))² / (Σ tΦ_H · Σ tΦ_V)` of two far fields
/// over the aperture indicator `t`, summed on the grid of `h`; `v` is
/// interpolated when its grid differs.
pub fn overlap_k(h: &FarFieldMap, v: &FarFieldMap, aperture: Aperture, convention: OverlapConvention) -> Result<f64> {
    let same_grid = h.same_grid(v);
    let phi = |p: f64| {
        match convention {
            OverlapConvention::Intensity => p,
            OverlapConvention::Amplitude => p.sqrt(),
        }
    };
    let (mut k, mut eh, mut ev) = (0.0, 0.0, 0.0);
    for i in 0..h.ex.len() {
        if !aperture.accepts(h.direction(i)) {
            continue;
        }
        let b = if same_grid { v.power_density(i) } else { v.power_density_at(h.direction(i)) };
        let (a, b) = (phi(h.power_density(i)), phi(b));
        k += (a * b).sqrt();
        eh += a;
        ev += b;
    }
    if !(eh > 0.0) || !(ev > 0.0) {
        return Err(Error::UndefinedOverlap("a far field vanishes on the aperture".into()));
    }
    Ok((k * k / (eh * ev)).min(1.0))
}
