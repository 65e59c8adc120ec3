//! H1 membrane cavity parameterization and rasterization onto a cubic grid.

mod area;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::units::Length;

pub use area::disc_rect_area;

/// Smallest accepted grid resolution, in cells per lattice constant.
pub const MIN_RESOLUTION: u32 = 8;

/// Largest inner-hole displacement covered by the model, in units of `a`.
pub const MAX_INNER_SHIFT: f64 = 0.18;

fn de_length<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Length::deserialize(d).map(|l| l.0)
}

fn de_opt_length<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    Option::<Length>::deserialize(d).map(|l| l.map(|l| l.0))
}

/// Geometry and material of a suspended H1 photonic-crystal membrane.
///
/// Lengths are in meters. `inner_hole_shift` is the radial displacement of the
/// six holes bordering the defect, in units of the lattice constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityDesign {
    #[serde(deserialize_with = "de_length")]
    pub lattice_constant: f64,
    #[serde(deserialize_with = "de_length")]
    pub hole_radius: f64,
    pub slab_index: f64,
    #[serde(deserialize_with = "de_length")]
    pub membrane_thickness: f64,
    pub inner_hole_shift: f64,
    pub lattice_rings: u32,
    /// Air above and below the membrane; 3·a when absent.
    #[serde(deserialize_with = "de_opt_length", skip_serializing_if = "Option::is_none")]
    pub vertical_padding: Option<f64>,
    pub pml_cells: u32,
}

impl Default for CavityDesign {
    fn default() -> Self {
        CavityDesign {
            lattice_constant: 270e-9,
            hole_radius: 80e-9,
            slab_index: 3.46,
            membrane_thickness: 0.26e-6,
            inner_hole_shift: 0.0,
            lattice_rings: 7,
            vertical_padding: None,
            pml_cells: 12,
        }
    }
}

impl CavityDesign {
    pub fn with_shift(mut self, d: f64) -> Self {
        self.inner_hole_shift = d;
        self
    }

    pub fn with_thickness(mut self, h: f64) -> Self {
        self.membrane_thickness = h;
        self
    }

    pub fn vertical_padding(&self) -> f64 {
        self.vertical_padding.unwrap_or(3.0 * self.lattice_constant)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.lattice_constant;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config("lattice_constant must be positive"));
        }
        if !(self.hole_radius > 0.0 && self.hole_radius < a / 2.0) {
            return Err(Error::config(format!(
                "hole_radius {:.3e} m must lie in (0, a/2 = {:.3e} m)",
                self.hole_radius,
                a / 2.0
            )));
        }
        if !(0.0..=MAX_INNER_SHIFT).contains(&self.inner_hole_shift) {
            return Err(Error::config(format!(
                "inner_hole_shift {} outside [0, {MAX_INNER_SHIFT}]",
                self.inner_hole_shift
            )));
        }
        if !(self.membrane_thickness > 0.0 && self.membrane_thickness.is_finite()) {
            return Err(Error::config("membrane_thickness must be positive"));
        }
        if !(self.slab_index > 1.0 && self.slab_index.is_finite()) {
            return Err(Error::config("slab_index must exceed 1"));
        }
        if self.lattice_rings < 2 {
            return Err(Error::config("lattice_rings must be at least 2"));
        }
        if self.vertical_padding() < 0.0 {
            return Err(Error::config("vertical_padding must be non-negative"));
        }
        Ok(())
    }

    /// Read a design from a TOML file. Keys are the field names; lengths take
    /// meters or suffixed strings (`"270nm"`, `"0.26um"`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let design: CavityDesign =
            toml::from_str(text).map_err(|e| Error::config(format!("design file: {e}")))?;
        design.validate()?;
        Ok(design)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// Hole centres of the H1 cavity, in meters, relative to the defect centre.
///
/// Triangular lattice with primitive vectors `a·(1, 0)` and `a·(1/2, √3/2)`,
/// truncated to `lattice_rings` hexagonal shells, central site removed; the
/// first shell is pushed radially outward by `inner_hole_shift · a`.
pub fn hole_centers(design: &CavityDesign) -> Vec<[f64; 2]> {
    let a = design.lattice_constant;
    let rings = design.lattice_rings as i64;
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let mut centers = Vec::with_capacity((3 * rings * (rings + 1)) as usize);
    for n in -rings..=rings {
        for m in -rings..=rings {
            let shell = (m.abs() + n.abs() + (m + n).abs()) / 2;
            if shell == 0 || shell > rings {
                continue;
            }
            let x = (m as f64 + 0.5 * n as f64) * a;
            let y = n as f64 * half_sqrt3 * a;
            if shell == 1 {
                // Nearest neighbours sit at distance exactly a.
                let scale = 1.0 + design.inner_hole_shift;
                centers.push([x * scale, y * scale]);
            } else {
                centers.push([x, y]);
            }
        }
    }
    centers
}

/// Relative permittivity sampled on cubic cells.
///
/// `center` is the grid node (cell corner) at the cavity centre, lying in the
/// membrane mid-plane. Cell `(i, j, k)` spans `[i − ci, i − ci + 1]·cell_size`
/// along x relative to the centre, and likewise in y and z.
#[derive(Debug, Clone, PartialEq)]
pub struct DielectricMap {
    pub permittivity: Vec<f64>,
    pub dims: [usize; 3],
    pub cell_size: f64,
    pub center: [usize; 3],
    pub pml_cells: usize,
    pub slab_index: f64,
}

impl DielectricMap {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.permittivity[self.index(i, j, k)]
    }

    pub fn len(&self) -> usize {
        self.permittivity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permittivity.is_empty()
    }

    /// Physical coordinates (m) of the centre of cell `(i, j, k)` relative to the cavity centre.
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let d = self.cell_size;
        [
            (i as f64 - self.center[0] as f64 + 0.5) * d,
            (j as f64 - self.center[1] as f64 + 0.5) * d,
            (k as f64 - self.center[2] as f64 + 0.5) * d,
        ]
    }

    /// Permittivity seen by the E component along `axis` stored at index
    /// `(i, j, k)`: the mean of the four cells sharing that Yee edge, with
    /// indices clamped at the grid faces.
    pub fn edge_permittivity(&self, axis: usize, i: usize, j: usize, k: usize) -> f64 {
        let at = |d: [isize; 3]| {
            let c = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
            let (x, y, z) = (i as isize + d[0], j as isize + d[1], k as isize + d[2]);
            self.at(c(x, self.dims[0]), c(y, self.dims[1]), c(z, self.dims[2]))
        };
        let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut sum = 0.0;
        for (dp, dq) in [(0, 0), (-1, 0), (0, -1), (-1, -1)] {
            let mut d = [0isize; 3];
            d[p] = dp;
            d[q] = dq;
            sum += at(d);
        }
        0.25 * sum
    }

    /// Sum of ε·cell volume over the whole grid.
    pub fn integrated(&self) -> f64 {
        self.permittivity.iter().sum::<f64>() * self.cell_size.powi(3)
    }

    /// Writes the grid as a text header followed by little-endian f64 values
    /// in x-fastest order.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let [nx, ny, nz] = self.dims;
        writeln!(w, "H1CAV-EPS 1")?;
        writeln!(w, "dims {nx} {ny} {nz}")?;
        writeln!(w, "cell_size {:e}", self.cell_size)?;
        writeln!(w, "center {} {} {}", self.center[0], self.center[1], self.center[2])?;
        writeln!(w, "pml_cells {}", self.pml_cells)?;
        writeln!(w, "slab_index {}", self.slab_index)?;
        writeln!(w, "end")?;
        for v in &self.permittivity {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bad = |detail: &str| Error::Format {
            path: path.display().to_string(),
            detail: detail.to_string(),
        };
        let mut r = BufReader::new(File::open(path)?);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim() != "H1CAV-EPS 1" {
            return Err(bad("missing H1CAV-EPS header"));
        }
        let (mut dims, mut cell, mut center, mut pml, mut index) = (None, None, None, 0, 1.0);
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("header not terminated"));
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or("");
            let vals: Vec<&str> = parts.collect();
            let triple = |v: &[&str]| -> Option<[usize; 3]> {
                Some([v.first()?.parse().ok()?, v.get(1)?.parse().ok()?, v.get(2)?.parse().ok()?])
            };
            match key {
                "dims" => dims = triple(&vals),
                "center" => center = triple(&vals),
                "cell_size" => cell = vals.first().and_then(|v| v.parse::<f64>().ok()),
                "pml_cells" => pml = vals.first().and_then(|v| v.parse().ok()).unwrap_or(0),
                "slab_index" => index = vals.first().and_then(|v| v.parse().ok()).unwrap_or(1.0),
                "end" => break,
                _ => return Err(bad(&format!("unknown header key {key:?}"))),
            }
        }
        let dims = dims.ok_or_else(|| bad("dims missing"))?;
        let n = dims[0] * dims[1] * dims[2];
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)?;
        let permittivity = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(DielectricMap {
            permittivity,
            dims,
            cell_size: cell.ok_or_else(|| bad("cell_size missing"))?,
            center: center.ok_or_else(|| bad("center missing"))?,
            pml_cells: pml,
            slab_index: index,
        })
    }
}

/// Number of cells from the centre node to the edge of the non-PML region.
pub(crate) fn half_extent_cells(design: &CavityDesign, resolution: u32) -> [usize; 3] {
    let res = resolution as f64;
    let rings = design.lattice_rings as f64;
    let a = design.lattice_constant;
    let hx = ((rings + 0.5) * res).ceil() as usize;
    let hy = ((rings * 3f64.sqrt() / 2.0 + 0.5) * res).ceil() as usize;
    let hz = ((0.5 * design.membrane_thickness + design.vertical_padding()) / a * res).ceil() as usize;
    [hx, hy, hz]
}

/// Rasterize the design with volume-fraction averaging of ε in every cell.
pub fn rasterize(design: &CavityDesign, resolution: u32) -> Result<DielectricMap> {
    design.validate()?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::config(format!(
            "resolution {resolution} below the minimum of {MIN_RESOLUTION} cells per lattice constant"
        )));
    }
    let a = design.lattice_constant;
    let cell = a / resolution as f64;
    let pml = design.pml_cells as usize;
    let half = half_extent_cells(design, resolution);
    let center = [half[0] + pml, half[1] + pml, half[2] + pml];
    let dims = [2 * center[0], 2 * center[1], 2 * center[2]];
    let [nx, ny, nz] = dims;

    // In-plane slab fraction, shared by every z layer.
    let r = design.hole_radius;
    let holes = hole_centers(design);
    let cell_area = cell * cell;
    let mut slab_fraction = vec![1.0; nx * ny];
    for j in 0..ny {
        let y0 = (j as f64 - center[1] as f64) * cell;
        let y1 = y0 + cell;
        for i in 0..nx {
            let x0 = (i as f64 - center[0] as f64) * cell;
            let x1 = x0 + cell;
            let mut hole_area = 0.0;
            for &[hx, hy] in &holes {
                if hx + r <= x0 || hx - r >= x1 || hy + r <= y0 || hy - r >= y1 {
                    continue;
                }
                hole_area += disc_rect_area(hx, hy, r, x0, x1, y0, y1);
            }
            slab_fraction[i + nx * j] = (1.0 - hole_area / cell_area).clamp(0.0, 1.0);
        }
    }

    let eps_slab = design.slab_index * design.slab_index;
    let half_h = 0.5 * design.membrane_thickness;
    let mut permittivity = vec![1.0; nx * ny * nz];
    for k in 0..nz {
        let z0 = (k as f64 - center[2] as f64) * cell;
        let z1 = z0 + cell;
        let fz = ((z1.min(half_h) - z0.max(-half_h)) / cell).clamp(0.0, 1.0);
        if fz == 0.0 {
            continue;
        }
        let layer = &mut permittivity[k * nx * ny..(k + 1) * nx * ny];
        for (eps, &fs) in layer.iter_mut().zip(&slab_fraction) {
            *eps = 1.0 + (eps_slab - 1.0) * fz * fs;
        }
    }

    Ok(DielectricMap {
        permittivity,
        dims,
        cell_size: cell,
        center,
        pml_cells: pml,
        slab_index: design.slab_index,
    })
}
