//! Complex field snapshots exchanged between the solver and the analyses.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex tangential electric field on a plane of constant z.
///
/// `ex[i + nx·j]` samples `((i − ci + ½)Δ, (j − cj)Δ)` and `ey` samples
/// `((i − ci)Δ, (j − cj + ½)Δ)` relative to the cavity axis, following the
/// Yee staggering. Values are in solver units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneField {
    pub nx: usize,
    pub ny: usize,
    /// Cell size in meters.
    pub cell_size: f64,
    /// Node index of the cavity axis within the plane.
    pub center: [usize; 2],
    /// Height of the plane above the membrane mid-plane, in meters.
    pub height: f64,
    /// Vacuum wavelength of the mode, in meters.
    pub wavelength: f64,
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
}

impl PlaneField {
    pub fn zeros(nx: usize, ny: usize, cell_size: f64, center: [usize; 2], wavelength: f64) -> Self {
        PlaneField {
            nx,
            ny,
            cell_size,
            center,
            height: 0.0,
            wavelength,
            ex: vec![Complex64::new(0.0, 0.0); nx * ny],
            ey: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.ex.iter_mut().chain(out.ey.iter_mut()).for_each(|v| *v *= factor);
        out
    }

    fn bilinear(&self, data: &[Complex64], fx: f64, fy: f64) -> Option<Complex64> {
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i + 1 >= self.nx || j + 1 >= self.ny {
            return None;
        }
        let (u, v) = (fx - i as f64, fy - j as f64);
        let at = |a: usize, b: usize| data[a + self.nx * b];
        Some(
            at(i, j) * ((1.0 - u) * (1.0 - v))
                + at(i + 1, j) * (u * (1.0 - v))
                + at(i, j + 1) * ((1.0 - u) * v)
                + at(i + 1, j + 1) * (u * v),
        )
    }

    /// Bilinearly interpolated `(Ex, Ey)` at in-plane position `(x, y)` in
    /// meters relative to the cavity axis; `None` outside the sampled region.
    pub fn sample(&self, x: f64, y: f64) -> Option<(Complex64, Complex64)> {
        let gx = x / self.cell_size + self.center[0] as f64;
        let gy = y / self.cell_size + self.center[1] as f64;
        let ex = self.bilinear(&self.ex, gx - 0.5, gy)?;
        let ey = self.bilinear(&self.ey, gx, gy - 0.5)?;
        Some((ex, ey))
    }

    /// Writes a text header followed by little-endian `(re, im)` pairs, Ex
    /// then Ey, x fastest.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "H1CAV-PLANE 1")?;
        writeln!(w, "dims {} {}", self.nx, self.ny)?;
        writeln!(w, "cell_size {:e}", self.cell_size)?;
        writeln!(w, "center {} {}", self.center[0], self.center[1])?;
        writeln!(w, "height {:e}", self.height)?;
        writeln!(w, "wavelength {:e}", self.wavelength)?;
        writeln!(w, "end")?;
        for v in self.ex.iter().chain(&self.ey) {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bad = |d: &str| Error::Format { path: path.display().to_string(), detail: d.to_string() };
        let mut r = BufReader::new(File::open(path)?);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim() != "H1CAV-PLANE 1" {
            return Err(bad("missing H1CAV-PLANE header"));
        }
        let mut out = PlaneField::zeros(0, 0, 0.0, [0, 0], 0.0);
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("header not terminated"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                parts.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(&format!("bad line {line:?}")))
            };
            match parts.first().copied() {
                Some("dims") => {
                    out.nx = num(1)? as usize;
                    out.ny = num(2)? as usize;
                }
                Some("cell_size") => out.cell_size = num(1)?,
                Some("center") => out.center = [num(1)? as usize, num(2)? as usize],
                Some("height") => out.height = num(1)?,
                Some("wavelength") => out.wavelength = num(1)?,
                Some("end") => break,
                _ => return Err(bad(&format!("unknown header line {line:?}"))),
            }
        }
        let n = out.nx * out.ny;
        let mut bytes = vec![0u8; 32 * n];
        r.read_exact(&mut bytes)?;
        let values: Vec<Complex64> = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        out.ex = values[..n].to_vec();
        out.ey = values[n..].to_vec();
        Ok(out)
    }
}

/// Complex electric field on the full Yee grid (same layout as the solver).
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    pub dims: [usize; 3],
    pub cell_size: f64,
    pub e: [Vec<Complex64>; 3],
}

impl VolumeField {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_follows_staggering() {
        let mut p = PlaneField::zeros(8, 8, 1.0, [4, 4], 1.0);
        for j in 0..8 {
            for i in 0..8 {
                // Ex(x, y) = x at its own sample points, Ey(x, y) = y
                p.ex[i + 8 * j] = Complex64::new(i as f64 - 4.0 + 0.5, 0.0);
                p.ey[i + 8 * j] = Complex64::new(j as f64 - 4.0 + 0.5, 0.0);
            }
        }
        let (ex, ey) = p.sample(0.3, -1.2).unwrap();
        assert!((ex.re - 0.3).abs() < 1e-12);
        assert!((ey.re + 1.2).abs() < 1e-12);
        assert!(p.sample(10.0, 0.0).is_none());
    }

    #[test]
    fn plane_file_roundtrip() {
        let mut p = PlaneField::zeros(3, 2, 2.5e-8, [1, 1], 1e-6);
        p.height = 1.5e-7;
        p.ex[4] = Complex64::new(1.5, -2.0);
        p.ey[1] = Complex64::new(-0.25, 3.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        p.write(&path).unwrap();
        assert_eq!(PlaneField::read(&path).unwrap(), p);
    }
}
