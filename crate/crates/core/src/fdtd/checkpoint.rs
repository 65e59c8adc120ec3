//! Resumable dumps of the full solver state: a short text header followed
//! by the raw field arrays.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::state::YeeState;
use crate::error::{Error, Result};

const MAGIC: &str = "H1CAV-CHECKPOINT 1";

impl YeeState {
    /// Write step index, time step, grid dimensions and every field and PML
    /// auxiliary array (little-endian f64, Ex Ey Ez Hx Hy Hz, then the
    /// auxiliaries in the same order).
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "step {}", self.step)?;
        writeln!(w, "dt {:e}", self.dt)?;
        writeln!(w, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2])?;
        writeln!(w, "cell_size {:e}", self.cell_size)?;
        writeln!(w, "end")?;
        for f in self.e.iter().chain(&self.h).chain(&self.e_aux).chain(&self.h_aux) {
            for v in f {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Restore fields written by [`YeeState::save_checkpoint`] into a state
    /// built from the same dielectric map and PML settings.
    pub fn load_checkpoint(&mut self, path: &Path) -> Result<()> {
        let bad = |d: String| Error::Format { path: path.display().to_string(), detail: d };
        let mut r = BufReader::new(File::open(path)?);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim() != MAGIC {
            return Err(bad("missing checkpoint header".into()));
        }
        let mut step = None;
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("header not terminated".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["step", v] => step = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                ["dt", v] => {
                    let dt: f64 = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
                    if dt != self.dt {
                        return Err(bad(format!("time step {dt} differs from the solver's {}", self.dt)));
                    }
                }
                ["dims", x, y, z] => {
                    let dims = [x, y, z].map(|v| v.parse::<usize>().unwrap_or(0));
                    if dims != self.dims {
                        return Err(bad(format!("grid {dims:?} differs from the solver's {:?}", self.dims)));
                    }
                }
                ["cell_size", _] => {}
                ["end"] => break,
                _ => return Err(bad(format!("unknown header line {line:?}"))),
            }
        }
        let step = step.ok_or_else(|| bad("no step index".into()))?;
        let mut buf = [0u8; 8];
        let arrays = self.e.iter_mut().chain(self.h.iter_mut()).chain(self.e_aux.iter_mut()).chain(self.h_aux.iter_mut());
        for f in arrays {
            for v in f.iter_mut() {
                r.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        self.step = step;
        Ok(())
    }
}
