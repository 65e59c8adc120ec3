use std::path::Path;

use serde::{Deserialize, Serialize};

use super::density::{bell_fixed_angle, bell_horodecki};
use super::{asymmetric_density_matrix, figure_of_merit, AsymmetryParams};
use crate::error::{Error, Result};
use crate::field::PlaneField;
use crate::mode_analysis::{beta_factors, BetaConvention};
use crate::units::Energy;

/// Bell-parameter levels of the `r`-contour tables.
pub const CONTOUR_LEVELS: [f64; 5] = [2.0, 2.2, 2.4, 2.6, 2.8];

/// Quantum-dot properties entering the mismatch analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Exciton lifetime in bulk, in seconds.
    pub t1_bulk: f64,
    /// Full exciton fine-structure splitting.
    pub splitting: Energy,
    /// Purcell factor of a centred dot.
    pub purcell_max: f64,
}

impl EmitterParams {
    pub fn figure_of_merit(&self) -> f64 {
        figure_of_merit(self.t1_bulk, self.splitting, self.purcell_max)
    }
}

/// Asymmetry of a dot with coupling factors `(β_X, β_Y)` relative to the
/// centre, for figure of merit `r`: `F_i = Fp_max β_i` gives
/// `δF = (β_X − β_Y)/(β_X + β_Y)` and `g = 2r/(β_X + β_Y)`.
pub fn asymmetry_from_betas(beta_x: f64, beta_y: f64, r: f64) -> Result<AsymmetryParams> {
    let sum = beta_x + beta_y;
    if !(sum > 0.0) {
        return Err(Error::Analysis("dot is uncoupled from both modes".into()));
    }
    Ok(AsymmetryParams { delta_f: (beta_x - beta_y) / sum, g: 2.0 * r / sum })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchRow {
    /// Dot displacement along x, in meters.
    pub offset: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub delta_f: f64,
    pub g: f64,
    /// Optimal CHSH value over all settings.
    pub s_horodecki: f64,
    /// CHSH value at the settings optimal for a centred dot.
    pub s_fixed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchTable {
    pub rows: Vec<MismatchRow>,
    /// Largest offset at which the fixed-setting Bell parameter still
    /// reaches 2, linearly interpolated between rows; `None` when it stays
    /// above 2 over the whole sweep.
    pub threshold: Option<f64>,
}

impl MismatchTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["offset_nm", "beta_x", "beta_y", "delta_f", "g", "s_horodecki", "s_fixed"])?;
        for r in &self.rows {
            w.write_record(
                [r.offset * 1e9, r.beta_x, r.beta_y, r.delta_f, r.g, r.s_horodecki, r.s_fixed].map(|v| format!("{v:.6}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn bell_pair(p: &AsymmetryParams) -> Result<(f64, f64)> {
    let rho = asymmetric_density_matrix(p)?;
    Ok((bell_horodecki(&rho), bell_fixed_angle(&rho)))
}

/// Bell parameters of a dot displaced along x by each of `offsets` (m),
/// using the mid-plane mode fields of the X and Y modes.
pub fn bell_vs_mismatch(
    mode_x: &PlaneField,
    mode_y: &PlaneField,
    emitter: &EmitterParams,
    offsets: &[f64],
    convention: BetaConvention,
) -> Result<MismatchTable> {
    let r = emitter.figure_of_merit();
    let mut rows = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        let (beta_x, beta_y) = beta_factors(mode_x, mode_y, [offset, 0.0], convention)?;
        let p = asymmetry_from_betas(beta_x, beta_y, r)?;
        let (s_horodecki, s_fixed) = bell_pair(&p)?;
        rows.push(MismatchRow { offset, beta_x, beta_y, delta_f: p.delta_f, g: p.g, s_horodecki, s_fixed });
    }
    rows.sort_by(|a, b| a.offset.abs().partial_cmp(&b.offset.abs()).unwrap());
    let threshold = crossing(&rows);
    Ok(MismatchTable { rows, threshold })
}

fn crossing(rows: &[MismatchRow]) -> Option<f64> {
    let first = rows.first()?;
    if first.s_fixed < 2.0 {
        return Some(0.0);
    }
    rows.windows(2).find(|w| w[1].s_fixed < 2.0).map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let f = (a.s_fixed - 2.0) / (a.s_fixed - b.s_fixed);
        a.offset.abs() + f * (b.offset.abs() - a.offset.abs())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub offset: f64,
    pub level: f64,
    /// Figure of merit at which the fixed-setting S equals `level`.
    pub r_fixed: Option<f64>,
    /// Figure of merit at which the optimal S equals `level`; absent when
    /// the level is out of reach (the optimum never drops below 2 here).
    pub r_horodecki: Option<f64>,
}

const R_SEARCH_MAX: f64 = 1e4;

fn solve_r(beta_x: f64, beta_y: f64, level: f64, pick: impl Fn((f64, f64)) -> f64) -> Result<Option<f64>> {
    let s = |r: f64| -> Result<f64> { Ok(pick(bell_pair(&asymmetry_from_betas(beta_x, beta_y, r)?)?)) };
    let (mut lo, mut hi) = (0.0, R_SEARCH_MAX);
    if s(lo)? < level || s(hi)? > level {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if s(mid)? >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// For each table row and Bell level, the figure of merit `r` at which S
/// falls to that level.
pub fn r_contours(table: &MismatchTable, levels: &[f64]) -> Result<Vec<ContourRow>> {
    let mut out = Vec::new();
    for row in &table.rows {
        for &level in levels {
            out.push(ContourRow {
                offset: row.offset,
                level,
                r_fixed: solve_r(row.beta_x, row.beta_y, level, |p| p.1)?,
                r_horodecki: solve_r(row.beta_x, row.beta_y, level, |p| p.0)?,
            });
        }
    }
    Ok(out)
}

/// CSV with columns `offset_nm,s_level,r_fixed,r_horodecki`; unreachable
/// levels leave the cell empty.
pub fn write_contours_csv(rows: &[ContourRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["offset_nm", "s_level", "r_fixed", "r_horodecki"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        w.write_record([format!("{:.3}", r.offset * 1e9), format!("{:.2}", r.level), cell(r.r_fixed), cell(r.r_horodecki)])?;
    }
    w.flush()?;
    Ok(())
}
