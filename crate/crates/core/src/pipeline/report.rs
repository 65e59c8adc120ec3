use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::cache::ResultCache;
use super::sweep::{PointResult, SweepResults};
use crate::error::Result;
use crate::farfield::radiation_pattern;
use crate::fdtd::Orientation;

/// Cell text for a value that could not be computed.
pub const GAP: &str = "gap";

/// Files written by [`write_report`] and the holes found in the data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportSummary {
    pub files: Vec<PathBuf>,
    /// One line per missing value or artefact.
    pub gaps: Vec<String>,
}

impl ReportSummary {
    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| GAP.to_string())
}

fn h_label(h: f64) -> String {
    format!("{:.3}um", h * 1e6)
}

fn point_label(p: &PointResult) -> String {
    format!("d{:.3}_h{}", p.shift, h_label(p.thickness))
}

fn na_label(na: f64) -> String {
    format!("na{na:.2}")
}

fn safe_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

/// 8-bit grayscale image scaled to the largest value; gaps are black.
fn write_map_pgm(path: &Path, width: usize, height: usize, values: &[Option<f64>]) -> Result<()> {
    let peak = values.iter().flatten().copied().fold(0.0, f64::max);
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "P2\n{width} {height}\n255")?;
    for row in values.chunks(width) {
        let line: Vec<String> = row
            .iter()
            .map(|v| match v {
                Some(x) if peak > 0.0 => ((x / peak).clamp(0.0, 1.0) * 255.0).round().to_string(),
                _ => "0".to_string(),
            })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

struct Column {
    name: String,
    get: Box<dyn Fn(&PointResult) -> Option<f64>>,
}

fn columns(nas: &[f64]) -> Vec<Column> {
    let mut cols: Vec<Column> = Vec::new();
    for o in [Orientation::X, Orientation::Y] {
        let l = o.label();
        cols.push(Column { name: format!("lambda_{l}_um"), get: Box::new(move |p| p.mode(o).map(|m| m.wavelength * 1e6)) });
        cols.push(Column { name: format!("q_{l}"), get: Box::new(move |p| p.mode(o).map(|m| m.quality_factor)) });
        cols.push(Column { name: format!("v_{l}"), get: Box::new(move |p| p.mode(o).map(|m| m.mode_volume)) });
        cols.push(Column { name: format!("fp_{l}"), get: Box::new(move |p| p.mode(o).map(|m| m.purcell_max)) });
    }
    for &na in nas {
        let tag = na_label(na);
        cols.push(Column { name: format!("eta_x_{tag}"), get: Box::new(move |p| p.aperture(na).and_then(|a| a.eta_x)) });
        cols.push(Column { name: format!("eta_y_{tag}"), get: Box::new(move |p| p.aperture(na).and_then(|a| a.eta_y)) });
        cols.push(Column { name: format!("k_{tag}"), get: Box::new(move |p| p.aperture(na).and_then(|a| a.overlap)) });
    }
    cols
}

/// Write the figure-data bundle of a sweep into `out`.
///
/// * `sweep.csv` — one row per design point and aperture;
/// * `map_<quantity>.{csv,pgm}` — (d, h) landscapes, thickness rows;
/// * `cut_h<h>um.csv` — every quantity against d at one thickness;
/// * `pattern_<point>_<x|y>.{csv,pgm}` — normalized radiation patterns;
/// * `mismatch_<emitter>_<point>.csv`, `contours_<emitter>_<point>.csv`,
///   `mismatch_thresholds.csv` — dot-placement analysis;
/// * `bell_vs_overlap_<preset>.csv` — S against the overlap K;
/// * `failures.csv` and `gaps.txt` — what is missing and why.
///
/// Missing values appear as `gap` in CSV cells and black pixels in images.
/// Radiation patterns absent from `results` are rebuilt from `cache`.
pub fn write_report(results: &SweepResults, out: &Path, cache: Option<&ResultCache>) -> Result<ReportSummary> {
    fs::create_dir_all(out)?;
    let mut summary = ReportSummary::default();
    let plan = &results.plan;
    let nas = &plan.numerical_apertures;
    let cols = columns(nas);

    for p in &results.points {
        for c in &cols {
            if (c.get)(p).is_none() {
                summary.gaps.push(format!("{}: {}", point_label(p), c.name));
            }
        }
    }

    // main table
    let path = out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(
        ["d", "h_um", "na", "lambda_x_um", "q_x", "v_x", "fp_x", "lambda_y_um", "q_y", "v_y", "fp_y", "eta_x", "eta_y", "k"],
    )?;
    for p in &results.points {
        let modes = [Orientation::X, Orientation::Y].map(|o| p.mode(o));
        for &na in nas {
            let a = p.aperture(na);
            let mut row = vec![p.shift.to_string(), (p.thickness * 1e6).to_string(), na.to_string()];
            for m in modes {
                row.extend([
                    cell(m.map(|m| m.wavelength * 1e6)),
                    cell(m.map(|m| m.quality_factor)),
                    cell(m.map(|m| m.mode_volume)),
                    cell(m.map(|m| m.purcell_max)),
                ]);
            }
            row.extend([
                cell(a.and_then(|a| a.eta_x)),
                cell(a.and_then(|a| a.eta_y)),
                cell(a.and_then(|a| a.overlap)),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    summary.files.push(path);

    // landscapes: one row per thickness (thickest on top), one column per shift
    let (nd, nh) = (plan.shifts.len(), plan.thicknesses.len());
    for c in &cols {
        let mut grid = vec![None; nd * nh];
        for (row, &h) in plan.thicknesses.iter().rev().enumerate() {
            for (col, &d) in plan.shifts.iter().enumerate() {
                grid[row * nd + col] = results.point(d, h).and_then(|p| (c.get)(p));
            }
        }
        let csv_path = out.join(format!("map_{}.csv", c.name));
        let mut w = csv::Writer::from_path(&csv_path)?;
        let mut header = vec!["h_um\\d".to_string()];
        header.extend(plan.shifts.iter().map(|d| d.to_string()));
        w.write_record(&header)?;
        for (row, &h) in plan.thicknesses.iter().rev().enumerate() {
            let mut rec = vec![(h * 1e6).to_string()];
            rec.extend(grid[row * nd..(row + 1) * nd].iter().map(|v| cell(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        let pgm_path = out.join(format!("map_{}.pgm", c.name));
        write_map_pgm(&pgm_path, nd, nh, &grid)?;
        summary.files.extend([csv_path, pgm_path]);
    }

    // cuts at fixed thickness
    for &h in &plan.thicknesses {
        let path = out.join(format!("cut_h{}.csv", h_label(h)));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["d".to_string()];
        header.extend(cols.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for &d in &plan.shifts {
            let mut rec = vec![d.to_string()];
            rec.extend(cols.iter().map(|c| cell(results.point(d, h).and_then(|p| (c.get)(p)))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        summary.files.push(path);
    }

    // radiation patterns
    for p in &results.points {
        for o in [Orientation::X, Orientation::Y] {
            let i = o.axis();
            let pattern = p.patterns[i].clone().or_else(|| {
                let record = cache?.load(&p.keys[i])?;
                Some(radiation_pattern(&record.far_field))
            });
            let stem = format!("pattern_{}_{}", point_label(p), o.label());
            match pattern {
                Some(pat) => {
                    let (c, g) = (out.join(format!("{stem}.csv")), out.join(format!("{stem}.pgm")));
                    pat.write_csv(&c)?;
                    pat.write_pgm(&g)?;
                    summary.files.extend([c, g]);
                }
                None => summary.gaps.push(format!("{stem}: radiation pattern unavailable")),
            }
        }
    }

    // dot placement
    let path = out.join("mismatch_thresholds.csv");
    let mut thresholds = csv::Writer::from_path(&path)?;
    thresholds.write_record(["emitter", "d", "h_um", "purcell_max", "threshold_nm"])?;
    for p in &results.points {
        for name in plan.emitters.iter().map(|e| &e.name) {
            let Some(m) = p.mismatch.iter().find(|m| &m.emitter == name) else {
                summary.gaps.push(format!("{}: mismatch analysis for {name}", point_label(p)));
                thresholds.write_record([name.clone(), p.shift.to_string(), (p.thickness * 1e6).to_string(), GAP.into(), GAP.into()])?;
                continue;
            };
            let stem = format!("{}_{}", safe_name(name), point_label(p));
            let table_path = out.join(format!("mismatch_{stem}.csv"));
            m.table.write_csv(&table_path)?;
            let contour_path = out.join(format!("contours_{stem}.csv"));
            crate::cascade::write_contours_csv(&m.contours, &contour_path)?;
            summary.files.extend([table_path, contour_path]);
            // a threshold beyond the sweep is not a gap: S stays above 2
            let threshold = m.table.threshold.map(|t| (t * 1e9).to_string()).unwrap_or_else(|| "none".into());
            thresholds.write_record([
                name.clone(),
                p.shift.to_string(),
                (p.thickness * 1e6).to_string(),
                m.purcell_max.to_string(),
                threshold,
            ])?;
        }
    }
    thresholds.flush()?;
    summary.files.push(path);

    for curve in &results.overlap_curves {
        let path = out.join(format!("bell_vs_overlap_{}.csv", safe_name(&curve.preset)));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["k", "s_closed_form", "s_horodecki"])?;
        for r in &curve.rows {
            w.write_record(r.map(|v| v.to_string()))?;
        }
        w.flush()?;
        summary.files.push(path);
    }

    let path = out.join("failures.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["d", "h_um", "stage", "orientation", "kind", "message"])?;
    for f in &results.failures {
        w.write_record([
            f.shift.map(|d| d.to_string()).unwrap_or_default(),
            f.thickness.map(|h| (h * 1e6).to_string()).unwrap_or_default(),
            f.stage.clone(),
            f.orientation.map(|o| o.label().to_string()).unwrap_or_default(),
            if f.validation { "validation" } else { "numerical" }.to_string(),
            f.message.clone(),
        ])?;
    }
    w.flush()?;
    summary.files.push(path);

    let path = out.join("gaps.txt");
    let mut text = summary.gaps.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(&path, text)?;
    summary.files.push(path);
    Ok(summary)
}
