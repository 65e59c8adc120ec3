use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use h1cav::cascade::{
    annexe_printed_density_matrix, apply_overlap, asymmetric_density_matrix, bell_closed_form, bell_fixed_angle,
    bell_horodecki, figure_of_merit, AsymmetryParams, CascadeCoefficients, CascadeRates, PairDensityMatrix,
};
use h1cav::farfield::{collection_efficiency, near_to_far, overlap_k, radiation_pattern, Aperture, OverlapConvention};
use h1cav::fdtd::{Orientation, RingdownConfig};
use h1cav::field::PlaneField;
use h1cav::geometry::CavityDesign;
use h1cav::pipeline::{run_sweep, simulate_mode, write_report, ModeRecord, ResultCache, SweepPlan, SweepResults, CACHE_DIR_ENV};
use h1cav::units::{Energy, Length};
use h1cav::{Error, Result};
use log::{info, warn};

/// Exit status for a run that finished but left gaps in strict mode.
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser)]
#[command(name = "h1cav", version, about = "H1 photonic-crystal cavity design and entanglement figures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ring down one cavity design and characterize its mode.
    Simulate(SimulateArgs),
    /// Radiation pattern, collection efficiency and mode overlap of simulated modes.
    Farfield(FarfieldArgs),
    /// Pair density matrix and Bell parameters of the biexciton cascade.
    Cascade(CascadeArgs),
    /// Sweep designs over (d, h) and write the full report bundle.
    Sweep(SweepArgs),
    /// Rebuild the report bundle from saved sweep results.
    Report(ReportArgs),
}

#[derive(Args)]
struct CacheArgs {
    /// Cache directory for ring-down results.
    #[arg(long, env = CACHE_DIR_ENV)]
    cache: Option<PathBuf>,
}

impl CacheArgs {
    fn open(&self) -> Result<Option<ResultCache>> {
        self.cache.as_ref().map(ResultCache::new).transpose()
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Cavity design (TOML); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inner-hole shift d, in lattice constants.
    #[arg(long)]
    shift: Option<f64>,
    /// Membrane thickness, e.g. 0.26um.
    #[arg(long)]
    thickness: Option<Length>,
    /// Cells per lattice constant.
    #[arg(long, default_value_t = 12)]
    resolution: u32,
    #[arg(long, default_value = "x")]
    orientation: Orientation,
    /// Optical cycles of free ring-down before the first fit.
    #[arg(long)]
    free_cycles: Option<f64>,
    /// Worker threads for the field updates.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "simulation")]
    out: PathBuf,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct FarfieldArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    mode: PathBuf,
    /// Second mode (other polarization) for the overlap K.
    #[arg(long)]
    partner: Option<PathBuf>,
    /// Numerical apertures.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.5, 0.7])]
    na: Vec<f64>,
    #[arg(long, default_value = "intensity")]
    overlap_convention: OverlapConvention,
    /// Reject near fields that have not decayed at the plane edge.
    #[arg(long)]
    strict: bool,
    /// Output directory (the mode directory when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CascadeArgs {
    /// Cascade rates (TOML); an ideal cascade when absent.
    #[arg(long)]
    rates: Option<PathBuf>,
    /// Overlap factors K applied to the state.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
    k: Vec<f64>,
    /// Purcell asymmetry δF of a displaced dot.
    #[arg(long, requires = "g")]
    delta_f: Option<f64>,
    /// Normalized splitting g of a displaced dot.
    #[arg(long, requires = "delta_f")]
    g: Option<f64>,
    /// Bulk exciton lifetime in seconds, for the figure of merit.
    #[arg(long, requires_all = ["splitting", "purcell"])]
    t1: Option<f64>,
    /// Exciton fine-structure splitting (bare numbers in μeV).
    #[arg(long)]
    splitting: Option<Energy>,
    /// Maximal Purcell factor.
    #[arg(long)]
    purcell: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep plan (TOML); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the plan resolution.
    #[arg(long)]
    resolution: Option<u32>,
    /// Override the numerical apertures.
    #[arg(long, value_delimiter = ',')]
    na: Option<Vec<f64>>,
    /// Fail (exit 3) when any point or artefact is missing.
    #[arg(long)]
    strict: bool,
    /// Sweep points computed concurrently.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// `results.json` written by `sweep`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "report")]
    out: PathBuf,
    /// Fail (exit 3) when the bundle has gaps.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    cache: CacheArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Farfield(a) => farfield(a),
        Command::Cascade(a) => cascade(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<u8> {
    let mut design = match &a.config {
        Some(p) => CavityDesign::load(p)?,
        None => CavityDesign::default(),
    };
    if let Some(d) = a.shift {
        design.inner_hole_shift = d;
    }
    if let Some(h) = a.thickness {
        design.membrane_thickness = h.meters();
    }
    design.validate()?;
    let mut config = RingdownConfig { resolution: a.resolution, orientation: a.orientation, threads: a.threads, ..Default::default() };
    if let Some(c) = a.free_cycles {
        config.free_cycles = c;
        config.max_free_cycles = config.max_free_cycles.max(2.0 * c);
        config.extension_cycles = (0.1 * c).max(1.0);
    }
    let (record, result) = simulate_mode(&design, &config)?;
    if let Some(cache) = a.cache.open()? {
        cache.store(&ResultCache::key(&design, &config), &record)?;
    }
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("mode.json"), serde_json::to_vec_pretty(&record)?)?;
    record.plane_top.write(&a.out.join("plane_top.bin"))?;
    record.midplane.write(&a.out.join("midplane.bin"))?;
    result.probe.write_csv(&a.out.join("probe.csv"))?;
    result.energy.write_csv(&a.out.join("energy.csv"))?;
    let pattern = radiation_pattern(&record.far_field);
    pattern.write_csv(&a.out.join("pattern.csv"))?;
    pattern.write_pgm(&a.out.join("pattern.pgm"))?;
    let m = &record.mode;
    println!(
        "polarization {}  lambda {:.4} um  Q {:.1}  V {:.3} (lambda/n)^3  Fp {:.1}  fit residual {:.2e}",
        m.polarization.label(),
        m.wavelength * 1e6,
        m.quality_factor,
        m.mode_volume,
        m.purcell_max,
        record.fit.residual
    );
    info!("results written to {}", a.out.display());
    Ok(0)
}

fn load_mode(dir: &Path) -> Result<ModeRecord> {
    let path = dir.join("mode.json");
    let bytes = std::fs::read(&path)?;
    let mut record: ModeRecord =
        serde_json::from_slice(&bytes).map_err(|e| Error::Format { path: path.display().to_string(), detail: e.to_string() })?;
    record.plane_top = PlaneField::read(&dir.join("plane_top.bin"))?;
    record.midplane = PlaneField::read(&dir.join("midplane.bin"))?;
    Ok(record)
}

fn farfield(a: FarfieldArgs) -> Result<u8> {
    let mode = load_mode(&a.mode)?;
    let far = near_to_far(&mode.plane_top, a.strict)?;
    let partner = a.partner.as_deref().map(load_mode).transpose()?;
    let partner_far = partner.as_ref().map(|p| near_to_far(&p.plane_top, a.strict)).transpose()?;
    let out = a.out.unwrap_or_else(|| a.mode.clone());
    std::fs::create_dir_all(&out)?;
    let pattern = radiation_pattern(&far);
    pattern.write_csv(&out.join("pattern.csv"))?;
    pattern.write_pgm(&out.join("pattern.pgm"))?;

    let mut w = csv::Writer::from_path(out.join("farfield.csv")).map_err(Error::from)?;
    w.write_record(["na", "eta", "k"]).map_err(Error::from)?;
    println!("{:>6} {:>10} {:>10}", "NA", "eta", "K");
    for &na in &a.na {
        let aperture = Aperture::new(na)?;
        let eta = collection_efficiency(&far, aperture, mode.emitted_power)?;
        let k = partner_far.as_ref().map(|p| overlap_k(&far, p, aperture, a.overlap_convention)).transpose()?;
        let k_text = k.map(|k| format!("{k:.4}")).unwrap_or_else(|| "-".into());
        println!("{na:>6.2} {eta:>10.4} {k_text:>10}");
        w.write_record([na.to_string(), eta.to_string(), k.map(|k| k.to_string()).unwrap_or_default()])
            .map_err(Error::from)?;
    }
    w.flush()?;
    Ok(0)
}

fn print_state(label: &str, rho: &PairDensityMatrix) {
    println!("{label}");
    for r in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|c| {
                let z = rho.get(r, c);
                format!("{:+.4}{:+.4}i", z.re, z.im)
            })
            .collect();
        println!("  {}", row.join("  "));
    }
    println!("  S optimal {:.4}   S fixed settings {:.4}", bell_horodecki(rho), bell_fixed_angle(rho));
}

fn cascade(a: CascadeArgs) -> Result<u8> {
    let rates = match &a.rates {
        Some(p) => CascadeRates::load(p)?,
        None => CascadeRates::ideal(1e9),
    };
    let c = CascadeCoefficients::from_rates(&rates)?;
    println!("alpha {:.6}  d {:.6}  c1 {:.6}  c2 {:.6}", c.alpha, c.d, c.c1, c.c2);
    let rho = c.density_matrix()?;
    for &k in &a.k {
        let state = apply_overlap(&rho, k)?;
        print_state(&format!("K = {k}"), &state);
        println!("  S closed form {:.4}", bell_closed_form(c.alpha, c.d, c.c2, k));
    }
    if let (Some(delta_f), Some(g)) = (a.delta_f, a.g) {
        let p = AsymmetryParams { delta_f, g };
        print_state(&format!("displaced dot, dF = {delta_f}, g = {g}"), &asymmetric_density_matrix(&p)?);
        match annexe_printed_density_matrix(&p) {
            Ok(rho) => print_state("same, renormalized printed form", &rho),
            Err(e) => warn!("renormalized printed form is not a valid state here: {e}"),
        }
    }
    if let (Some(t1), Some(splitting), Some(fp)) = (a.t1, a.splitting, a.purcell) {
        if !(t1 > 0.0 && fp > 0.0) {
            return Err(Error::config("lifetime and Purcell factor must be positive"));
        }
        println!("figure of merit r = {:.4}", figure_of_merit(t1, splitting, fp));
    }
    Ok(0)
}

fn finish(summary_gaps: usize, failures: usize, strict: bool) -> u8 {
    if summary_gaps + failures == 0 {
        return 0;
    }
    warn!("{failures} failed stages, {summary_gaps} gaps in the report");
    if strict {
        EXIT_INCOMPLETE
    } else {
        0
    }
}

fn sweep(a: SweepArgs) -> Result<u8> {
    let mut plan = match &a.config {
        Some(p) => SweepPlan::load(p)?,
        None => SweepPlan::default(),
    };
    if let Some(r) = a.resolution {
        plan.resolution = r;
    }
    if let Some(na) = a.na {
        plan.numerical_apertures = na;
    }
    if a.workers.is_some() {
        plan.workers = a.workers;
    }
    plan.strict |= a.strict;
    plan.validate()?;
    let cache = a.cache.open()?;
    let results = run_sweep(&plan, cache.as_ref())?;
    std::fs::create_dir_all(&a.out)?;
    results.write_json(&a.out.join("results.json"))?;
    let summary = write_report(&results, &a.out, cache.as_ref())?;
    info!(
        "{} points, {} ring-downs run, {} cache hits; {} files in {}",
        results.points.len(),
        results.stats.fdtd_runs,
        results.stats.cache_hits,
        summary.files.len() + 1,
        a.out.display()
    );
    Ok(finish(summary.gaps.len(), results.failures.len(), plan.strict))
}

fn report(a: ReportArgs) -> Result<u8> {
    let results = SweepResults::read_json(&a.results)?;
    let cache = a.cache.open()?;
    let summary = write_report(&results, &a.out, cache.as_ref())?;
    info!("{} files in {}", summary.files.len(), a.out.display());
    Ok(finish(summary.gaps.len(), results.failures.len(), a.strict))
}
