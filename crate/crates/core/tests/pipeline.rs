//! End-to-end sweep behaviour on a deliberately tiny cavity: caching,
//! deterministic merging, report output and plan validation.

use h1cav::fdtd::Orientation;
use h1cav::geometry::CavityDesign;
use h1cav::pipeline::{run_sweep, simulate_mode, write_report, ResultCache, SweepPlan, GAP};
use h1cav::Error;

fn tiny_plan() -> SweepPlan {
    let mut plan = SweepPlan::from_toml_str(
        r#"
        resolution = 8
        shifts = [0.08, 0.12]
        thicknesses = ["0.26um"]
        numerical_apertures = [0.5]
        offsets = { start = "0nm", stop = "40nm", step = "20nm" }

        [design]
        lattice_rings = 3
        vertical_padding = "135nm"
        pml_cells = 6

        [ringdown]
        free_cycles = 10.0
        extension_cycles = 5.0
        max_free_cycles = 20.0
        "#,
    )
    .unwrap();
    plan.workers = Some(1);
    plan
}

fn points_json(r: &h1cav::pipeline::SweepResults) -> String {
    serde_json::to_string(&(&r.points, &r.failures, &r.overlap_curves)).unwrap()
}

#[test]
fn sweep_caches_merges_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ResultCache::new(dir.path().join("cache")).unwrap();
    let plan = tiny_plan();

    let first = run_sweep(&plan, Some(&cache)).unwrap();
    assert!(first.failures.is_empty(), "{:?}", first.failures);
    assert_eq!(first.stats.fdtd_runs, 4);
    assert_eq!(first.stats.cache_hits, 0);
    assert_eq!(first.points.len(), 2);
    for p in &first.points {
        for o in [Orientation::X, Orientation::Y] {
            let m = p.mode(o).unwrap();
            assert!(m.wavelength > 0.8e-6 && m.wavelength < 1.5e-6, "λ {}", m.wavelength);
            assert!(m.quality_factor > 10.0);
        }
        let a = p.aperture(0.5).unwrap();
        assert!(a.eta_x.unwrap() > 0.0 && a.eta_x.unwrap() < 1.0);
        assert!((0.0..=1.0).contains(&a.overlap.unwrap()));
        assert_eq!(p.mismatch.len(), plan.emitters.len());
        assert_eq!(p.mismatch[0].table.rows.len(), 3);
    }

    // a second pass with a different pool size touches no solver and merges identically
    let mut wide = plan.clone();
    wide.workers = Some(3);
    let second = run_sweep(&wide, Some(&cache)).unwrap();
    assert_eq!(second.stats.fdtd_runs, 0);
    assert_eq!(second.stats.cache_hits, 4);
    assert_eq!(points_json(&first), points_json(&second));

    // a fresh solve of one cached mode reproduces the stored record exactly
    let design = plan.design_at(0.08, 0.26e-6);
    let config = plan.ringdown_for(Orientation::Y);
    let (fresh, _) = simulate_mode(&design, &config).unwrap();
    let stored = cache.load(&ResultCache::key(&design, &config)).unwrap();
    assert_eq!(serde_json::to_string(&fresh).unwrap(), serde_json::to_string(&stored).unwrap());
    assert_eq!(fresh.plane_top, stored.plane_top);
    assert_eq!(fresh.midplane, stored.midplane);

    // the JSON results survive a round trip
    let json = dir.path().join("results.json");
    first.write_json(&json).unwrap();
    let reread = h1cav::pipeline::SweepResults::read_json(&json).unwrap();
    assert_eq!(points_json(&first), points_json(&reread));

    // complete report; patterns are rebuilt from the cache after the round trip
    let out = dir.path().join("report");
    let summary = write_report(&reread, &out, Some(&cache)).unwrap();
    assert!(summary.is_complete(), "{:?}", summary.gaps);
    for name in ["sweep.csv", "map_k_na0.50.csv", "cut_h0.260um.csv", "failures.csv", "pattern_d0.080_h0.260um_x.pgm"] {
        assert!(out.join(name).exists(), "{name} missing from {:?}", summary.files);
    }
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(!table.contains(GAP));

    // a missing mode shows up as gap markers rather than as a silent hole
    let mut broken = reread;
    broken.points[1].modes[1] = None;
    broken.points[1].apertures[0].eta_y = None;
    broken.points[1].apertures[0].overlap = None;
    let out = dir.path().join("report-gaps");
    let summary = write_report(&broken, &out, None).unwrap();
    assert!(!summary.is_complete());
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let last = table.lines().last().unwrap();
    assert!(last.starts_with("0.12,"));
    assert_eq!(last.matches(GAP).count(), 6, "{last}");
    assert!(std::fs::read_to_string(out.join("gaps.txt")).unwrap().contains("d0.120"));
}

#[test]
fn empty_or_out_of_range_axes_are_validation_errors() {
    for text in [
        "shifts = []",
        "numerical_apertures = []",
        "shifts = [0.3]",
        "numerical_apertures = [1.2]",
        "offsets = [\"600nm\"]",
        "resolution = 4",
        "thicknesses = { start = \"0.3um\", stop = \"0.2um\", step = \"0.02um\" }",
    ] {
        let err = SweepPlan::from_toml_str(text).unwrap_err();
        assert!(err.is_validation(), "{text}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
    let mut plan = tiny_plan();
    plan.thicknesses.clear();
    assert!(matches!(run_sweep(&plan, None), Err(Error::Config(_))));
}

#[test]
fn cache_keys_ignore_thread_count_but_not_physics() {
    let design = CavityDesign::default();
    let plan = tiny_plan();
    let base = plan.ringdown_for(Orientation::X);
    let threaded = h1cav::fdtd::RingdownConfig { threads: Some(4), ..base.clone() };
    assert_eq!(ResultCache::key(&design, &base), ResultCache::key(&design, &threaded));
    assert_ne!(ResultCache::key(&design, &base), ResultCache::key(&design, &plan.ringdown_for(Orientation::Y)));
    assert_ne!(ResultCache::key(&design, &base), ResultCache::key(&design.clone().with_shift(0.1), &base));
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let plan = SweepPlan::load(&dir.join("desk_sweep.toml")).unwrap();
    assert_eq!(plan.shifts, vec![0.10, 0.12, 0.14, 0.16, 0.18]);
    assert_eq!(plan.offsets.len(), 11);
    assert_eq!(plan.emitters[1].purcell_max, None);
    assert_eq!(plan.cascades.len(), 2);
    h1cav::cascade::CascadeRates::load(&dir.join("cascade_rates.toml")).unwrap();
}
