use h1cav::geometry::{rasterize, CavityDesign, DielectricMap};
use proptest::prelude::*;

fn small(d: f64) -> CavityDesign {
    CavityDesign {
        lattice_rings: 3,
        vertical_padding: Some(135e-9),
        pml_cells: 4,
        ..CavityDesign::default()
    }
    .with_shift(d)
}

/// ∫(ε − 1) dV over a fixed physical box: only the membrane contributes, and
/// box faces fall on cell faces at every resolution that divides 10.
fn excess_in_box(map: &DielectricMap, half_x: f64, half_y: f64) -> f64 {
    let mut sum = 0.0;
    let [nx, ny, nz] = map.dims;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let [x, y, _] = map.cell_center(i, j, k);
                if x.abs() < half_x && y.abs() < half_y {
                    sum += map.at(i, j, k) - 1.0;
                }
            }
        }
    }
    sum * map.cell_size.powi(3)
}

fn relative_change(d: f64) -> f64 {
    let design = small(d);
    let a = design.lattice_constant;
    let (hx, hy) = (3.0 * a, 2.5 * a);
    let coarse = excess_in_box(&rasterize(&design, 10).unwrap(), hx, hy);
    let fine = excess_in_box(&rasterize(&design, 20).unwrap(), hx, hy);
    (fine - coarse).abs() / fine
}

#[test]
fn doubling_resolution_barely_changes_the_dielectric_content() {
    let design = small(0.12);
    let change = relative_change(0.12);
    assert!(change < 0.005, "relative change {change}");
    // and both agree with the bulk slab minus an upper bound on the hole area
    let a = design.lattice_constant;
    let map = rasterize(&design, 20).unwrap();
    let n2m1 = design.slab_index.powi(2) - 1.0;
    let full = n2m1 * design.membrane_thickness * 6.0 * a * 5.0 * a;
    let excess = excess_in_box(&map, 3.0 * a, 2.5 * a);
    assert!(excess < full && excess > 0.5 * full, "{excess} vs {full}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rasterization_converges_for_any_inner_shift(d in 0.0..=0.18f64) {
        let change = relative_change(d);
        prop_assert!(change < 0.005, "d {}: relative change {}", d, change);
    }
}

/// Hole centres built directly from the triangular lattice: every site within
/// `rings` hexagonal steps of the defect, the six nearest moved out by `d·a`.
fn oracle_holes(design: &CavityDesign) -> Vec<[f64; 2]> {
    let a = design.lattice_constant;
    let n = design.lattice_rings as i64;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let steps = i.abs().max(j.abs()).max((i + j).abs());
            if steps == 0 || steps > n {
                continue;
            }
            let (x, y) = (a * (i as f64 + 0.5 * j as f64), a * (3f64.sqrt() / 2.0) * j as f64);
            let scale = if steps == 1 { 1.0 + design.inner_hole_shift } else { 1.0 };
            out.push([x * scale, y * scale]);
        }
    }
    out
}

#[test]
fn membrane_content_matches_point_sampling() {
    for d in [0.0, 0.09, 0.18] {
        let design = small(d);
        let a = design.lattice_constant;
        let (hx, hy) = (3.0 * a, 2.5 * a);
        let holes = oracle_holes(&design);
        let r2 = design.hole_radius.powi(2);
        let samples = 1500;
        let mut solid = 0usize;
        for p in 0..samples {
            for q in 0..samples {
                let x = -hx + (p as f64 + 0.5) * 2.0 * hx / samples as f64;
                let y = -hy + (q as f64 + 0.5) * 2.0 * hy / samples as f64;
                if holes.iter().all(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2) > r2) {
                    solid += 1;
                }
            }
        }
        let area = 4.0 * hx * hy * solid as f64 / (samples * samples) as f64;
        let expected = (design.slab_index.powi(2) - 1.0) * design.membrane_thickness * area;
        let got = excess_in_box(&rasterize(&design, 10).unwrap(), hx, hy);
        assert!((got - expected).abs() / expected < 1e-3, "d {d}: {got} vs {expected}");
    }
}
