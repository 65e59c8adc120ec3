//! Physical properties of the Yee solver on small grids.

mod common;

use common::{gaussian_ex, line};
use h1cav::fdtd::{Boundary, Component, PmlSpec, YeeState};

fn ex_line(s: &YeeState) -> Vec<f64> {
    (0..s.dims()[2]).map(|k| s.get(Component::Ex, 0, 0, k)).collect()
}

/// Centroid of E² beyond `from`.
fn centroid(e: &[f64], from: usize) -> f64 {
    let (mut m0, mut m1) = (0.0, 0.0);
    for (k, v) in e.iter().enumerate().skip(from) {
        m0 += v * v;
        m1 += k as f64 * v * v;
    }
    m1 / m0
}

#[test]
fn plane_wave_travels_at_the_medium_speed() {
    for eps in [1.0, 4.0] {
        let v = 1.0 / f64::sqrt(eps);
        let (start, travel) = (60.0, 100.0);
        let mut s = line(400, eps, PmlSpec::new(12));
        gaussian_ex(&mut s, start, 8.0);
        // the initial pulse splits into two halves moving in opposite directions
        let steps = (travel / (v * s.dt())).round() as usize;
        for _ in 0..steps {
            s.step().unwrap();
        }
        let t = s.time();
        let moved = centroid(&ex_line(&s), start as usize) - start;
        let speed = moved / t;
        assert!((speed - v).abs() / v < 0.01, "eps {eps}: speed {speed} vs {v} over {moved} cells");
        assert!(moved > 95.0);
    }
}

#[test]
fn pml_reflection_is_below_1e_minus_4() {
    let r = common::pml_reflection();
    assert!(r < 1e-4, "amplitude reflection {r:e}");
    assert!(r > 0.0);
}

#[test]
fn closed_box_energy_is_conserved_over_1000_steps() {
    let worst = common::closed_box_drift(1000);
    assert!(worst < 0.01, "relative drift {worst}");
}

#[test]
fn energy_only_decreases_with_absorbing_walls() {
    let mut s = YeeState::uniform([30, 30, 30], 1e-8, 1.0, PmlSpec::new(8), [Boundary::Pec; 3]).unwrap();
    // E = ∇×(ẑψ) with ψ a Gaussian at Hz positions: discretely divergence-free,
    // so no static charge is left behind
    let psi = |i: usize, j: usize, k: usize| {
        let r2 = (i as f64 - 14.5).powi(2) + (j as f64 - 14.5).powi(2) + (k as f64 - 15.0).powi(2);
        (-r2 / 8.0).exp()
    };
    for k in 1..29 {
        for j in 1..29 {
            for i in 1..29 {
                let idx = s.index(i, j, k);
                s.field_mut(Component::Ex)[idx] = psi(i, j, k) - psi(i, j - 1, k);
                s.field_mut(Component::Ey)[idx] = psi(i - 1, j, k) - psi(i, j, k);
            }
        }
    }
    let u0 = s.step_with_energy().unwrap();
    // energy re-entering after a PML reflection of amplitude r < 1e-4 is at
    // most r²·U0, which bounds any rise
    let tolerance = 1e-7 * u0;
    let mut prev = u0;
    for n in 0..600 {
        let u = s.step_with_energy().unwrap();
        assert!(u <= prev + tolerance, "step {n}: energy rose from {prev} to {u}");
        prev = u;
    }
    assert!(prev < 1e-3 * u0, "energy left: {}", prev / u0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let run = |threads: usize| {
        let mut s = YeeState::uniform([20, 18, 22], 1e-8, 3.0, PmlSpec::new(5), [Boundary::Pec; 3]).unwrap();
        s.set_threads(threads).unwrap();
        let idx = s.index(10, 9, 11);
        let mut energies = Vec::new();
        for n in 0..150 {
            if n < 40 {
                s.inject(2, idx, (0.3 * n as f64).sin());
            }
            energies.push(s.step_with_energy().unwrap());
        }
        let fields: Vec<Vec<f64>> =
            [Component::Ex, Component::Ey, Component::Ez, Component::Hx].iter().map(|&c| s.field(c).to_vec()).collect();
        (energies, fields)
    };
    let one = run(1);
    for threads in [2, 3, 5] {
        assert_eq!(one, run(threads), "{threads} workers");
    }
}
