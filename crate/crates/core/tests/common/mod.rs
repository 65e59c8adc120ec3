//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use h1cav::farfield::{near_to_far, FarFieldMap};
use h1cav::fdtd::{Boundary, Component, PmlSpec, YeeState};
use h1cav::field::PlaneField;
use nalgebra::{Matrix3, Matrix4, Vector3};
use num_complex::Complex64;

/// Composite Simpson rule of `f` over `[0, t]` with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> Complex64>(f: F, t: f64, n: usize) -> Complex64 {
    let n = n + n % 2;
    let h = t / n as f64;
    let mut s = f(0.0) + f(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += f(i as f64 * h) * w;
    }
    s * (h / 3.0)
}

/// Two-photon state of an asymmetrically Purcell-enhanced cascade, by direct
/// time-domain integration of the Wigner–Weisskopf amplitudes
///
/// `ψ_u(t₂, τ) = √(γ₂ᵤ γ₁ᵤ) e^{−Γ₂ t₂/2} e^{−(γ₁ᵤ/2 + iωᵤ) τ}`
///
/// (biexciton decay at `t₂`, exciton decay a delay `τ` later) and
/// `ρ_uv = ∫∫ ψ_u ψ_v* dt₂ dτ`. Units: `γ_bulk (F_H + F_V) = 2`, so that
/// `F_H = 1 + δF`, `F_V = 1 − δF`; the V exciton sits `g` above H.
pub fn wigner_weisskopf_state(delta_f: f64, g: f64) -> Matrix4<Complex64> {
    let rates = [1.0 + delta_f, 1.0 - delta_f];
    let omega = [-0.5 * g, 0.5 * g];
    let big_gamma = rates[0] + rates[1];
    let resolution = |decay: f64, freq: f64| -> (f64, usize) {
        let t = 40.0 / decay;
        let h = 0.01 / decay.max(freq.abs());
        (t, (t / h).ceil() as usize)
    };
    let (t2_max, n2) = resolution(big_gamma, 0.0);
    let biexciton = simpson(|t| Complex64::new((-big_gamma * t).exp(), 0.0), t2_max, n2).re;
    let mut m = Matrix4::zeros();
    let slot = [0usize, 3];
    for u in 0..2 {
        for v in 0..2 {
            let (gu, gv) = (rates[u], rates[v]);
            if gu == 0.0 || gv == 0.0 {
                continue;
            }
            let decay = 0.5 * (gu + gv);
            let dw = omega[u] - omega[v];
            let (t_max, n) = resolution(decay, dw);
            let delay = simpson(|t| Complex64::from_polar((-decay * t).exp(), -dw * t), t_max, n);
            m[(slot[u], slot[v])] = delay * ((gu * gu * gv * gv).sqrt() * biexciton);
        }
    }
    m
}

/// `½ Σ|λ(a − b)|` for Hermitian `a`, `b`.
pub fn trace_distance(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    let d = a - b;
    let d = (d + d.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * nalgebra::SymmetricEigen::new(d).eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

fn unit(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Largest CHSH value by direct search over the second party's settings.
///
/// For settings `b`, `b′` the best first-party settings give
/// `|T(b + b′)| + |T(b − b′)|` (Cauchy–Schwarz); the four angles of `b, b′`
/// are searched on a coarse grid and then refined by shrinking-step pattern
/// search from the best grid points.
pub fn chsh_brute_force(t: &Matrix3<f64>) -> f64 {
    let value = |x: &[f64; 4]| {
        let (b, bp) = (unit(x[0], x[1]), unit(x[2], x[3]));
        (t * (b + bp)).norm() + (t * (b - bp)).norm()
    };
    let grid = 8;
    let step = std::f64::consts::PI / grid as f64;
    let mut starts: Vec<([f64; 4], f64)> = Vec::new();
    for i in 0..=grid {
        for j in 0..2 * grid {
            for k in 0..=grid {
                for l in 0..2 * grid {
                    let x = [i as f64 * step, j as f64 * step, k as f64 * step, l as f64 * step];
                    starts.push((x, value(&x)));
                }
            }
        }
    }
    starts.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut best = 0.0f64;
    for (mut x, mut v) in starts.into_iter().take(6) {
        let mut h = step;
        while h > 1e-9 {
            let mut improved = false;
            for d in 0..4 {
                for s in [h, -h] {
                    let mut y = x;
                    y[d] += s;
                    let w = value(&y);
                    if w > v {
                        x = y;
                        v = w;
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        best = best.max(v);
    }
    best
}

/// Haar-ish random 2×2 unitary from three angles and a phase.
pub fn unitary2(a: f64, b: f64, c: f64, phase: f64) -> nalgebra::Matrix2<Complex64> {
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let (ca, sa) = (Complex64::new(a.cos(), 0.0), Complex64::new(a.sin(), 0.0));
    nalgebra::Matrix2::new(e(b) * ca, e(c) * sa, -e(-c) * sa, e(-b) * ca) * e(phase)
}

pub fn kron(a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Column of `n` cells along z with one cell in x and y: a 1D line for
/// x-polarized plane waves travelling along z.
pub fn line(n: usize, eps: f64, pml: PmlSpec) -> YeeState {
    YeeState::uniform([1, 1, n], 1e-8, eps, pml, [Boundary::Periodic, Boundary::Periodic, Boundary::Pec]).unwrap()
}

pub fn gaussian_ex(s: &mut YeeState, centre: f64, width: f64) {
    let n = s.dims()[2];
    let ex = s.field_mut(Component::Ex);
    for (k, v) in ex.iter_mut().enumerate().take(n) {
        let z = k as f64 - centre;
        *v = (-(z * z) / (2.0 * width * width)).exp();
    }
}

/// Peak amplitude returned by a 12-cell PML relative to the incident pulse.
///
/// Incident pulse hits the PML at the far end of a short line; a line long
/// enough that nothing returns within the window serves as reference.
pub fn pml_reflection() -> f64 {
    let probe = 100;
    let run = |n: usize| -> Vec<f64> {
        let mut s = line(n, 1.0, PmlSpec::new(12));
        gaussian_ex(&mut s, 60.0, 6.0);
        let mut trace = Vec::new();
        for _ in 0..900 {
            s.step().unwrap();
            trace.push(s.get(Component::Ex, 0, 0, probe));
        }
        trace
    };
    let test = run(200);
    let reference = run(1400);
    let incident = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reflected = test.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    reflected / incident
}

/// Largest relative energy excursion of a PEC box over `steps` steps.
pub fn closed_box_drift(steps: usize) -> f64 {
    let mut s = YeeState::uniform([18, 16, 14], 1e-8, 2.5, PmlSpec::none(), [Boundary::Pec; 3]).unwrap();
    for (c, (i, j, k)) in [(Component::Ez, (9, 8, 7)), (Component::Ex, (5, 4, 6)), (Component::Hy, (11, 7, 3))] {
        let idx = s.index(i, j, k);
        s.field_mut(c)[idx] = 1.0;
    }
    let u0 = s.step_with_energy().unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let u = s.step_with_energy().unwrap();
        worst = worst.max((u - u0).abs() / u0);
    }
    worst
}

/// Relative error of the far-field 1/e² half-width of a Gaussian spot
/// `exp(−r²/w²)` against the diffraction angle `sinθ = λ/(πw)`.
pub fn gaussian_width_error(waist: f64, lambda: f64) -> f64 {
    let n = 160;
    let c = n / 2;
    let mut p = PlaneField::zeros(n, n, 1.0, [c, c], lambda);
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (i as f64 - c as f64 + 0.5, j as f64 - c as f64);
            p.ex[i + n * j] = Complex64::new((-(x * x + y * y) / (waist * waist)).exp(), 0.0);
        }
    }
    let map = near_to_far(&p, true).unwrap();
    let target = map.ex[map.index(0, 0)].norm_sqr() * (-2.0f64).exp();
    let crossing = (0..map.radius as isize)
        .find_map(|q| {
            let (a, b) = (map.ex[map.index(0, q)].norm_sqr(), map.ex[map.index(0, q + 1)].norm_sqr());
            (a >= target && b < target).then(|| (q as f64 + (a / target).ln() / (a / b).ln()) * map.dk / map.k0)
        })
        .unwrap();
    let expected = lambda / (PI * waist);
    (crossing - expected).abs() / expected
}

/// Far field whose power density is exactly `intensity(sx, sy)`: Êx is
/// chosen so that the longitudinal component is accounted for.
pub fn map_with_intensity(radius: usize, step: f64, intensity: impl Fn(f64, f64) -> f64) -> FarFieldMap {
    let side = 2 * radius + 1;
    let mut map = FarFieldMap {
        radius,
        dk: step,
        k0: 1.0,
        wavelength: 1e-6,
        cell_size: 1e-6 / (2.0 * PI),
        polarization: None,
        ex: vec![Complex64::default(); side * side],
        ey: vec![Complex64::default(); side * side],
    };
    for idx in 0..side * side {
        let (sx, sy) = map.direction(idx);
        let c2 = 1.0 - sx * sx - sy * sy;
        if c2 <= 0.0 {
            continue;
        }
        // dP/d²k = cosθ/(8π²)·|Êx|²(1 + sx²/cos²θ) for an Ex-only spectrum
        let amp = (8.0 * PI * PI * intensity(sx, sy) / (c2.sqrt() * (1.0 + sx * sx / c2))).sqrt();
        map.ex[idx] = Complex64::new(amp, 0.0);
    }
    map
}

/// `exp(−s²/2w²)` on the direction disc.
pub fn gaussian_intensity(w: f64) -> impl Fn(f64, f64) -> f64 {
    move |sx, sy| (-(sx * sx + sy * sy) / (2.0 * w * w)).exp()
}
