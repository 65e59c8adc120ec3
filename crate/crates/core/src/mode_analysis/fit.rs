use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest normalized residual accepted for a single-mode fit.
pub const MAX_FIT_RESIDUAL: f64 = 0.05;

/// Result of fitting `A e^{−Γt} cos(ωt + φ)` to a ring-down record.
///
/// `omega` and `gamma` are in the inverse of the time unit of the sample
/// spacing passed to [`fit_decay`]. `t = 0` is the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub omega: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// `sqrt(Σ(y − model)² / Σ y²)`.
    pub residual: f64,
}

impl DecayFit {
    /// Quality factor `ω / (2Γ)`.
    pub fn quality_factor(&self) -> f64 {
        self.omega / (2.0 * self.gamma)
    }

    pub fn model(&self, t: f64) -> f64 {
        self.amplitude * (-self.gamma * t).exp() * (self.omega * t + self.phase).cos()
    }
}

struct Extremum {
    t: f64,
    magnitude: f64,
}

/// Interpolated extrema of `|y|`, one per half cycle between sign changes.
fn half_cycle_extrema(y: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    let mut start = 0;
    for n in 1..=y.len() {
        let boundary = n == y.len() || (y[n] >= 0.0) != (y[n - 1] >= 0.0);
        if !boundary {
            continue;
        }
        // skip the partial half cycles at both ends of the record
        if start > 0 && n < y.len() && n - start >= 2 {
            let (m, _) = y[start..n]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .unwrap();
            let m = start + m;
            if m > 0 && m + 1 < y.len() {
                let (a, b, c) = (y[m - 1].abs(), y[m].abs(), y[m + 1].abs());
                let denom = a - 2.0 * b + c;
                let shift = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
                let peak = b - 0.25 * (a - c) * shift;
                if peak > 0.0 {
                    out.push(Extremum { t: m as f64 + shift, magnitude: peak });
                }
            }
        }
        start = n;
    }
    out
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Linear least squares for `e^{−Γn}(A cos ωn + B sin ωn)` at fixed ω, Γ.
fn quadratures(y: &[f64], omega: f64, gamma: f64) -> (f64, f64) {
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (n, &v) in y.iter().enumerate() {
        let t = n as f64;
        let e = (-gamma * t).exp();
        let (s, c) = (omega * t).sin_cos();
        let (c, s) = (e * c, e * s);
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += v * c;
        sys += v * s;
    }
    let det = scc * sss - scs * scs;
    ((syc * sss - sys * scs) / det, (sys * scc - syc * scs) / det)
}

fn residual(y: &[f64], omega: f64, gamma: f64, a: f64, b: f64) -> f64 {
    let (mut r2, mut y2) = (0.0, 0.0);
    for (n, &v) in y.iter().enumerate() {
        let t = n as f64;
        let (s, c) = (omega * t).sin_cos();
        let m = (-gamma * t).exp() * (a * c + b * s);
        r2 += (v - m) * (v - m);
        y2 += v * v;
    }
    (r2 / y2).sqrt()
}

/// Gauss–Newton polish of (ω, Γ, A, B) starting from the envelope estimate.
fn refine(y: &[f64], mut p: [f64; 4]) -> [f64; 4] {
    for _ in 0..20 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        let [w, g, a, b] = p;
        for (n, &v) in y.iter().enumerate() {
            let t = n as f64;
            let e = (-g * t).exp();
            let (s, c) = (w * t).sin_cos();
            let m = e * (a * c + b * s);
            let jac = Vector4::new(e * t * (-a * s + b * c), -t * m, e * c, e * s);
            jtj += jac * jac.transpose();
            jtr += jac * (v - m);
        }
        let Some(delta) = jtj.lu().solve(&jtr) else { break };
        p = [w + delta[0], g + delta[1], a + delta[2], b + delta[3]];
        if delta[0].abs() < 1e-14 * w.abs().max(1e-300) && delta[1].abs() < 1e-14 {
            break;
        }
    }
    p
}

/// Fit a single damped oscillation to uniformly sampled data.
///
/// The frequency comes from the spacing of successive half-cycle extrema and
/// the decay rate from a straight-line fit of their logarithms; both are
/// then polished by nonlinear least squares on the raw record.
pub fn fit_decay(series: &[f64], dt: f64) -> Result<DecayFit> {
    if series.len() < 16 || !(dt > 0.0) {
        return Err(Error::Analysis("ring-down record too short to fit".into()));
    }
    let peak = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::Analysis("ring-down record carries no signal".into()));
    }
    let extrema = half_cycle_extrema(series);
    if extrema.len() < 6 {
        return Err(Error::MultiMode { residual: 1.0, limit: MAX_FIT_RESIDUAL });
    }
    let idx: Vec<f64> = (0..extrema.len()).map(|m| m as f64).collect();
    let times: Vec<f64> = extrema.iter().map(|e| e.t).collect();
    let logs: Vec<f64> = extrema.iter().map(|e| e.magnitude.ln()).collect();
    let (half_period, _) = line_fit(&idx, &times);
    let omega0 = std::f64::consts::PI / half_period;
    let (slope, _) = line_fit(&times, &logs);
    let gamma0 = -slope;

    let (a0, b0) = quadratures(series, omega0, gamma0);
    let mut p = [omega0, gamma0, a0, b0];
    if residual(series, omega0, gamma0, a0, b0) < 0.5 {
        let q = refine(series, p);
        let (aq, bq) = quadratures(series, q[0], q[1]);
        if q.iter().all(|v| v.is_finite())
            && residual(series, q[0], q[1], aq, bq) <= residual(series, p[0], p[1], p[2], p[3])
        {
            p = [q[0], q[1], aq, bq];
        }
    }
    let [w, g, a, b] = p;
    let res = residual(series, w, g, a, b);
    if !(res <= MAX_FIT_RESIDUAL) {
        return Err(Error::MultiMode { residual: res, limit: MAX_FIT_RESIDUAL });
    }
    // A cos ωt + B sin ωt = R cos(ωt + φ) with R cos φ = A, −R sin φ = B
    Ok(DecayFit {
        omega: w / dt,
        gamma: g / dt,
        amplitude: a.hypot(b),
        phase: (-b).atan2(a),
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn synth(omega: f64, gamma: f64, phase: f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| {
            let t = k as f64 * dt;
            (-gamma * t).exp() * (omega * t + phase).cos()
        })
        .collect()
    }

    #[test]
    fn recovers_frequency_and_decay_of_synthetic_ringdown() {
        let omega = 2.0 * PI * 300e12;
        let gamma = 1e11;
        let dt = (2.0 * PI / omega) / 47.3;
        let y = synth(omega, gamma, 0.7, dt, 47 * 300);
        let fit = fit_decay(&y, dt).unwrap();
        assert!((fit.omega - omega).abs() / omega < 1e-3);
        assert!((fit.gamma - gamma).abs() / gamma < 1e-3, "{}", fit.gamma);
        assert!(fit.residual < 1e-6);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
    }

    #[test]
    fn undamped_sinusoid_has_no_decay() {
        let dt = 0.05;
        let y = synth(1.3, 0.0, -0.2, dt, 20_000);
        let fit = fit_decay(&y, dt).unwrap();
        assert!(fit.gamma.abs() < 1e-9 * fit.omega);
        assert!((fit.omega - 1.3).abs() < 1e-9);
    }

    #[test]
    fn white_noise_is_rejected() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let y: Vec<f64> = (0..5000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(matches!(fit_decay(&y, 1.0), Err(Error::MultiMode { .. })));
    }

    #[test]
    fn two_comparable_modes_exceed_residual_limit() {
        let dt = 0.05;
        let y: Vec<f64> = (0..20_000)
            .map(|k| {
                let t = k as f64 * dt;
                (1.0 * t).cos() + 0.6 * (1.37 * t).cos()
            })
            .collect();
        assert!(matches!(fit_decay(&y, dt), Err(Error::MultiMode { .. })));
    }
}
