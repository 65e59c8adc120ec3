//! Exact area of a disc clipped to an axis-aligned rectangle.

/// ∫ sqrt(r² − x²) dx.
fn half_chord_integral(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// Area of the intersection of the disc of radius `r` centred at `(cx, cy)`
/// with the rectangle `[x0, x1] × [y0, y1]`.
///
/// The integrand `max(0, min(y1, s) − max(y0, −s))`, with `s` the half chord,
/// is split at every point where one of its branches switches so that each
/// piece has a closed-form antiderivative.
pub fn disc_rect_area(cx: f64, cy: f64, r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (x0, x1) = (x0 - cx, x1 - cx);
    let (y0, y1) = (y0 - cy, y1 - cy);
    let lo = x0.max(-r);
    let hi = x1.min(r);
    if lo >= hi || y0 >= y1 || y1 <= -r || y0 >= r {
        return 0.0;
    }

    let mut cuts = vec![lo, hi];
    for y in [y0, y1] {
        if y.abs() < r {
            let x = (r * r - y * y).sqrt();
            for c in [-x, x] {
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let s = (r * r - m * m).max(0.0).sqrt();
        let top_is_chord = s < y1;
        let bottom_is_chord = -s > y0;
        if (if top_is_chord { s } else { y1 }) <= (if bottom_is_chord { -s } else { y0 }) {
            continue;
        }
        let chord = half_chord_integral(b, r) - half_chord_integral(a, r);
        let top = if top_is_chord { chord } else { y1 * (b - a) };
        let bottom = if bottom_is_chord { -chord } else { y0 * (b - a) };
        area += top - bottom;
    }
    area.max(0.0)
}
