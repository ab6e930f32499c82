//! Closed-form integrals of `1/u` and `1/u²` over axis-aligned rectangles.
//!
//! Both are assembled from a corner primitive `G(a, b) = ∫_0^a ∫_0^b k(x + iy)`
//! for `a, b > 0`, reflected into the other quadrants, and combined by
//! inclusion-exclusion over the rectangle corners. The `1/u²` primitive drops
//! its `log ε` corner term; those terms cancel in the inclusion-exclusion,
//! which therefore yields the ordinary integral when the origin is outside
//! the rectangle and the principal value (symmetric exclusion disk) when it
//! is inside.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::C64;

fn corner_cauchy(a: f64, b: f64) -> C64 {
    let al = b.atan2(a);
    let (s, c) = al.sin_cos();
    a * C64::new(al, c.ln()) + b * C64::new(-s.ln(), -(FRAC_PI_2 - al))
}

fn corner_beurling(a: f64, b: f64) -> C64 {
    let al = b.atan2(a);
    let (s, c) = al.sin_cos();
    let e = C64::from_polar(1.0, -al) * s;
    let sin2 = (2.0 * al).sin();
    let t1 = a.ln() * e - e * c.ln() - C64::new(al / 2.0 - sin2 / 4.0, c.ln() + s * s / 2.0);
    let t2 = b.ln() * (-C64::i() - e)
        + e * s.ln()
        + C64::new(FRAC_PI_4 - al / 2.0 - sin2 / 4.0, -(0.5 - s * s / 2.0));
    t1 + t2
}

/// Signed integral over the rectangle spanned by the origin and `(a, b)`.
#[inline]
fn signed_corner(a: f64, b: f64, odd: bool) -> C64 {
    if a == 0.0 || b == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let (pa, pb) = (a > 0.0, b > 0.0);
    let g = if odd {
        // 1/u: reflections x → -x and y → -y map k to -k̄ and k̄.
        let g = corner_cauchy(a.abs(), b.abs());
        match (pa, pb) {
            (true, true) => g,
            (false, true) => -g.conj(),
            (false, false) => -g,
            (true, false) => g.conj(),
        }
    } else {
        let g = corner_beurling(a.abs(), b.abs());
        if pa == pb {
            g
        } else {
            g.conj()
        }
    };
    if pa == pb {
        g
    } else {
        -g
    }
}

fn rect(x1: f64, x2: f64, y1: f64, y2: f64, odd: bool) -> C64 {
    signed_corner(x2, y2, odd) - signed_corner(x1, y2, odd) - signed_corner(x2, y1, odd)
        + signed_corner(x1, y1, odd)
}

/// `∫∫ du / u` over `[x1, x2] × [y1, y2]` in the `u` plane.
pub fn cell_cauchy_integral(x1: f64, x2: f64, y1: f64, y2: f64) -> C64 {
    rect(x1, x2, y1, y2, true)
}

/// `p.v. ∫∫ du / u²` over `[x1, x2] × [y1, y2]` in the `u` plane.
pub fn cell_beurling_integral(x1: f64, x2: f64, y1: f64, y2: f64) -> C64 {
    rect(x1, x2, y1, y2, false)
}
