use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Least-squares affine map `X ≈ M z + t` between two point sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Row-major `[[m11, m12], [m21, m22]]`.
    pub matrix: [[f64; 2]; 2],
    pub translation: C64,
    /// Singular values of `matrix`, largest first.
    pub singular_values: [f64; 2],
    /// RMS residual of the fit.
    pub rms: f64,
}

/// Fit the affine map carrying `from[k]` to `to[k]` for all `k` with
/// `mask[k]`; its singular values are the principal stretches.
pub fn fit_linear_map(from: &[C64], to: &[C64], mask: impl Fn(usize) -> bool) -> Result<LinearFit> {
    let idx: Vec<usize> = (0..from.len().min(to.len())).filter(|&k| mask(k)).collect();
    if idx.len() < 3 {
        return Err(Error::input("linear fit needs at least 3 points"));
    }
    let n = idx.len() as f64;
    let cf = idx.iter().map(|&k| from[k]).sum::<C64>() / n;
    let ct = idx.iter().map(|&k| to[k]).sum::<C64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let (mut ux, mut uy, mut vx, mut vy) = (0.0, 0.0, 0.0, 0.0);
    for &k in &idx {
        let p = from[k] - cf;
        let q = to[k] - ct;
        sxx += p.re * p.re;
        sxy += p.re * p.im;
        syy += p.im * p.im;
        ux += q.re * p.re;
        uy += q.re * p.im;
        vx += q.im * p.re;
        vy += q.im * p.im;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= 1e-14 * (sxx * syy).max(f64::MIN_POSITIVE) {
        return Err(Error::input("linear fit is ill-conditioned (collinear points)"));
    }
    let solve = |bx: f64, by: f64| ((bx * syy - by * sxy) / det, (by * sxx - bx * sxy) / det);
    let (m11, m12) = solve(ux, uy);
    let (m21, m22) = solve(vx, vy);
    let matrix = [[m11, m12], [m21, m22]];
    let translation = ct - C64::new(m11 * cf.re + m12 * cf.im, m21 * cf.re + m22 * cf.im);
    let mut ss = 0.0;
    for &k in &idx {
        let p = from[k];
        let pred = translation + C64::new(m11 * p.re + m12 * p.im, m21 * p.re + m22 * p.im);
        ss += (to[k] - pred).norm_sqr();
    }
    Ok(LinearFit {
        matrix,
        translation,
        singular_values: singular_values_2x2(matrix),
        rms: (ss / n).sqrt(),
    })
}

/// Singular values of a real 2×2 matrix, largest first.
pub fn singular_values_2x2(m: [[f64; 2]; 2]) -> [f64; 2] {
    let [[a, b], [c, d]] = m;
    let s1 = ((a + d).powi(2) + (c - b).powi(2)).sqrt();
    let s2 = ((a - d).powi(2) + (c + b).powi(2)).sqrt();
    [(s1 + s2) / 2.0, ((s1 - s2) / 2.0).abs()]
}

/// Least-squares fit of `X(z) - z ≈ b + c/z` on far-field samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldFit {
    pub b: C64,
    pub c: C64,
    /// Slope of `log|X(z) - z - b|` against `log|z - center|`.
    pub decay_exponent: f64,
    pub residuals: Vec<f64>,
}

/// Fit on samples `(z, X(z))`, with `z` measured from `center`. Requires at
/// least 8 samples on at least 3 distinct radii.
pub fn fit_far_field(z: &[C64], x: &[C64], center: C64) -> Result<FarFieldFit> {
    if z.len() != x.len() {
        return Err(Error::input("far-field sample lengths differ"));
    }
    let mut radii: Vec<f64> = z.iter().map(|p| (p - center).norm()).collect();
    radii.sort_by(|a, b| a.total_cmp(b));
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-6 * b.abs());
    if z.len() < 8 || radii.len() < 3 {
        return Err(Error::input("far-field fit needs >= 8 samples on >= 3 radii"));
    }
    // normal equations for the complex unknowns (b, c) with basis (1, 1/w)
    let (mut a11, mut a12, mut a22) = (0.0, C64::new(0.0, 0.0), 0.0);
    let (mut r1, mut r2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for (p, q) in z.iter().zip(x) {
        let w = p - center;
        let f = 1.0 / w;
        let y = q - p;
        a11 += 1.0;
        a12 += f;
        a22 += f.norm_sqr();
        r1 += y;
        r2 += f.conj() * y;
    }
    let det = a11 * a22 - a12.norm_sqr();
    if det.abs() <= 1e-12 * a11 * a22 {
        return Err(Error::input("far-field fit is ill-conditioned"));
    }
    let b = (a22 * r1 - a12 * r2) / det;
    let c = (a11 * r2 - a12.conj() * r1) / det;

    let mut residuals = Vec::with_capacity(z.len());
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, q) in z.iter().zip(x) {
        let w = p - center;
        residuals.push((q - p - b - c / w).norm());
        let tail = (q - p - b).norm();
        if tail > 0.0 {
            let (lx, ly) = (w.norm().ln(), tail.ln());
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            m += 1.0;
        }
    }
    let denom = m * sxx - sx * sx;
    let decay_exponent = if m >= 2.0 && denom.abs() > 1e-12 {
        (m * sxy - sx * sy) / denom
    } else {
        f64::NAN
    };
    Ok(FarFieldFit {
        b,
        c,
        decay_exponent,
        residuals,
    })
}
