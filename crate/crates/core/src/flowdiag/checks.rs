use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::beltrami::{log_distortion, BeltramiField};
use super::fit::fit_far_field;
use super::tracers::{RegionTag, TracerGrid};
use crate::report::{ReportEntry, Verdict};
use crate::C64;

/// Check tolerances. Relative tolerances multiply the bound by `1 + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub bound_rel: f64,
    pub conformal_abs: f64,
    pub pointwise_rel: f64,
    pub pointwise_abs: f64,
    pub saturation_rel: f64,
    pub farfield_b: f64,
    pub decay_min: f64,
    pub decay_max: f64,
    pub area_preservation: f64,
    pub initial_derivative_rel: f64,
    pub quasisymmetry_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bound_rel: 0.05,
            conformal_abs: 1e-2,
            pointwise_rel: 0.02,
            pointwise_abs: 1e-2,
            saturation_rel: 0.02,
            farfield_b: 1e-2,
            decay_min: -1.15,
            decay_max: -0.85,
            area_preservation: 0.01,
            initial_derivative_rel: 0.05,
            quasisymmetry_cap: 10.0,
        }
    }
}

impl Tolerances {
    /// Scale every tolerance (not the decay window or the cap) by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        Tolerances {
            bound_rel: self.bound_rel * f,
            conformal_abs: self.conformal_abs * f,
            pointwise_rel: self.pointwise_rel * f,
            pointwise_abs: self.pointwise_abs * f,
            saturation_rel: self.saturation_rel * f,
            farfield_b: self.farfield_b * f,
            area_preservation: self.area_preservation * f,
            initial_derivative_rel: self.initial_derivative_rel * f,
            ..*self
        }
    }
}

/// `K_meas = max K_local ≤ e^{|t|‖ω₀‖∞}(1 + tol)`. Any node with `|μ| ≥ 1`
/// is a hard failure.
pub fn distortion_check(field: &BeltramiField, t: f64, omega0_linf: f64, tol: f64) -> ReportEntry {
    let k = field.max_k();
    let bound = (t.abs() * omega0_linf).exp();
    let mut e = ReportEntry::upper("distortion", t, k, bound * (1.0 + tol));
    if !field.all_subunit() {
        e.verdict = Verdict::Fail;
    }
    e
}

/// Node-wise `log K_local ≤ |t|·ω_ref (1 + rel) + abs`, where `ω_ref` is the
/// largest initial density on the node's stencil. Reports the worst excess
/// `log K_local - |t|·ω_ref(1 + rel)` against the absolute slack.
pub fn pointwise_bound_check(
    field: &BeltramiField,
    t: f64,
    omega_ref: &[f64],
    rel: f64,
    abs: f64,
) -> ReportEntry {
    let mut worst = f64::NEG_INFINITY;
    for (mu, w) in field.mu.iter().zip(omega_ref) {
        let lhs = log_distortion(mu.norm());
        worst = worst.max(lhs - t.abs() * w.abs() * (1.0 + rel));
    }
    if field.is_empty() {
        return ReportEntry::inconclusive("pointwise_bound", t);
    }
    ReportEntry::upper("pointwise_bound", t, worst, abs)
}

/// Saturation of the pointwise bound on interior nodes of a uniform patch:
/// `max |log K_local / (|t|·ω_ref) - 1| ≤ rel`.
pub fn saturation_check(
    field: &BeltramiField,
    tracers: &TracerGrid,
    t: f64,
    omega_ref: &[f64],
    rel: f64,
) -> ReportEntry {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (k, st) in tracers.stencils.iter().enumerate() {
        if tracers.tags[st.center] != RegionTag::InsideSupport || omega_ref[k] == 0.0 {
            continue;
        }
        let ratio = log_distortion(field.mu[k].norm()) / (t.abs() * omega_ref[k].abs());
        worst = worst.max((ratio - 1.0).abs());
        n += 1;
    }
    if n == 0 || t == 0.0 {
        return ReportEntry::inconclusive("pointwise_saturation", t);
    }
    ReportEntry::upper("pointwise_saturation", t, worst, rel)
}

/// `max |μ|` over nodes starting at least `margin` outside the support.
pub fn conformal_outside_check(
    field: &BeltramiField,
    tracers: &TracerGrid,
    t: f64,
    margin: f64,
    tol: f64,
) -> ReportEntry {
    let vals: Vec<f64> = tracers
        .stencils
        .iter()
        .zip(&field.mu)
        .filter(|(st, _)| tracers.depth[st.center] <= -margin)
        .map(|(_, m)| m.norm())
        .collect();
    if vals.is_empty() {
        return ReportEntry::inconclusive("conformal_outside", t);
    }
    let m = vals.into_iter().fold(0.0, f64::max);
    ReportEntry::upper("conformal_outside", t, m, tol)
}

/// `max |μ(τ)/τ - e^{iθ}ρ₀/2|` over interior nodes, against `rel·‖ρ₀‖∞/2`.
pub fn initial_derivative_check(
    field: &BeltramiField,
    tracers: &TracerGrid,
    tau: f64,
    theta: f64,
    rho0: &[f64],
    rel: f64,
) -> ReportEntry {
    let phase = C64::from_polar(1.0, theta);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut n = 0;
    for (k, st) in tracers.stencils.iter().enumerate() {
        if tracers.tags[st.center] != RegionTag::InsideSupport {
            continue;
        }
        let dev = (field.mu[k] / tau - phase * rho0[k] / 2.0).norm();
        worst = worst.max(dev);
        scale = scale.max(rho0[k].abs() / 2.0);
        n += 1;
    }
    if n == 0 || tau == 0.0 {
        return ReportEntry::inconclusive("initial_derivative", tau);
    }
    ReportEntry::upper("initial_derivative", tau, worst, rel * scale.max(f64::MIN_POSITIVE))
}

/// Area of the image of `E = {|z - center| < radius}`, estimated by the
/// mean of the finite-difference Jacobian over stencils in `E`, relative
/// to `|E|`.
pub fn area_ratio(field: &BeltramiField, tracers: &TracerGrid, center: C64, radius: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (k, st) in tracers.stencils.iter().enumerate() {
        if (tracers.initial[st.center] - center).norm() < radius {
            sum += field.jacobian[k];
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// `|X(E)|/|E| ≤ e^{|t|‖ω₀‖∞}(1 + tol)`.
pub fn area_distortion_check(
    field: &BeltramiField,
    tracers: &TracerGrid,
    t: f64,
    center: C64,
    radius: f64,
    omega0_linf: f64,
    tol: f64,
) -> ReportEntry {
    match area_ratio(field, tracers, center, radius) {
        Some(r) => ReportEntry::upper("area_distortion", t, r, (t.abs() * omega0_linf).exp() * (1.0 + tol)),
        None => ReportEntry::inconclusive("area_distortion", t),
    }
}

/// `| |X(E)|/|E| - 1 | ≤ tol` for measure-preserving flows.
pub fn area_preservation_check(
    field: &BeltramiField,
    tracers: &TracerGrid,
    t: f64,
    center: C64,
    radius: f64,
    tol: f64,
) -> ReportEntry {
    match area_ratio(field, tracers, center, radius) {
        Some(r) => ReportEntry::upper("area_preservation", t, (r - 1.0).abs(), tol),
        None => ReportEntry::inconclusive("area_preservation", t),
    }
}

/// Far-field normalization: `|b| ≤ tol` and the tail exponent in range.
///
/// With nonzero net circulation the tail is `c/z` with `c ≠ 0`, so the
/// decay exponent must fall in `[decay_min, decay_max]`. When the
/// circulation cancels the tail may decay faster and only the upper end
/// applies.
pub fn farfield_checks(
    tracers: &TracerGrid,
    t: f64,
    center: C64,
    tol: &Tolerances,
    net_circulation: bool,
) -> Vec<ReportEntry> {
    let z: Vec<C64> = tracers.far.iter().map(|&k| tracers.initial[k]).collect();
    let x: Vec<C64> = tracers.far.iter().map(|&k| tracers.current[k]).collect();
    match fit_far_field(&z, &x, center) {
        Ok(fit) => {
            let b = ReportEntry::upper("farfield_b", t, fit.b.norm(), tol.farfield_b);
            let tail_max = fit.residuals.iter().copied().fold(0.0, f64::max);
            let tail_scale = x.iter().zip(&z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let d = fit.decay_exponent;
            // at t = 0 there is no tail to measure
            let decay = if tail_scale < 1e-14 {
                ReportEntry::inconclusive("farfield_decay", t)
            } else {
                let lower = if net_circulation { tol.decay_min } else { f64::NEG_INFINITY };
                let inside = d >= lower && d <= tol.decay_max;
                ReportEntry {
                    check: "farfield_decay".into(),
                    t,
                    measured: d,
                    bound: tol.decay_max,
                    margin: (d - lower).min(tol.decay_max - d),
                    verdict: Verdict::from_bool(inside),
                    hard: true,
                }
            };
            let resid = ReportEntry::upper("farfield_residual", t, tail_max, tail_scale.max(1e-300)).soft();
            vec![b, decay, resid]
        }
        Err(_) => vec![
            ReportEntry::inconclusive("farfield_b", t),
            ReportEntry::inconclusive("farfield_decay", t),
        ],
    }
}

/// Smallest `C ≥ 1` with `(1/C) min(ρ^K, ρ^{1/K}) ≤ ρ' ≤ C max(ρ^K, ρ^{1/K})`
/// over all triples, where `ρ = |z - z₀|/|z - w₀|` and `ρ'` is the image
/// ratio. Degenerate triples are skipped.
pub fn quasisymmetry_constant(
    initial: &[C64],
    current: &[C64],
    triples: &[(usize, usize, usize)],
    k: f64,
) -> Option<f64> {
    let mut c: f64 = 1.0;
    let mut used = 0;
    for &(a, b, d) in triples {
        let (s1, s2) = ((initial[a] - initial[b]).norm(), (initial[a] - initial[d]).norm());
        let (i1, i2) = ((current[a] - current[b]).norm(), (current[a] - current[d]).norm());
        if s1 == 0.0 || s2 == 0.0 || i1 == 0.0 || i2 == 0.0 {
            continue;
        }
        let rho = s1 / s2;
        let img = i1 / i2;
        let (p, q) = (rho.powf(k), rho.powf(1.0 / k));
        let upper = p.max(q);
        let lower = p.min(q);
        c = c.max(img / upper).max(lower / img);
        used += 1;
    }
    (used > 0).then_some(c)
}

pub fn quasisymmetry_check(
    tracers: &TracerGrid,
    t: f64,
    triples: &[(usize, usize, usize)],
    k: f64,
    cap: f64,
) -> ReportEntry {
    match quasisymmetry_constant(&tracers.initial, &tracers.current, triples, k) {
        Some(c) => ReportEntry::upper("quasisymmetry", t, c, cap).soft(),
        None => ReportEntry::inconclusive("quasisymmetry", t).soft(),
    }
}

/// Monotone area-ratio form for `E ⊂ D`: the largest
/// `(|X(E)|/|X(D)|) / (|E|/|D|)^{1/K}` over disks `E` of a quarter of
/// `D`'s radius centered on a ring inside `D`, against the same cap as the
/// quasisymmetry constant.
pub fn area_ratio_check(
    field: &BeltramiField,
    tracers: &TracerGrid,
    t: f64,
    center: C64,
    radius: f64,
    k: f64,
    cap: f64,
) -> ReportEntry {
    let Some(rd) = area_ratio(field, tracers, center, radius) else {
        return ReportEntry::inconclusive("area_ratio", t).soft();
    };
    let count = |c: C64, r: f64| {
        tracers
            .stencils
            .iter()
            .filter(|st| (tracers.initial[st.center] - c).norm() < r)
            .count() as f64
    };
    let nd = count(center, radius);
    let mut worst: f64 = 0.0;
    for j in 0..6 {
        let c = center + C64::from_polar(radius / 2.0, j as f64 * PI / 3.0);
        if let Some(re) = area_ratio(field, tracers, c, radius / 4.0) {
            let ne = count(c, radius / 4.0);
            let img = (re * ne) / (rd * nd);
            worst = worst.max(img / (ne / nd).powf(1.0 / k));
        }
    }
    ReportEntry::upper("area_ratio", t, worst, cap).soft()
}
