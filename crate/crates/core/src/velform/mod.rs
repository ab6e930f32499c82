//! The velocity formulation of the transport system: reconstruct the
//! potential `q` from `-Δq = div v · div(M_θ v)` and measure how well the
//! simulated velocity satisfies `v_t + (v·∇)v + M_θ∇q = 0` and the
//! imaginary-part conservation law for `e^{-iθ}∂̄v`.

mod poisson;

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::complexfield::{BlobKernel, CompensatedSum};
use crate::dynamics::{velocity_field, SimState};
use crate::report::ReportEntry;
use crate::vorticity::io::{read_grid_csv, write_grid_csv};
use crate::vorticity::GridGeometry;
use crate::{Error, Result, C64};

/// `M_θ z = e^{iθ} z̄`: a reflection, so `M_θ ∘ M_θ = id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MTheta {
    pub theta: f64,
}

impl MTheta {
    pub fn new(theta: f64) -> Self {
        MTheta { theta }
    }

    pub fn phase(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }
}

pub fn apply_mtheta(m: MTheta, z: C64) -> C64 {
    m.phase() * z.conj()
}

/// Velocity sampled at the cell centers of a grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySnapshot {
    pub geometry: GridGeometry,
    pub v: Vec<C64>,
    pub t: f64,
}

impl VelocitySnapshot {
    pub fn zeros(geometry: GridGeometry, t: f64) -> Self {
        VelocitySnapshot {
            geometry,
            v: vec![C64::new(0.0, 0.0); geometry.len()],
            t,
        }
    }

    pub fn from_state(state: &SimState, blob: BlobKernel, geometry: GridGeometry) -> Result<Self> {
        Ok(VelocitySnapshot {
            geometry,
            v: velocity_field(state, blob, &geometry.centers())?,
            t: state.t,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.v.len() != self.geometry.len() {
            return Err(Error::input("snapshot size does not match its grid"));
        }
        if self.v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::input("snapshot values must be finite"));
        }
        if self.geometry.nx < 5 || self.geometry.ny < 5 {
            return Err(Error::input("snapshot grid needs at least 5 cells per axis"));
        }
        Ok(())
    }

    /// Same CSV layout as grids, with value columns `re,im`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        write_grid_csv(path, &self.geometry, &["re", "im"], |k| vec![self.v[k].re, self.v[k].im])
    }

    pub fn load_csv(path: &Path, t: f64) -> Result<Self> {
        let (geometry, rows) = read_grid_csv(path, 2)?;
        let s = VelocitySnapshot {
            geometry,
            v: rows.into_iter().map(|r| C64::new(r[0], r[1])).collect(),
            t,
        };
        s.validate()?;
        Ok(s)
    }

    /// `(∂v, ∂̄v)` by centered differences at an interior node.
    #[inline]
    fn derivs(&self, i: usize, j: usize) -> (C64, C64) {
        grad(&self.v, &self.geometry, i, j)
    }
}

#[inline]
fn grad(f: &[C64], g: &GridGeometry, i: usize, j: usize) -> (C64, C64) {
    let at = |i: usize, j: usize| f[j * g.nx + i];
    let fx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.h);
    let fy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.h);
    ((fx - C64::i() * fy) / 2.0, (fx + C64::i() * fy) / 2.0)
}

/// Dirichlet data for the potential on the outer ring of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QBoundary {
    /// `q = 0`.
    Zero,
    /// The monopole far field `-(∫f / 2π) log|z - c|` of the source.
    #[default]
    Monopole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSolution {
    pub geometry: GridGeometry,
    /// Values on every node, shifted to zero mean.
    pub q: Vec<f64>,
    /// `max |v|` on the outer ring exceeds 10% of the interior maximum.
    pub unreliable_domain: bool,
}

/// `div v · div(M_θ v)` at interior nodes (zero on the outer ring).
pub fn q_source(s: &VelocitySnapshot, m: MTheta) -> Vec<f64> {
    let g = s.geometry;
    let conj_phase = m.phase().conj();
    let mut f = vec![0.0; g.len()];
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let (d, db) = s.derivs(i, j);
            let div = 2.0 * d.re;
            let div_m = 2.0 * (conj_phase * db).re;
            f[j * g.nx + i] = div * div_m;
        }
    }
    f
}

/// Solve `-Δq = div v · div(M_θ v)` with the five-point Laplacian on the
/// grid interior and Dirichlet data on the outer ring, then shift `q` to
/// zero mean over the grid.
pub fn solve_q(s: &VelocitySnapshot, m: MTheta, boundary: QBoundary) -> Result<QSolution> {
    s.validate()?;
    solve_with_source(s, q_source(s, m), boundary)
}

fn solve_with_source(s: &VelocitySnapshot, f: Vec<f64>, boundary: QBoundary) -> Result<QSolution> {
    let g = s.geometry;
    let (nx, ny) = (g.nx - 2, g.ny - 2);
    let inner: Vec<f64> = (1..g.ny - 1)
        .flat_map(|j| (1..g.nx - 1).map(move |i| (i, j)))
        .map(|(i, j)| f[j * g.nx + i])
        .collect();
    let total: f64 = f.iter().copied().collect::<CompensatedSum>().value() * g.cell_area();
    let (lo, hi) = g.bounds();
    let c = (lo + hi) / 2.0;
    let ring_value = |i: usize, j: usize| -> f64 {
        match boundary {
            QBoundary::Zero => 0.0,
            QBoundary::Monopole => -total / (2.0 * PI) * (g.center(i, j) - c).norm().ln(),
        }
    };
    let sol = poisson::solve_dirichlet(&inner, nx, ny, g.h, ring_value);
    let mut q = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            q[j * g.nx + i] = if i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 {
                ring_value(i, j)
            } else {
                sol[(j - 1) * nx + (i - 1)]
            };
        }
    }
    let mean = q.iter().copied().collect::<CompensatedSum>().value() / q.len() as f64;
    q.iter_mut().for_each(|v| *v -= mean);

    let mut ring_max: f64 = 0.0;
    let mut inner_max: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let a = s.v[j * g.nx + i].norm();
            if i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 {
                ring_max = ring_max.max(a);
            } else {
                inner_max = inner_max.max(a);
            }
        }
    }
    Ok(QSolution {
        geometry: g,
        q,
        unreliable_domain: ring_max > 0.1 * inner_max && inner_max > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualOptions {
    pub boundary: QBoundary,
    /// Half-width of the square evaluation window about the grid center.
    pub window: f64,
    /// The velocity is divergence-free by construction (Euler kernel), so
    /// the potential source vanishes identically and `q ≡ 0`.
    pub divergence_free: bool,
}

impl ResidualOptions {
    pub fn new(window: f64) -> Self {
        ResidualOptions { boundary: QBoundary::default(), window, divergence_free: false }
    }
}

/// Norms of the formulation residuals over the evaluation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub r1_l2: f64,
    pub r1_linf: f64,
    pub r2_l2: f64,
    pub r2_linf: f64,
    pub q_linf: f64,
    pub unreliable_domain: bool,
}

/// Residuals at the middle of three equally spaced snapshots:
///
/// * `r₁ = v_t + v ∂v + v̄ ∂̄v + M_θ∇q`,
/// * `r₂ = Im(g_t + v ∂g + v̄ ∂̄g) + Im(g) div v` with `g = e^{-iθ}∂̄v`,
///
/// evaluated at nodes within the window of the grid center and at least
/// two cells from the edge.
pub fn formulation_residual(
    history: [&VelocitySnapshot; 3],
    m: MTheta,
    opts: ResidualOptions,
) -> Result<ResidualNorms> {
    check_history(history)?;
    let g = history[1].geometry;
    let source = if opts.divergence_free {
        vec![0.0; g.len()]
    } else {
        q_source(history[1], m)
    };
    let sol = solve_with_source(history[1], source, opts.boundary)?;
    residuals_with_potential(history, m, &sol, opts.window)
}

fn check_history(history: [&VelocitySnapshot; 3]) -> Result<()> {
    for s in history {
        s.validate()?;
    }
    let g = history[1].geometry;
    if !history.iter().all(|s| s.geometry.same_as(&g)) {
        return Err(Error::input("snapshots must share a grid"));
    }
    let dt = history[1].t - history[0].t;
    let dt2 = history[2].t - history[1].t;
    if !(dt.abs() > 0.0) || (dt - dt2).abs() > 1e-9 * dt.abs() {
        return Err(Error::input("snapshots must be equally spaced in time"));
    }
    Ok(())
}

/// Residuals for a given potential, e.g. one shifted by a constant.
pub fn residuals_with_potential(
    history: [&VelocitySnapshot; 3],
    m: MTheta,
    sol: &QSolution,
    window: f64,
) -> Result<ResidualNorms> {
    check_history(history)?;
    let g = history[1].geometry;
    if !sol.geometry.same_as(&g) || sol.q.len() != g.len() {
        return Err(Error::input("potential grid does not match the snapshots"));
    }
    let dt = history[1].t - history[0].t;
    let conj_phase = m.phase().conj();
    let gfield = |s: &VelocitySnapshot| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); g.len()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                out[j * g.nx + i] = conj_phase * s.derivs(i, j).1;
            }
        }
        out
    };
    let (g0, g1, g2) = (gfield(history[0]), gfield(history[1]), gfield(history[2]));
    let (lo, hi) = g.bounds();
    let c = (lo + hi) / 2.0;
    let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
    let (mut m1, mut m2): (f64, f64) = (0.0, 0.0);
    for j in 2..g.ny - 2 {
        for i in 2..g.nx - 2 {
            let z = g.center(i, j);
            if (z.re - c.re).abs() > window || (z.im - c.im).abs() > window {
                continue;
            }
            let k = j * g.nx + i;
            let v = history[1].v[k];
            let vt = (history[2].v[k] - history[0].v[k]) / (2.0 * dt);
            let (dv, dbv) = history[1].derivs(i, j);
            let q = &sol.q;
            let qx = (q[k + 1] - q[k - 1]) / (2.0 * g.h);
            let qy = (q[k + g.nx] - q[k - g.nx]) / (2.0 * g.h);
            let r1 = vt + v * dv + v.conj() * dbv + m.phase() * C64::new(qx, -qy);

            let gt = (g2[k] - g0[k]) / (2.0 * dt);
            let (dg, dbg) = grad(&g1, &g, i, j);
            let div = 2.0 * dv.re;
            let r2 = (gt + v * dg + v.conj() * dbg).im + g1[k].im * div;

            s1.add(r1.norm_sqr());
            s2.add(r2 * r2);
            m1 = m1.max(r1.norm());
            m2 = m2.max(r2.abs());
        }
    }
    let area = g.cell_area();
    Ok(ResidualNorms {
        r1_l2: (s1.value() * area).sqrt(),
        r1_linf: m1,
        r2_l2: (s2.value() * area).sqrt(),
        r2_linf: m2,
        q_linf: sol.q.iter().fold(0.0, |a, b| a.max(b.abs())),
        unreliable_domain: sol.unreliable_domain,
    })
}

/// `max |Im(e^{-iθ}∂̄v)|` over interior nodes; the propagated constraint
/// `curl(M_θ v) = 0`.
pub fn curl_mtheta(s: &VelocitySnapshot, m: MTheta) -> Result<f64> {
    s.validate()?;
    let g = s.geometry;
    let conj_phase = m.phase().conj();
    let mut worst: f64 = 0.0;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            worst = worst.max((conj_phase * s.derivs(i, j).1).im.abs());
        }
    }
    Ok(worst)
}

pub fn curl_mtheta_check(s: &VelocitySnapshot, m: MTheta, tol: f64) -> Result<ReportEntry> {
    Ok(ReportEntry::upper("curl_mtheta", s.t, curl_mtheta(s, m)?, tol))
}

/// `div(M_θ v) = 2 Re(e^{-iθ}∂̄v)` at interior nodes (zero on the ring).
pub fn div_mtheta(s: &VelocitySnapshot, m: MTheta) -> Vec<f64> {
    let g = s.geometry;
    let conj_phase = m.phase().conj();
    let mut out = vec![0.0; g.len()];
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            out[j * g.nx + i] = 2.0 * (conj_phase * s.derivs(i, j).1).re;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mtheta_examples() {
        assert_eq!(apply_mtheta(MTheta::new(0.0), C64::new(1.0, 2.0)), C64::new(1.0, -2.0));
        assert!((apply_mtheta(MTheta::new(PI / 2.0), C64::new(1.0, 0.0)) - C64::i()).norm() < 1e-15);
        let m = MTheta::new(1.234);
        let z = C64::new(-0.3, 0.8);
        assert!((apply_mtheta(m, apply_mtheta(m, z)) - z).norm() < 1e-15);
    }

    #[test]
    fn zero_velocity_has_zero_potential_and_residuals() {
        let g = GridGeometry::centered(1.0, 0.1).unwrap();
        let s: Vec<VelocitySnapshot> = (0..3).map(|k| VelocitySnapshot::zeros(g, 0.1 * k as f64)).collect();
        let q = solve_q(&s[1], MTheta::new(0.0), QBoundary::Zero).unwrap();
        assert!(q.q.iter().all(|&v| v == 0.0));
        let r = formulation_residual([&s[0], &s[1], &s[2]], MTheta::new(0.3), ResidualOptions::new(1.0)).unwrap();
        assert_eq!((r.r1_l2, r.r2_l2, r.q_linf), (0.0, 0.0, 0.0));
        assert_eq!(curl_mtheta(&s[0], MTheta::new(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn divergence_free_field_has_zero_potential() {
        // rigid rotation: the differences are exact, so the source vanishes
        let g = GridGeometry::centered(1.0, 0.05).unwrap();
        let mut s = VelocitySnapshot::zeros(g, 0.0);
        for (v, z) in s.v.iter_mut().zip(g.centers()) {
            *v = C64::i() * z;
        }
        let q = solve_q(&s, MTheta::new(0.0), QBoundary::Monopole).unwrap();
        assert!(q.q.iter().all(|v| v.abs() < 1e-12));
    }
}
