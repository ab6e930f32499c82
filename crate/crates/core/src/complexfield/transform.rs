use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cells::{cell_beurling_integral, cell_cauchy_integral};
use super::kernel::{BlobKernel, KernelSpec};
use super::sum::{CompensatedSum, ComplexSum};
use crate::{Error, Result, C64};

/// A complex value sampled at a point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSample {
    pub z: C64,
    pub value: C64,
}

/// Point masses `Γ_j` at `positions[j]`, each spread by a blob kernel.
#[derive(Debug, Clone, Copy)]
pub struct BlobSources<'a> {
    pub positions: &'a [C64],
    pub masses: &'a [f64],
    pub kernel: BlobKernel,
}

/// Piecewise-constant values on a uniform grid. Cell `(i, j)` is the square
/// of side `h` centered at `corner + h(i + ½, j + ½)`, stored at `j·nx + i`.
#[derive(Debug, Clone, Copy)]
pub struct GridSources<'a> {
    pub corner: C64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: &'a [f64],
}

/// Source description for the transforms in this module.
#[derive(Debug, Clone, Copy)]
pub enum Field<'a> {
    Blobs(BlobSources<'a>),
    Grid(GridSources<'a>),
}

/// Alias kept for call sites that only ever pass blob sets.
pub type SourceSet<'a> = BlobSources<'a>;

/// Cells within this many spacings (per axis) of a target use exact integrals.
const NEAR_CELLS: f64 = 2.5;

impl<'a> GridSources<'a> {
    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::input(format!("grid spacing must be > 0, got {}", self.h)));
        }
        if self.values.len() != self.nx * self.ny {
            return Err(Error::input(format!(
                "grid has {} values, expected {}",
                self.values.len(),
                self.nx * self.ny
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid values must be finite"));
        }
        Ok(())
    }

    #[inline]
    fn center(&self, i: usize, j: usize) -> C64 {
        self.corner + C64::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// Exact-in-the-near-zone, midpoint-elsewhere sum of `ω·k(z - w)`.
    fn sum_at(&self, z: C64, exact: fn(f64, f64, f64, f64) -> C64, point: fn(C64) -> C64) -> C64 {
        let h = self.h;
        let h2 = h * h;
        let near = NEAR_CELLS * h;
        let z = self.off_edges(z);
        let mut acc = ComplexSum::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let w = self.values[j * self.nx + i];
                if w == 0.0 {
                    continue;
                }
                let d = z - self.center(i, j);
                let k = if d.re.abs() < near && d.im.abs() < near {
                    exact(d.re - h / 2.0, d.re + h / 2.0, d.im - h / 2.0, d.im + h / 2.0)
                } else {
                    h2 * point(d)
                };
                acc.add(w * k);
            }
        }
        acc.value()
    }

    /// Move `z` off cell edges by a tiny fixed offset. The corner primitive
    /// of `1/u²` has a `log` term along each edge line that cancels between
    /// neighboring cells only when evaluated off the line; where ω is
    /// continuous across the edge the shift changes the result by O(η log η).
    fn off_edges(&self, z: C64) -> C64 {
        const ETA: f64 = 1e-9;
        let nudge = |x: f64, o: f64| {
            let t = (x - o) / self.h;
            if (t - t.round()).abs() < ETA {
                o + (t.round() + ETA) * self.h
            } else {
                x
            }
        };
        C64::new(nudge(z.re, self.corner.re), nudge(z.im, self.corner.im))
    }
}

impl<'a> BlobSources<'a> {
    fn validate(&self) -> Result<()> {
        if self.positions.len() != self.masses.len() {
            return Err(Error::input("blob positions and masses differ in length"));
        }
        BlobKernel::new(self.kernel.shape, self.kernel.radius)?;
        let finite = self.positions.iter().all(|p| p.re.is_finite() && p.im.is_finite())
            && self.masses.iter().all(|m| m.is_finite());
        if !finite {
            return Err(Error::input("blob data must be finite"));
        }
        Ok(())
    }
}

impl<'a> Field<'a> {
    fn validate(&self) -> Result<()> {
        match self {
            Field::Blobs(b) => b.validate(),
            Field::Grid(g) => g.validate(),
        }
    }

    /// `∫ ω(w) / (z - w) dA(w)`, regularized for blobs.
    fn cauchy_raw(&self, z: C64) -> C64 {
        match self {
            Field::Blobs(b) => {
                let mut acc = ComplexSum::new();
                for (p, m) in b.positions.iter().zip(b.masses) {
                    acc.add(*m * b.kernel.cauchy(z - p));
                }
                acc.value()
            }
            Field::Grid(g) => g.sum_at(z, cell_cauchy_integral, |d| 1.0 / d),
        }
    }

    /// `Sω(z) = -(1/π) p.v. ∫ ω(w) / (z - w)² dA(w)`.
    fn beurling_at(&self, z: C64) -> C64 {
        match self {
            Field::Blobs(b) => {
                let mut acc = ComplexSum::new();
                for (p, m) in b.positions.iter().zip(b.masses) {
                    acc.add(*m * b.kernel.beurling(z - p));
                }
                acc.value() / PI
            }
            Field::Grid(g) => -g.sum_at(z, cell_beurling_integral, |d| 1.0 / (d * d)) / PI,
        }
    }
}

fn check_targets(targets: &[C64]) -> Result<()> {
    if targets.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::input("targets must be finite"));
    }
    Ok(())
}

/// Velocity `K∗ω` at every target.
///
/// Blob sources use the regularized kernel of their [`BlobKernel`]; grid
/// sources use the midpoint rule per cell, except within 2.5 cells of the
/// target where the exact cell integral is used. Each target's sum runs over
/// sources in storage order with compensated accumulation.
pub fn velocity_direct(
    field: &Field<'_>,
    targets: &[C64],
    spec: KernelSpec,
) -> Result<Vec<ComplexSample>> {
    spec.validate()?;
    field.validate()?;
    check_targets(targets)?;
    Ok(targets
        .par_iter()
        .map(|&z| ComplexSample {
            z,
            value: spec.finish_velocity(field.cauchy_raw(z)),
        })
        .collect())
}

/// Beurling transform `Sω` at every target. The singular cell of a grid
/// contributes its exact principal value.
pub fn beurling_direct(field: &Field<'_>, targets: &[C64]) -> Result<Vec<ComplexSample>> {
    field.validate()?;
    check_targets(targets)?;
    Ok(targets
        .par_iter()
        .map(|&z| ComplexSample {
            z,
            value: field.beurling_at(z),
        })
        .collect())
}

/// `div v = Re(e^{iθ} Sω)`; identically zero for the Euler kernel.
pub fn divergence_of_velocity(
    field: &Field<'_>,
    targets: &[C64],
    spec: KernelSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    field.validate()?;
    check_targets(targets)?;
    if spec.is_euler() {
        return Ok(vec![0.0; targets.len()]);
    }
    let phase = spec.phase();
    Ok(targets
        .par_iter()
        .map(|&z| (phase * field.beurling_at(z)).re)
        .collect())
}

/// Velocity and divergence of a blob field at the blob positions
/// themselves, sharing one pass over the sources.
pub fn blob_velocity_and_divergence(
    sources: &BlobSources<'_>,
    targets: &[C64],
    spec: KernelSpec,
) -> Result<Vec<(C64, f64)>> {
    spec.validate()?;
    sources.validate()?;
    check_targets(targets)?;
    let phase = spec.phase();
    let euler = spec.is_euler();
    Ok(targets
        .par_iter()
        .map(|&z| {
            let mut cv = ComplexSum::new();
            let mut cb = ComplexSum::new();
            for (p, m) in sources.positions.iter().zip(sources.masses) {
                let w = z - p;
                cv.add(*m * sources.kernel.cauchy(w));
                if !euler {
                    cb.add(*m * sources.kernel.beurling(w));
                }
            }
            let div = if euler {
                0.0
            } else {
                (phase * cb.value() / PI).re
            };
            (spec.finish_velocity(cv.value()), div)
        })
        .collect())
}

/// Reconstructed density `Σ Γ_j g_δ(z - z_j)` at every target.
pub fn blob_density(sources: &BlobSources<'_>, targets: &[C64]) -> Result<Vec<f64>> {
    sources.validate()?;
    check_targets(targets)?;
    Ok(targets
        .par_iter()
        .map(|&z| {
            let mut acc = CompensatedSum::new();
            for (p, m) in sources.positions.iter().zip(sources.masses) {
                acc.add(*m * sources.kernel.density(z - p));
            }
            acc.value()
        })
        .collect())
}
