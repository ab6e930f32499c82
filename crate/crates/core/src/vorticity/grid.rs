use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::complexfield::{FieldStats, GridSources};
use crate::{Error, Result, C64};

/// Geometry of a uniform cell-centered grid. Cell `(i, j)` has center
/// `origin + h(i + ½, j + ½)`; storage is row-major, `j·nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub origin: C64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridGeometry {
    pub fn new(origin: C64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = GridGeometry { origin, h, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Square grid covering `[-half_width, half_width]²` with spacing
    /// close to `h` (rounded so an integer number of cells fits).
    pub fn centered(half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0 && half_width.is_finite() && h.is_finite()) {
            return Err(Error::input("grid half-width and spacing must be > 0"));
        }
        let n = ((2.0 * half_width / h).round() as usize).max(3);
        let h = 2.0 * half_width / n as f64;
        Self::new(C64::new(-half_width, -half_width), h, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::input(format!("grid spacing must be > 0, got {}", self.h)));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::input("grid must have at least one cell per axis"));
        }
        if !(self.origin.re.is_finite() && self.origin.im.is_finite()) {
            return Err(Error::input("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> C64 {
        self.origin + C64::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// All cell centers in storage order.
    pub fn centers(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.center(i, j));
            }
        }
        out
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Lower-left and upper-right corners of the domain.
    pub fn bounds(&self) -> (C64, C64) {
        (
            self.origin,
            self.origin + C64::new(self.nx as f64 * self.h, self.ny as f64 * self.h),
        )
    }

    /// True if the axis-aligned box `[lo, hi]` stays one cell away from the
    /// domain edge.
    pub fn contains_with_margin(&self, lo: C64, hi: C64) -> bool {
        let (a, b) = self.bounds();
        lo.re >= a.re + self.h && lo.im >= a.im + self.h && hi.re <= b.re - self.h && hi.im <= b.im - self.h
    }

    pub fn same_as(&self, other: &GridGeometry) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.h == other.h && self.origin == other.origin
    }
}

/// Samples of a real scalar on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VorticityGrid {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl VorticityGrid {
    pub fn zeros(geometry: GridGeometry) -> Self {
        VorticityGrid {
            geometry,
            values: vec![0.0; geometry.len()],
        }
    }

    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.len() {
            return Err(Error::input(format!(
                "expected {} grid values, got {}",
                geometry.len(),
                values.len()
            )));
        }
        let g = VorticityGrid { geometry, values };
        g.validate()?;
        Ok(g)
    }

    /// Values finite and support at least one cell away from the edge.
    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid values must be finite"));
        }
        let GridGeometry { nx, ny, .. } = self.geometry;
        for j in 0..ny {
            for i in 0..nx {
                if self.values[j * nx + i] != 0.0 && (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) {
                    return Err(Error::input("support touches the grid boundary"));
                }
            }
        }
        Ok(())
    }

    pub fn sources(&self) -> GridSources<'_> {
        GridSources {
            corner: self.geometry.origin,
            h: self.geometry.h,
            nx: self.geometry.nx,
            ny: self.geometry.ny,
            values: &self.values,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.geometry.index(i, j)]
    }

    /// Value of the cell containing `z`, or 0 outside the grid.
    pub fn value_at(&self, z: C64) -> f64 {
        let g = &self.geometry;
        let x = (z.re - g.origin.re) / g.h;
        let y = (z.im - g.origin.im) / g.h;
        if x < 0.0 || y < 0.0 {
            return 0.0;
        }
        let (i, j) = (x as usize, y as usize);
        if i >= g.nx || j >= g.ny {
            return 0.0;
        }
        self.get(i, j)
    }

    /// Cellwise sum, on identical geometries.
    pub fn add(&mut self, other: &VorticityGrid) -> Result<()> {
        if !self.geometry.same_as(&other.geometry) {
            return Err(Error::input("grids differ in geometry"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// `‖self - other‖₁` on identical geometries.
    pub fn l1_distance(&self, other: &VorticityGrid) -> Result<f64> {
        if !self.geometry.same_as(&other.geometry) {
            return Err(Error::input("grids differ in geometry"));
        }
        let s: crate::complexfield::CompensatedSum =
            self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect();
        Ok(s.value() * self.geometry.cell_area())
    }

    /// Norms and support of the grid; the support is the union of nonzero
    /// cells, its center the mean of their centers.
    pub fn stats(&self) -> FieldStats {
        let g = &self.geometry;
        let mut l1 = crate::complexfield::CompensatedSum::new();
        let mut linf: f64 = 0.0;
        let mut count = 0usize;
        let mut cx = crate::complexfield::CompensatedSum::new();
        let mut cy = crate::complexfield::CompensatedSum::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = self.get(i, j);
                if v != 0.0 {
                    l1.add(v.abs());
                    linf = linf.max(v.abs());
                    count += 1;
                    let c = g.center(i, j);
                    cx.add(c.re);
                    cy.add(c.im);
                }
            }
        }
        if count == 0 {
            return FieldStats::default();
        }
        let center = C64::new(cx.value(), cy.value()) / count as f64;
        let mut r: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if self.get(i, j) != 0.0 {
                    r = r.max((g.center(i, j) - center).norm());
                }
            }
        }
        FieldStats {
            l1: l1.value() * g.cell_area(),
            linf,
            support_area: count as f64 * g.cell_area(),
            support_radius: r + g.h * std::f64::consts::FRAC_1_SQRT_2,
            support_center: center,
        }
    }

    /// Write as CSV: a geometry header row, then one value per line in
    /// storage order.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        super::io::write_grid_csv(path, &self.geometry, &["value"], |k| vec![self.values[k]])
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let (geometry, cols) = super::io::read_grid_csv(path, 1)?;
        Self::from_values(geometry, cols.into_iter().map(|r| r[0]).collect())
    }
}
