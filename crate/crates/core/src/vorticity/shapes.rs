use serde::{Deserialize, Serialize};

use super::grid::{GridGeometry, VorticityGrid};
use crate::{Error, Result, C64};

/// Region whose indicator defines initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Axis-aligned ellipse with semiaxes `a` (along x) and `b` (along y).
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    /// Union of axis-aligned rectangles `[x0, x1] × [y0, y1]`.
    Rectangles {
        rects: Vec<[f64; 4]>,
    },
}

impl Shape {
    pub fn disk(center: C64, radius: f64) -> Self {
        Shape::Disk {
            center: [center.re, center.im],
            radius,
        }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Shape::Ellipse {
            center: [0.0, 0.0],
            a,
            b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Disk { center, radius } => {
                *radius > 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite())
            }
            Shape::Ellipse { center, a, b } => {
                *a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite() && center.iter().all(|c| c.is_finite())
            }
            Shape::Rectangles { rects } => {
                !rects.is_empty()
                    && rects
                        .iter()
                        .all(|r| r.iter().all(|v| v.is_finite()) && r[1] > r[0] && r[3] > r[2])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("invalid shape {self:?}")))
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match self {
            Shape::Disk { center, radius } => (z - C64::new(center[0], center[1])).norm_sqr() < radius * radius,
            Shape::Ellipse { center, a, b } => {
                let (x, y) = ((z.re - center[0]) / a, (z.im - center[1]) / b);
                x * x + y * y < 1.0
            }
            Shape::Rectangles { rects } => rects
                .iter()
                .any(|r| z.re >= r[0] && z.re < r[1] && z.im >= r[2] && z.im < r[3]),
        }
    }

    /// Axis-aligned bounding box `(lower-left, upper-right)`.
    pub fn bounding_box(&self) -> (C64, C64) {
        match self {
            Shape::Disk { center, radius } => (
                C64::new(center[0] - radius, center[1] - radius),
                C64::new(center[0] + radius, center[1] + radius),
            ),
            Shape::Ellipse { center, a, b } => (
                C64::new(center[0] - a, center[1] - b),
                C64::new(center[0] + a, center[1] + b),
            ),
            Shape::Rectangles { rects } => rects.iter().fold(
                (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
                |(lo, hi), r| {
                    (
                        C64::new(lo.re.min(r[0]), lo.im.min(r[2])),
                        C64::new(hi.re.max(r[1]), hi.im.max(r[3])),
                    )
                },
            ),
        }
    }

    /// Distance from `z` to the boundary for `z` inside, negative outside;
    /// exact for disks and rectangles, a first-order estimate for ellipses.
    pub fn signed_depth(&self, z: C64) -> f64 {
        match self {
            Shape::Disk { center, radius } => radius - (z - C64::new(center[0], center[1])).norm(),
            Shape::Ellipse { center, a, b } => {
                let (x, y) = (z.re - center[0], z.im - center[1]);
                let f = (x / a).powi(2) + (y / b).powi(2) - 1.0;
                let g = 2.0 * ((x / (a * a)).powi(2) + (y / (b * b)).powi(2)).sqrt();
                if g == 0.0 {
                    a.min(*b)
                } else {
                    -f / g
                }
            }
            Shape::Rectangles { rects } => {
                let depth = |r: &[f64; 4]| {
                    let dx = (z.re - r[0]).min(r[1] - z.re);
                    let dy = (z.im - r[2]).min(r[3] - z.im);
                    if dx >= 0.0 && dy >= 0.0 {
                        dx.min(dy)
                    } else {
                        let ox = dx.min(0.0);
                        let oy = dy.min(0.0);
                        -(ox * ox + oy * oy).sqrt()
                    }
                };
                rects.iter().map(depth).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

/// Indicator of `shape` times `amplitude`: a cell takes the amplitude iff
/// its center lies inside the shape.
pub fn make_indicator(shape: &Shape, amplitude: f64, geometry: GridGeometry) -> Result<VorticityGrid> {
    make_indicator_sampled(shape, amplitude, geometry, 1)
}

/// Like [`make_indicator`], but each cell takes `amplitude` times the
/// fraction of its `sub × sub` midpoint subsamples inside the shape.
pub fn make_indicator_sampled(
    shape: &Shape,
    amplitude: f64,
    geometry: GridGeometry,
    sub: usize,
) -> Result<VorticityGrid> {
    geometry.validate()?;
    shape.validate()?;
    if !amplitude.is_finite() {
        return Err(Error::input("amplitude must be finite"));
    }
    if sub == 0 {
        return Err(Error::input("subsample count must be >= 1"));
    }
    let (lo, hi) = shape.bounding_box();
    if !geometry.contains_with_margin(lo, hi) {
        return Err(Error::input(format!(
            "shape {shape:?} does not fit inside the grid with a one-cell margin"
        )));
    }
    let mut grid = VorticityGrid::zeros(geometry);
    if amplitude == 0.0 {
        return Ok(grid);
    }
    let h = geometry.h;
    let hs = h / sub as f64;
    for j in 0..geometry.ny {
        for i in 0..geometry.nx {
            let c = geometry.center(i, j);
            let hits = if sub == 1 {
                shape.contains(c) as usize
            } else {
                let base = c - C64::new(h / 2.0, h / 2.0);
                let mut n = 0;
                for b in 0..sub {
                    for a in 0..sub {
                        let p = base + C64::new((a as f64 + 0.5) * hs, (b as f64 + 0.5) * hs);
                        n += shape.contains(p) as usize;
                    }
                }
                n
            };
            if hits > 0 {
                grid.values[geometry.index(i, j)] = amplitude * hits as f64 / (sub * sub) as f64;
            }
        }
    }
    Ok(grid)
}

/// `amplitude · exp(-|z - center|² / width²)`, truncated to zero where
/// below `cutoff · |amplitude|` so the support is compact.
pub fn make_gaussian(
    center: C64,
    amplitude: f64,
    width: f64,
    cutoff: f64,
    geometry: GridGeometry,
) -> Result<VorticityGrid> {
    geometry.validate()?;
    if !(width > 0.0 && width.is_finite() && amplitude.is_finite()) {
        return Err(Error::input("gaussian width must be > 0 and amplitude finite"));
    }
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::input("gaussian cutoff must lie in (0, 1)"));
    }
    let reach = width * (-cutoff.ln()).sqrt();
    let lo = center - C64::new(reach, reach);
    let hi = center + C64::new(reach, reach);
    if !geometry.contains_with_margin(lo, hi) {
        return Err(Error::input("gaussian support does not fit inside the grid"));
    }
    let mut grid = VorticityGrid::zeros(geometry);
    for j in 0..geometry.ny {
        for i in 0..geometry.nx {
            let e = (-(geometry.center(i, j) - center).norm_sqr() / (width * width)).exp();
            if e >= cutoff {
                grid.values[geometry.index(i, j)] = amplitude * e;
            }
        }
    }
    Ok(grid)
}
