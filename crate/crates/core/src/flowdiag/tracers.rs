use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::vorticity::VorticityGrid;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    InsideSupport,
    NearSupport,
    FarField,
}

/// Indices of a lattice node and its four axis neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stencil {
    pub center: usize,
    pub east: usize,
    pub west: usize,
    pub north: usize,
    pub south: usize,
}

/// Where to place tracers. All nodes lie on the lattice `s·(i + ij)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracerSpec {
    /// Lattice spacing `s`; also the finite-difference step.
    pub spacing: f64,
    /// Stencil centers are every `stride`-th lattice node in each axis.
    pub stride: usize,
    /// Stencil centers cover the square of this half-width around the
    /// support center.
    pub half_width: f64,
    /// Far-field rings, as multiples of the support radius.
    pub far_radii: Vec<f64>,
    pub far_angles: usize,
    /// Depth into the support beyond which a node is tagged inside.
    pub inside_depth: f64,
}

impl Default for TracerSpec {
    fn default() -> Self {
        TracerSpec {
            spacing: 0.02,
            stride: 10,
            half_width: 2.0,
            far_radii: vec![4.0, 5.66, 8.0, 11.3, 16.0],
            far_angles: 8,
            inside_depth: 0.25,
        }
    }
}

impl TracerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::input("tracer spacing must be > 0"));
        }
        if self.stride == 0 || !(self.half_width > 0.0) {
            return Err(Error::input("tracer stride and half-width must be positive"));
        }
        if self.far_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::input("far-field radii must be positive"));
        }
        Ok(())
    }
}

/// Signed distance to the support of a grid field (union of nonzero cells):
/// positive inside, negative outside.
#[derive(Debug, Clone)]
pub struct SupportGeometry {
    h: f64,
    /// Centers of nonzero cells bordering a zero cell.
    inner_edge: Vec<C64>,
    /// Centers of zero cells bordering a nonzero cell.
    outer_edge: Vec<C64>,
    grid: VorticityGrid,
    pub center: C64,
    pub radius: f64,
}

impl SupportGeometry {
    pub fn from_grid(grid: &VorticityGrid) -> Self {
        let g = grid.geometry;
        let nz = |i: isize, j: isize| -> bool {
            if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
                false
            } else {
                grid.get(i as usize, j as usize) != 0.0
            }
        };
        let (mut inner, mut outer) = (Vec::new(), Vec::new());
        for j in 0..g.ny as isize {
            for i in 0..g.nx as isize {
                let here = nz(i, j);
                let mixed = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|(a, b)| nz(i + a, j + b) != here);
                if mixed {
                    let c = g.center(i as usize, j as usize);
                    if here {
                        inner.push(c);
                    } else {
                        outer.push(c);
                    }
                }
            }
        }
        let s = grid.stats();
        SupportGeometry {
            h: g.h,
            inner_edge: inner,
            outer_edge: outer,
            grid: grid.clone(),
            center: s.support_center,
            radius: s.support_radius,
        }
    }

    fn box_distance(&self, z: C64, c: C64) -> f64 {
        let dx = ((z.re - c.re).abs() - self.h / 2.0).max(0.0);
        let dy = ((z.im - c.im).abs() - self.h / 2.0).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn signed_depth(&self, z: C64) -> f64 {
        if self.grid.value_at(z) != 0.0 {
            self.outer_edge
                .iter()
                .map(|c| self.box_distance(z, *c))
                .fold(f64::INFINITY, f64::min)
        } else {
            -self
                .inner_edge
                .iter()
                .map(|c| self.box_distance(z, *c))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Passive markers on a sparse lattice: stencil centers every `stride`
/// nodes, each with its four neighbors, plus far-field rings snapped to the
/// lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TracerGrid {
    pub spacing: f64,
    /// Lattice spacing between neighboring stencil centers.
    pub sample_spacing: f64,
    pub initial: Vec<C64>,
    pub current: Vec<C64>,
    pub lattice: Vec<(i64, i64)>,
    pub tags: Vec<RegionTag>,
    /// Signed initial depth into the support for every tracer.
    pub depth: Vec<f64>,
    pub stencils: Vec<Stencil>,
    pub far: Vec<usize>,
}

impl TracerGrid {
    pub fn build(spec: &TracerSpec, support: &SupportGeometry) -> Result<Self> {
        spec.validate()?;
        let s = spec.spacing;
        let st = spec.stride as i64;
        let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        let mut lattice = Vec::new();
        let mut add = |ij: (i64, i64), lattice: &mut Vec<(i64, i64)>| -> usize {
            *index.entry(ij).or_insert_with(|| {
                lattice.push(ij);
                lattice.len() - 1
            })
        };

        let c = support.center;
        let (ci, cj) = ((c.re / s).round() as i64, (c.im / s).round() as i64);
        let m = (spec.half_width / (s * st as f64)).floor() as i64;
        let mut stencils = Vec::new();
        for b in -m..=m {
            for a in -m..=m {
                let (i, j) = (ci + a * st, cj + b * st);
                stencils.push(Stencil {
                    center: add((i, j), &mut lattice),
                    east: add((i + 1, j), &mut lattice),
                    west: add((i - 1, j), &mut lattice),
                    north: add((i, j + 1), &mut lattice),
                    south: add((i, j - 1), &mut lattice),
                });
            }
        }
        let mut far = Vec::new();
        for r in &spec.far_radii {
            for k in 0..spec.far_angles {
                let z = c + C64::from_polar(r * support.radius.max(s), 2.0 * PI * k as f64 / spec.far_angles as f64);
                let ij = ((z.re / s).round() as i64, (z.im / s).round() as i64);
                let idx = add(ij, &mut lattice);
                if !far.contains(&idx) {
                    far.push(idx);
                }
            }
        }

        let initial: Vec<C64> = lattice.iter().map(|(i, j)| C64::new(*i as f64 * s, *j as f64 * s)).collect();
        let depth: Vec<f64> = initial.iter().map(|z| support.signed_depth(*z)).collect();
        let mut tags: Vec<RegionTag> = depth
            .iter()
            .map(|d| {
                if *d >= spec.inside_depth {
                    RegionTag::InsideSupport
                } else {
                    RegionTag::NearSupport
                }
            })
            .collect();
        for &k in &far {
            tags[k] = RegionTag::FarField;
        }
        Ok(TracerGrid {
            spacing: s,
            sample_spacing: s * st as f64,
            current: initial.clone(),
            initial,
            lattice,
            tags,
            depth,
            stencils,
            far,
        })
    }

    /// Tracers on a full `n × n` lattice block with spacing `s` centered at
    /// the origin, every interior node a stencil center. Used for exact
    /// maps in tests.
    pub fn block(n: usize, s: f64) -> Self {
        let h = n as i64 / 2;
        let mut lattice = Vec::new();
        for j in -h..=h {
            for i in -h..=h {
                lattice.push((i, j));
            }
        }
        let w = 2 * h + 1;
        let at = |i: i64, j: i64| ((j + h) * w + (i + h)) as usize;
        let mut stencils = Vec::new();
        for j in -h + 1..h {
            for i in -h + 1..h {
                stencils.push(Stencil {
                    center: at(i, j),
                    east: at(i + 1, j),
                    west: at(i - 1, j),
                    north: at(i, j + 1),
                    south: at(i, j - 1),
                });
            }
        }
        let initial: Vec<C64> = lattice.iter().map(|(i, j)| C64::new(*i as f64 * s, *j as f64 * s)).collect();
        let n = initial.len();
        TracerGrid {
            spacing: s,
            sample_spacing: s,
            current: initial.clone(),
            initial,
            lattice,
            tags: vec![RegionTag::NearSupport; n],
            depth: vec![0.0; n],
            stencils,
            far: Vec::new(),
        }
    }

    /// Replace current positions by `f(initial)`.
    pub fn apply_map(&mut self, f: impl Fn(C64) -> C64) {
        for (c, z) in self.current.iter_mut().zip(&self.initial) {
            *c = f(*z);
        }
    }

    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }
}
