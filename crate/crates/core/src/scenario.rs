//! Scenario files: a TOML document describing initial data, kernel,
//! numerics, diagnostics and outputs. Unknown keys are errors, and every
//! error carries the line it refers to when one can be identified.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::complexfield::{BlobShape, KernelKind, KernelSpec};
use crate::dynamics::{step_count, DivergenceMode, RunOptions, Scheme, StepConfig};
use crate::flowdiag::{FlowDiagConfig, TracerSpec};
use crate::velform::QBoundary;
use crate::vorticity::{
    make_gaussian, make_indicator_sampled, mollify, GridGeometry, MollifierSpec, Shape, VorticityGrid,
};
use crate::{Error, Result, C64};

/// One additive component of the initial vorticity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Piece {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Rectangles {
        rects: Vec<[f64; 4]>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · exp(-|z - c|² / width²)`, truncated below `cutoff`.
    Gaussian {
        #[serde(default)]
        center: [f64; 2],
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "gaussian_cutoff")]
        cutoff: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn gaussian_cutoff() -> f64 {
    1e-6
}

impl Piece {
    fn shape(&self) -> Option<Shape> {
        match self {
            Piece::Disk { center, radius, .. } => Some(Shape::Disk { center: *center, radius: *radius }),
            Piece::Ellipse { center, a, b, .. } => Some(Shape::Ellipse { center: *center, a: *a, b: *b }),
            Piece::Rectangles { rects, .. } => Some(Shape::Rectangles { rects: rects.clone() }),
            Piece::Gaussian { .. } => None,
        }
    }

    fn amplitude(&self) -> f64 {
        match self {
            Piece::Disk { amplitude, .. }
            | Piece::Ellipse { amplitude, .. }
            | Piece::Rectangles { amplitude, .. }
            | Piece::Gaussian { amplitude, .. } => *amplitude,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude().is_finite() && self.amplitude() != 0.0) {
            return Err(Error::input("piece amplitude must be finite and nonzero"));
        }
        match self {
            Piece::Gaussian { center, width, cutoff, .. } => {
                if !(*width > 0.0 && width.is_finite() && center.iter().all(|c| c.is_finite())) {
                    return Err(Error::input("gaussian width must be > 0"));
                }
                if !(*cutoff > 0.0 && *cutoff < 1.0) {
                    return Err(Error::input("gaussian cutoff must lie in (0, 1)"));
                }
                Ok(())
            }
            _ => self.shape().expect("indicator piece").validate(),
        }
    }

    /// Axis-aligned box containing the support.
    fn bounding_box(&self) -> (C64, C64) {
        match self {
            Piece::Gaussian { center, width, cutoff, .. } => {
                let reach = width * (-cutoff.ln()).sqrt();
                let c = C64::new(center[0], center[1]);
                (c - C64::new(reach, reach), c + C64::new(reach, reach))
            }
            _ => self.shape().expect("indicator piece").bounding_box(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub pieces: Vec<Piece>,
    /// Mollifier radius ε; absent means no smoothing.
    #[serde(default)]
    pub mollifier_epsilon: Option<f64>,
    /// Sub-samples per cell axis for indicator coverage.
    #[serde(default = "default_sampling")]
    pub sampling: usize,
}

fn default_sampling() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_kind")]
    pub kind: KernelKind,
    #[serde(default)]
    pub theta: f64,
}

fn default_kind() -> KernelKind {
    KernelKind::Cauchy
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { kind: KernelKind::Cauchy, theta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub h: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Blob core radius δ; defaults to `1.5 h`.
    #[serde(default)]
    pub blob_radius: Option<f64>,
    #[serde(default = "default_blob_shape")]
    pub blob_shape: BlobShape,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub divergence: DivergenceMode,
    /// Half-width of the velocity sampling window around the support
    /// center; defaults to 4 support radii and may not be smaller.
    #[serde(default)]
    pub extent: Option<f64>,
    /// Observers run every this many steps.
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
    /// Convergence studies abort when the finest level would need more.
    #[serde(default = "default_memory")]
    pub memory_limit_mb: u64,
}

fn default_blob_shape() -> BlobShape {
    BlobShape::Gaussian
}

fn default_sample_every() -> u64 {
    1
}

fn default_blowup() -> f64 {
    10.0
}

fn default_memory() -> u64 {
    2048
}

/// Tracer placement; the fields other than `enabled` mirror
/// [`TracerSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TracerSection {
    pub enabled: bool,
    pub spacing: f64,
    pub stride: usize,
    pub half_width: f64,
    pub far_radii: Vec<f64>,
    pub far_angles: usize,
    pub inside_depth: f64,
}

impl Default for TracerSection {
    fn default() -> Self {
        let s = TracerSpec::default();
        TracerSection {
            enabled: true,
            spacing: s.spacing,
            stride: s.stride,
            half_width: s.half_width,
            far_radii: s.far_radii,
            far_angles: s.far_angles,
            inside_depth: s.inside_depth,
        }
    }
}

impl TracerSection {
    pub fn spec(&self) -> TracerSpec {
        TracerSpec {
            spacing: self.spacing,
            stride: self.stride,
            half_width: self.half_width,
            far_radii: self.far_radii.clone(),
            far_angles: self.far_angles,
            inside_depth: self.inside_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Norm and velocity bound checks.
    pub norms: bool,
    /// Tracer-based flow-map checks.
    pub flow: bool,
    /// One extra short step at `initial_tau` for the initial-derivative
    /// check; defaults to `dt / 10`.
    pub initial_derivative: bool,
    pub initial_tau: Option<f64>,
    /// Relative slack for the norm and velocity bounds.
    pub bound_rel: f64,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    pub flowdiag: FlowDiagConfig,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            norms: true,
            flow: true,
            initial_derivative: true,
            initial_tau: None,
            bound_rel: 0.05,
            tol_scale: 1.0,
            flowdiag: FlowDiagConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelformSection {
    /// Snapshot time; defaults to `t_end`.
    pub t: Option<f64>,
    /// Number of simultaneous `(h, dt)` halvings, counting the base level.
    pub levels: usize,
    /// Half-width of the residual window; defaults to the support radius.
    pub window: Option<f64>,
    pub boundary: QBoundary,
    pub curl_tol: f64,
    /// Minimum ratio between successive `r₁` L² norms.
    pub min_ratio: f64,
}

impl Default for VelformSection {
    fn default() -> Self {
        VelformSection {
            t: None,
            levels: 3,
            window: None,
            boundary: QBoundary::default(),
            curl_tol: 1e-2,
            min_ratio: 1.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write `blobs_t*.csv` every this many steps; 0 writes only the
    /// initial and final states.
    pub checkpoint_every: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), checkpoint_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub initial: InitialSection,
    #[serde(default)]
    pub kernel: KernelSection,
    pub numerics: NumericsSection,
    #[serde(default)]
    pub tracers: TracerSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub velform: VelformSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// 1-based line of the byte offset `pos`.
fn line_at(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// 1-based line of `key = ...` inside the table `[section]` (or one of its
/// array-of-tables entries).
pub fn find_key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(rest) = line.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(n + 1);
            }
        }
    }
    None
}

impl ScenarioConfig {
    /// Parse and validate a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_at(text, s.start));
            Error::config(line, e.message().to_string())
        })?;
        cfg.validate_in(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: Some(path.to_path_buf()),
            line: None,
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config { line, message, .. } => Error::Config {
                path: Some(path.to_path_buf()),
                line,
                message,
            },
            other => other,
        })
    }

    /// Serialize back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_in(&self.to_toml())
    }

    fn validate_in(&self, text: &str) -> Result<()> {
        let fail = |section: &str, key: &str, msg: String| -> Error {
            Error::config(find_key_line(text, section, key), msg)
        };
        let n = &self.numerics;
        if !(n.h > 0.0 && n.h.is_finite()) {
            return Err(fail("numerics", "h", format!("h must be > 0, got {}", n.h)));
        }
        if !(n.dt > 0.0 && n.dt.is_finite()) {
            return Err(fail("numerics", "dt", format!("dt must be > 0, got {}", n.dt)));
        }
        if let Err(e) = step_count(n.t_end, n.dt) {
            return Err(fail("numerics", "t_end", strip_input(e)));
        }
        if let Some(d) = n.blob_radius {
            if !(d > 0.0 && d.is_finite()) {
                return Err(fail("numerics", "blob_radius", format!("blob_radius must be > 0, got {d}")));
            }
        }
        if n.sample_every == 0 {
            return Err(fail("numerics", "sample_every", "sample_every must be >= 1".into()));
        }
        if !(n.blowup_factor > 0.0 && n.blowup_factor.is_finite()) {
            return Err(fail("numerics", "blowup_factor", "blowup_factor must be > 0".into()));
        }
        if !self.kernel.theta.is_finite() {
            return Err(fail("kernel", "theta", "theta must be finite".into()));
        }
        if self.initial.pieces.is_empty() {
            return Err(Error::config(
                find_key_line(text, "initial", "pieces").or_else(|| section_line(text, "initial")),
                "initial data needs at least one piece",
            ));
        }
        for (k, p) in self.initial.pieces.iter().enumerate() {
            p.validate().map_err(|e| {
                Error::config(piece_line(text, k), format!("piece {}: {}", k + 1, strip_input(e)))
            })?;
        }
        if let Some(eps) = self.initial.mollifier_epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(fail("initial", "mollifier_epsilon", format!("mollifier_epsilon must be > 0, got {eps}")));
            }
        }
        if self.initial.sampling == 0 {
            return Err(fail("initial", "sampling", "sampling must be >= 1".into()));
        }
        if self.tracers.enabled {
            self.tracers
                .spec()
                .validate()
                .map_err(|e| Error::config(section_line(text, "tracers"), strip_input(e)))?;
        }
        let d = &self.diagnostics;
        if !(d.tol_scale > 0.0 && d.tol_scale.is_finite()) {
            return Err(fail("diagnostics", "tol_scale", "tol_scale must be > 0".into()));
        }
        if !(d.bound_rel >= 0.0) {
            return Err(fail("diagnostics", "bound_rel", "bound_rel must be >= 0".into()));
        }
        if let Some(tau) = d.initial_tau {
            if !(tau > 0.0 && tau <= n.dt) {
                return Err(fail("diagnostics", "initial_tau", "initial_tau must lie in (0, dt]".into()));
            }
        }
        let v = &self.velform;
        if v.levels == 0 {
            return Err(fail("velform", "levels", "levels must be >= 1".into()));
        }
        if let Some(t) = v.t {
            if step_count(t, n.dt).is_err() || t < n.dt {
                return Err(fail("velform", "t", "velform t must be a positive multiple of dt".into()));
            }
        }
        if let Some(w) = v.window {
            if !(w > 0.0) {
                return Err(fail("velform", "window", "window must be > 0".into()));
            }
        }
        // the extent rule needs the support radius of the discretized data
        let grid = self.initial_grid().map_err(|e| Error::config(section_line(text, "initial"), strip_input(e)))?;
        let stats = grid.stats();
        if stats.linf == 0.0 {
            return Err(Error::config(section_line(text, "initial"), "initial data vanishes on the grid"));
        }
        if let Some(ext) = n.extent {
            if !(ext >= 4.0 * stats.support_radius) {
                return Err(fail(
                    "numerics",
                    "extent",
                    format!(
                        "extent {ext} is below 4 support radii ({:.4})",
                        4.0 * stats.support_radius
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match self.kernel.kind {
            KernelKind::Cauchy => KernelSpec::cauchy(self.kernel.theta),
            KernelKind::Euler => KernelSpec::euler(),
        }
    }

    pub fn blob_radius(&self) -> f64 {
        self.numerics.blob_radius.unwrap_or(1.5 * self.numerics.h)
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            dt: self.numerics.dt,
            scheme: self.numerics.scheme,
            blob_radius: self.blob_radius(),
            blob_shape: self.numerics.blob_shape,
            divergence_mode: self.numerics.divergence,
            direction: Default::default(),
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            t_end: self.numerics.t_end,
            sample_every: self.numerics.sample_every,
            blowup_factor: self.numerics.blowup_factor,
        }
    }

    /// Tolerances after applying `tol_scale`.
    pub fn flowdiag_config(&self) -> FlowDiagConfig {
        let mut f = self.diagnostics.flowdiag.clone();
        f.tolerances = f.tolerances.scaled(self.diagnostics.tol_scale);
        f
    }

    /// Bounding box of all pieces, widened by the mollifier radius.
    pub fn support_box(&self) -> (C64, C64) {
        let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &self.initial.pieces {
            let (a, b) = p.bounding_box();
            lo = C64::new(lo.re.min(a.re), lo.im.min(a.im));
            hi = C64::new(hi.re.max(b.re), hi.im.max(b.im));
        }
        let eps = self.initial.mollifier_epsilon.unwrap_or(0.0);
        (lo - C64::new(eps, eps), hi + C64::new(eps, eps))
    }

    /// Grid of spacing `h` covering the support with a three-cell margin,
    /// symmetric about the origin so refinements nest.
    pub fn initial_geometry(&self) -> Result<GridGeometry> {
        let (lo, hi) = self.support_box();
        let reach = [lo.re, lo.im, hi.re, hi.im].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let h = self.numerics.h;
        let cells = ((reach + 3.0 * h) / h).ceil();
        GridGeometry::centered(cells * h, h)
    }

    /// Discretized (and optionally mollified) initial vorticity.
    pub fn initial_grid(&self) -> Result<VorticityGrid> {
        let geom = self.initial_geometry()?;
        let mut grid = VorticityGrid::zeros(geom);
        for p in &self.initial.pieces {
            let part = match p {
                Piece::Gaussian { center, width, amplitude, cutoff } => {
                    make_gaussian(C64::new(center[0], center[1]), *amplitude, *width, *cutoff, geom)?
                }
                _ => make_indicator_sampled(&p.shape().expect("indicator piece"), p.amplitude(), geom, self.initial.sampling)?,
            };
            grid.add(&part)?;
        }
        if let Some(eps) = self.initial.mollifier_epsilon {
            grid = mollify(&grid, MollifierSpec::new(eps)?)?;
        }
        grid.validate()?;
        Ok(grid)
    }

    /// Velocity sampling half-width for a support of radius `r`.
    pub fn extent_for(&self, r: f64) -> f64 {
        self.numerics.extent.unwrap_or(4.0 * r)
    }

    /// Copy with `h`, `dt` and the blob radius scaled (blob radius only
    /// if it follows `h`).
    pub fn refined(&self, h_factor: f64, dt_factor: f64) -> Self {
        let mut c = self.clone();
        c.numerics.h *= h_factor;
        c.numerics.dt *= dt_factor;
        if let Some(d) = c.numerics.blob_radius.as_mut() {
            *d *= h_factor;
        }
        c
    }
}

fn strip_input(e: Error) -> String {
    match e {
        Error::Input(m) => m,
        other => other.to_string(),
    }
}

fn section_line(text: &str, section: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim();
        t.starts_with('[') && t.trim_matches(|c| c == '[' || c == ']').trim() == section
    })
    .map(|n| n + 1)
}

/// Line of the `k`-th `[[initial.pieces]]` header.
fn piece_line(text: &str, k: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim().starts_with("[[initial.pieces]]"))
        .nth(k)
        .map(|(n, _)| n + 1)
}
