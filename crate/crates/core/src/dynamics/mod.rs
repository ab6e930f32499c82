//! Self-consistent transport of vortex blobs and passive tracers.
//!
//! The state `(positions, log J, tracer positions)` is advanced by an
//! explicit Runge-Kutta scheme. Every stage recomputes the velocity from
//! the stage configuration, with circulations `ω · area0 · J`, and the
//! Jacobians follow `d/dt log J = div v` along each trajectory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::complexfield::{
    blob_velocity_and_divergence, velocity_direct, BlobKernel, BlobShape, BlobSources, Field,
    FieldStats, KernelSpec, SHARP_LINF_CONSTANT,
};
use crate::flowdiag::TracerGrid;
use crate::report::DiagnosticsReport;
use crate::vorticity::{blob_stats, load_blobs_csv, save_blobs_csv, to_blobs, VortexBlob, VorticityGrid};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    RK4,
    RK2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceMode {
    /// `Re(e^{iθ} Sω)` from the blob Beurling sum, fused with the velocity.
    #[default]
    Beurling,
    /// Centered differences of the velocity at spacing `δ/4`.
    FiniteDifference,
    /// Jacobians stay 1.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    /// Integrate with `-v`, i.e. toward negative times.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub blob_radius: f64,
    pub blob_shape: BlobShape,
    pub divergence_mode: DivergenceMode,
    pub direction: Direction,
}

impl StepConfig {
    pub fn new(dt: f64, blob_radius: f64) -> Self {
        StepConfig {
            dt,
            scheme: Scheme::RK4,
            blob_radius,
            blob_shape: BlobShape::Gaussian,
            divergence_mode: DivergenceMode::Beurling,
            direction: Direction::Forward,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::input(format!("dt must be > 0, got {}", self.dt)));
        }
        BlobKernel::new(self.blob_shape, self.blob_radius)?;
        Ok(())
    }

    pub fn blob_kernel(&self) -> BlobKernel {
        BlobKernel {
            shape: self.blob_shape,
            radius: self.blob_radius,
        }
    }

    fn sign(&self) -> f64 {
        match self.direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub blobs: Vec<VortexBlob>,
    pub kernel: KernelSpec,
    pub tracers: Option<TracerGrid>,
    pub step_count: u64,
}

impl SimState {
    pub fn new(blobs: Vec<VortexBlob>, kernel: KernelSpec) -> Self {
        SimState {
            t: 0.0,
            blobs,
            kernel,
            tracers: None,
            step_count: 0,
        }
    }

    /// One blob per nonzero cell of `grid`.
    pub fn from_grid(grid: &VorticityGrid, kernel: KernelSpec, threshold: f64) -> Self {
        Self::new(to_blobs(grid, threshold), kernel)
    }

    pub fn with_tracers(mut self, tracers: TracerGrid) -> Self {
        self.tracers = Some(tracers);
        self
    }

    pub fn positions(&self) -> Vec<C64> {
        self.blobs.iter().map(|b| b.position).collect()
    }

    pub fn circulations(&self) -> Vec<f64> {
        self.blobs.iter().map(|b| b.circulation()).collect()
    }

    pub fn stats(&self, reach: f64) -> FieldStats {
        blob_stats(&self.blobs, reach)
    }

    /// Checkpoint: one blob per row, `x,y,omega,area0,jacobian`.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        save_blobs_csv(path, &self.blobs)
    }

    pub fn load_checkpoint(path: &Path, kernel: KernelSpec, t: f64) -> Result<Self> {
        let mut s = Self::new(load_blobs_csv(path)?, kernel);
        s.t = t;
        Ok(s)
    }
}

/// `K∗ω` at the targets for the blob measure of `state`.
pub fn velocity_field(state: &SimState, blob: BlobKernel, targets: &[C64]) -> Result<Vec<C64>> {
    let pos = state.positions();
    let circ = state.circulations();
    let f = Field::Blobs(BlobSources {
        positions: &pos,
        masses: &circ,
        kernel: blob,
    });
    Ok(velocity_direct(&f, targets, state.kernel)?
        .into_iter()
        .map(|s| s.value)
        .collect())
}

/// Stage derivative of the packed state.
struct Rates {
    v: Vec<C64>,
    dlogj: Vec<f64>,
    vt: Vec<C64>,
}

/// Immutable per-blob data shared by all stages.
struct Frozen<'a> {
    omega_area: Vec<f64>,
    kernel: KernelSpec,
    cfg: &'a StepConfig,
}

impl<'a> Frozen<'a> {
    fn rates(&self, pos: &[C64], logj: &[f64], tracers: &[C64]) -> Result<Rates> {
        let circ: Vec<f64> = self
            .omega_area
            .iter()
            .zip(logj)
            .map(|(w, l)| w * l.exp())
            .collect();
        let src = BlobSources {
            positions: pos,
            masses: &circ,
            kernel: self.cfg.blob_kernel(),
        };
        let sign = self.cfg.sign();
        let (v, dlogj) = match self.cfg.divergence_mode {
            DivergenceMode::Beurling => {
                let vd = blob_velocity_and_divergence(&src, pos, self.kernel)?;
                vd.into_iter().map(|(v, d)| (sign * v, sign * d)).unzip()
            }
            DivergenceMode::Off => {
                let v = velocity_direct(&Field::Blobs(src), pos, self.kernel)?;
                (v.into_iter().map(|s| sign * s.value).collect(), vec![0.0; pos.len()])
            }
            DivergenceMode::FiniteDifference => {
                let eta = 0.25 * self.cfg.blob_radius;
                let mut pts = Vec::with_capacity(5 * pos.len());
                for p in pos {
                    pts.extend_from_slice(&[
                        *p,
                        p + eta,
                        p - eta,
                        p + C64::i() * eta,
                        p - C64::i() * eta,
                    ]);
                }
                let all = velocity_direct(&Field::Blobs(src), &pts, self.kernel)?;
                let mut v = Vec::with_capacity(pos.len());
                let mut d = Vec::with_capacity(pos.len());
                for c in all.chunks(5) {
                    v.push(sign * c[0].value);
                    let div = if self.kernel.is_euler() {
                        0.0
                    } else {
                        (c[1].value.re - c[2].value.re + c[3].value.im - c[4].value.im) / (2.0 * eta)
                    };
                    d.push(sign * div);
                }
                (v, d)
            }
        };
        let vt = if tracers.is_empty() {
            Vec::new()
        } else {
            velocity_direct(&Field::Blobs(src), tracers, self.kernel)?
                .into_iter()
                .map(|s| sign * s.value)
                .collect()
        };
        Ok(Rates { v, dlogj, vt })
    }
}

fn axpy_c(base: &[C64], k: &[C64], a: f64) -> Vec<C64> {
    base.iter().zip(k).map(|(b, k)| b + a * k).collect()
}

fn axpy_r(base: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    base.iter().zip(k).map(|(b, k)| b + a * k).collect()
}

/// Diagnostics from one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `max |v|` over blobs and tracers at the start of the step.
    pub max_speed: f64,
    /// Number of half-step retries taken.
    pub retries: u32,
}

fn raw_step(state: &SimState, cfg: &StepConfig, dt: f64) -> Result<(SimState, f64)> {
    let fr = Frozen {
        omega_area: state.blobs.iter().map(|b| b.omega * b.area0).collect(),
        kernel: state.kernel,
        cfg,
    };
    let p0 = state.positions();
    let l0: Vec<f64> = state.blobs.iter().map(|b| b.jacobian.ln()).collect();
    let t0: Vec<C64> = state.tracers.as_ref().map(|t| t.current.clone()).unwrap_or_default();

    let k1 = fr.rates(&p0, &l0, &t0)?;
    let max_speed = k1.v.iter().chain(&k1.vt).map(|v| v.norm()).fold(0.0, f64::max);
    let (p1, l1, tr1) = match cfg.scheme {
        Scheme::RK2 => {
            let k2 = fr.rates(
                &axpy_c(&p0, &k1.v, dt / 2.0),
                &axpy_r(&l0, &k1.dlogj, dt / 2.0),
                &axpy_c(&t0, &k1.vt, dt / 2.0),
            )?;
            (
                axpy_c(&p0, &k2.v, dt),
                axpy_r(&l0, &k2.dlogj, dt),
                axpy_c(&t0, &k2.vt, dt),
            )
        }
        Scheme::RK4 => {
            let k2 = fr.rates(
                &axpy_c(&p0, &k1.v, dt / 2.0),
                &axpy_r(&l0, &k1.dlogj, dt / 2.0),
                &axpy_c(&t0, &k1.vt, dt / 2.0),
            )?;
            let k3 = fr.rates(
                &axpy_c(&p0, &k2.v, dt / 2.0),
                &axpy_r(&l0, &k2.dlogj, dt / 2.0),
                &axpy_c(&t0, &k2.vt, dt / 2.0),
            )?;
            let k4 = fr.rates(
                &axpy_c(&p0, &k3.v, dt),
                &axpy_r(&l0, &k3.dlogj, dt),
                &axpy_c(&t0, &k3.vt, dt),
            )?;
            let comb_c = |x: &[C64], a: &[C64], b: &[C64], c: &[C64], d: &[C64]| -> Vec<C64> {
                (0..x.len())
                    .map(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                    .collect()
            };
            let comb_r = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
                (0..x.len())
                    .map(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                    .collect()
            };
            (
                comb_c(&p0, &k1.v, &k2.v, &k3.v, &k4.v),
                comb_r(&l0, &k1.dlogj, &k2.dlogj, &k3.dlogj, &k4.dlogj),
                comb_c(&t0, &k1.vt, &k2.vt, &k3.vt, &k4.vt),
            )
        }
    };
    let mut next = state.clone();
    for ((b, p), l) in next.blobs.iter_mut().zip(p1).zip(l1) {
        b.position = p;
        b.jacobian = l.exp();
    }
    if let Some(tr) = next.tracers.as_mut() {
        tr.current = tr1;
    }
    next.t = state.t + cfg.sign() * dt;
    next.step_count += 1;
    Ok((next, max_speed))
}

fn finite(state: &SimState) -> bool {
    state.blobs.iter().all(|b| {
        b.position.re.is_finite() && b.position.im.is_finite() && b.jacobian.is_finite() && b.jacobian > 0.0
    }) && state
        .tracers
        .as_ref()
        .is_none_or(|t| t.current.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Advance by one step of `cfg.dt`. A non-finite result is retried once as
/// two half steps; if that also fails the step reports a blow-up.
pub fn step(state: &SimState, cfg: &StepConfig) -> Result<SimState> {
    step_with_info(state, cfg).map(|(s, _)| s)
}

pub fn step_with_info(state: &SimState, cfg: &StepConfig) -> Result<(SimState, StepInfo)> {
    cfg.validate()?;
    let (next, max_speed) = raw_step(state, cfg, cfg.dt)?;
    if finite(&next) {
        return Ok((next, StepInfo { max_speed, retries: 0 }));
    }
    let (mid, _) = raw_step(state, cfg, cfg.dt / 2.0)?;
    let (mut next, _) = raw_step(&mid, cfg, cfg.dt / 2.0)?;
    if !finite(&mid) || !finite(&next) {
        return Err(Error::Blowup {
            t: state.t,
            reason: format!("non-finite state after halving dt to {}", cfg.dt / 2.0),
        });
    }
    next.step_count = state.step_count + 1;
    Ok((next, StepInfo { max_speed, retries: 1 }))
}

/// `√(2/π) e^{|t|‖ω₀‖∞/2} ‖ω₀‖∞ |supp ω₀|^{1/2}`.
pub fn velocity_bound(t: f64, omega0: &FieldStats) -> f64 {
    SHARP_LINF_CONSTANT * (t.abs() * omega0.linf / 2.0).exp() * omega0.linf * omega0.support_area.sqrt()
}

/// Receives read-only snapshots during a run.
pub trait Observer {
    fn observe(&mut self, state: &SimState, report: &mut DiagnosticsReport) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Observers run every `sample_every` steps, and always at the start
    /// and end.
    pub sample_every: u64,
    /// Abort when the measured speed exceeds this multiple of its bound.
    pub blowup_factor: f64,
}

impl RunOptions {
    pub fn new(t_end: f64, sample_every: u64) -> Self {
        RunOptions {
            t_end,
            sample_every,
            blowup_factor: 10.0,
        }
    }
}

/// Number of steps of size `dt` in `t_end`; rejects non-multiples.
pub fn step_count(t_end: f64, dt: f64) -> Result<u64> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::input(format!("t_end must be >= 0, got {t_end}")));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::input(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    Ok(n as u64)
}

/// Integrate from `state` to `|t| = t_end`, calling observers at sample
/// steps. Returns the final state.
pub fn run_state(
    mut state: SimState,
    cfg: &StepConfig,
    opts: &RunOptions,
    observers: &mut [&mut dyn Observer],
    report: &mut DiagnosticsReport,
) -> Result<SimState> {
    cfg.validate()?;
    let n = step_count(opts.t_end, cfg.dt)?;
    let every = opts.sample_every.max(1);
    let omega0 = state.stats(0.0);
    for o in observers.iter_mut() {
        o.observe(&state, report)?;
    }
    for k in 1..=n {
        let (next, info) = step_with_info(&state, cfg)?;
        let bound = velocity_bound(state.t, &omega0);
        if info.max_speed > opts.blowup_factor * bound && bound > 0.0 {
            return Err(Error::Blowup {
                t: state.t,
                reason: format!(
                    "max |v| = {:.6e} exceeds {} x its bound {:.6e}",
                    info.max_speed, opts.blowup_factor, bound
                ),
            });
        }
        state = next;
        // exact grid times avoid drift from repeated addition
        state.t = cfg.sign() * k as f64 * cfg.dt;
        if k % every == 0 || k == n {
            for o in observers.iter_mut() {
                o.observe(&state, report)?;
            }
        }
    }
    Ok(state)
}

/// Build blobs from `initial` and run; see [`run_state`].
pub fn run(
    initial: &VorticityGrid,
    kernel: KernelSpec,
    cfg: &StepConfig,
    opts: &RunOptions,
    tracers: Option<TracerGrid>,
    observers: &mut [&mut dyn Observer],
) -> Result<(DiagnosticsReport, SimState)> {
    let mut state = SimState::from_grid(initial, kernel, 0.0);
    state.tracers = tracers;
    let mut report = DiagnosticsReport::default();
    let last = run_state(state, cfg, opts, observers, &mut report)?;
    Ok((report, last))
}

/// Records blob norms and the velocity bound at every sample.
#[derive(Debug, Clone)]
pub struct NormObserver {
    pub omega0: FieldStats,
    pub blob: BlobKernel,
    pub tol: f64,
}

impl NormObserver {
    pub fn new(initial: &SimState, blob: BlobKernel, tol: f64) -> Self {
        NormObserver {
            omega0: initial.stats(0.0),
            blob,
            tol,
        }
    }
}

impl Observer for NormObserver {
    fn observe(&mut self, state: &SimState, report: &mut DiagnosticsReport) -> Result<()> {
        use crate::report::ReportEntry;
        let s = state.stats(0.0);
        let t = state.t;
        let w0 = &self.omega0;
        report.push(ReportEntry::upper("linf_constant", t, (s.linf - w0.linf).abs(), 0.0));
        let l1_bound = w0.linf * (t.abs() * w0.linf).exp() * w0.support_area;
        report.push(ReportEntry::upper("l1_growth", t, s.l1, l1_bound * (1.0 + self.tol)));
        let mut targets = state.positions();
        if let Some(tr) = &state.tracers {
            targets.extend_from_slice(&tr.current);
        }
        let vmax = velocity_field(state, self.blob, &targets)?
            .into_iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        report.push(ReportEntry::upper("velocity_bound", t, vmax, velocity_bound(t, w0) * (1.0 + self.tol)));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(omega: f64, area: f64) -> SimState {
        SimState::new(
            vec![VortexBlob {
                position: C64::new(0.0, 0.0),
                omega,
                area0: area,
                jacobian: 1.0,
            }],
            KernelSpec::cauchy(0.0),
        )
    }

    #[test]
    fn single_blob_far_field() {
        let s = single(1.0, PI);
        let v = velocity_field(&s, BlobKernel::rankine(1.0), &[C64::new(2.0, 0.0)]).unwrap();
        assert!((v[0].norm() - 0.25).abs() < 1e-14);

        let mut e = s.clone();
        e.kernel = KernelSpec::euler();
        let v = velocity_field(&e, BlobKernel::gaussian(0.1), &[C64::new(0.0, 3.0)]).unwrap();
        assert!((v[0] - C64::new(-1.0 / 6.0, 0.0)).norm() < 1e-14);

        let empty = SimState::new(vec![], KernelSpec::cauchy(0.0));
        let v = velocity_field(&empty, BlobKernel::rankine(1.0), &[C64::new(2.0, 0.0)]).unwrap();
        assert_eq!(v[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_vorticity_only_advances_time() {
        let s = single(0.0, 0.01);
        let n = step(&s, &StepConfig::new(0.1, 0.05)).unwrap();
        assert_eq!(n.blobs, s.blobs);
        assert!((n.t - 0.1).abs() < 1e-15);
        assert_eq!(n.step_count, 1);
    }

    #[test]
    fn backward_direction_reverses_time() {
        let mut s = single(1.0, 0.01);
        s.blobs.push(VortexBlob {
            position: C64::new(0.3, 0.1),
            ..s.blobs[0]
        });
        let mut cfg = StepConfig::new(0.05, 0.05);
        let f = step(&s, &cfg).unwrap();
        cfg.direction = Direction::Backward;
        let b = step(&f, &cfg).unwrap();
        assert!(b.t.abs() < 1e-15);
        for (x, y) in b.blobs.iter().zip(&s.blobs) {
            assert!((x.position - y.position).norm() < 1e-8);
            assert!((x.jacobian - y.jacobian).abs() < 1e-8);
        }
    }

    #[test]
    fn t_end_must_be_a_multiple_of_dt() {
        assert_eq!(step_count(1.0, 0.05).unwrap(), 20);
        assert_eq!(step_count(0.0, 0.05).unwrap(), 0);
        assert!(step_count(1.0, 0.3).is_err());
    }
}
