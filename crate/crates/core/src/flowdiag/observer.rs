use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::beltrami::beltrami;
use super::checks::*;
use super::tracers::{SupportGeometry, TracerGrid};
use crate::complexfield::{blob_density, BlobKernel, BlobSources};
use crate::dynamics::{Observer, SimState};
use crate::report::{DiagnosticsReport, ReportEntry};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowDiagConfig {
    pub tolerances: Tolerances,
    /// Minimum initial distance outside the support for the conformality
    /// check.
    pub conformal_margin: f64,
    /// Check saturation of the pointwise bound (uniform patches only).
    pub saturation: bool,
    pub farfield: bool,
    /// `E` for the area checks is the disk of this multiple of the support
    /// radius.
    pub area_region_factor: f64,
    pub quasisymmetry_triples: usize,
    pub seed: u64,
}

impl Default for FlowDiagConfig {
    fn default() -> Self {
        FlowDiagConfig {
            tolerances: Tolerances::default(),
            conformal_margin: 0.5,
            saturation: false,
            farfield: true,
            area_region_factor: 1.2,
            quasisymmetry_triples: 100,
            seed: 0,
        }
    }
}

/// Flow-map diagnostics at every sample time.
///
/// The reference density for the pointwise bound at a node is the largest
/// blob-regularized initial density over the node's finite-difference
/// stencil, since the stencil measures the map on that neighborhood.
pub struct FlowObserver {
    pub cfg: FlowDiagConfig,
    omega0_linf: f64,
    theta: f64,
    euler: bool,
    /// `|∫ω₀|` is not negligible against `‖ω₀‖₁`.
    net_circulation: bool,
    /// Initial density at each stencil center.
    pub rho0: Vec<f64>,
    /// Stencil maximum of the initial density.
    pub omega_ref: Vec<f64>,
    center: C64,
    radius: f64,
    triples: Vec<(usize, usize, usize)>,
}

impl FlowObserver {
    pub fn new(initial: &SimState, blob: BlobKernel, support: &SupportGeometry, cfg: FlowDiagConfig) -> Result<Self> {
        let tracers = initial
            .tracers
            .as_ref()
            .ok_or_else(|| Error::input("flow diagnostics need tracers"))?;
        let pos = initial.positions();
        let circ = initial.circulations();
        let src = BlobSources {
            positions: &pos,
            masses: &circ,
            kernel: blob,
        };
        let rho = blob_density(&src, &tracers.initial)?;
        let rho0 = tracers.stencils.iter().map(|s| rho[s.center]).collect();
        let omega_ref = tracers
            .stencils
            .iter()
            .map(|s| {
                [s.center, s.east, s.west, s.north, s.south]
                    .iter()
                    .map(|&k| rho[k].abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let triples = make_triples(tracers, cfg.quasisymmetry_triples, cfg.seed);
        Ok(FlowObserver {
            omega0_linf: initial.stats(0.0).linf,
            theta: initial.kernel.theta,
            euler: initial.kernel.is_euler(),
            net_circulation: {
                let circ = initial.circulations();
                let total: f64 = circ.iter().sum();
                let l1: f64 = circ.iter().map(|c| c.abs()).sum();
                total.abs() > 1e-3 * l1
            },
            rho0,
            omega_ref,
            center: support.center,
            radius: support.radius,
            triples,
            cfg,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Entries for one snapshot of the tracers at time `t`.
    pub fn entries(&self, tracers: &TracerGrid, t: f64) -> Vec<ReportEntry> {
        let tol = &self.cfg.tolerances;
        let field = match beltrami(tracers) {
            Ok(f) => f,
            Err(e) => {
                let mut bad = ReportEntry::upper("beltrami", t, f64::INFINITY, 0.0);
                bad.check = format!("beltrami ({e})").replace(',', ";");
                return vec![bad];
            }
        };
        let mut out = vec![distortion_check(&field, t, self.omega0_linf, tol.bound_rel)];
        if !self.euler {
            out.push(pointwise_bound_check(
                &field,
                t,
                &self.omega_ref,
                tol.pointwise_rel,
                tol.pointwise_abs,
            ));
            if self.cfg.saturation && t != 0.0 {
                out.push(saturation_check(&field, tracers, t, &self.omega_ref, tol.saturation_rel));
            }
            out.push(conformal_outside_check(
                &field,
                tracers,
                t,
                self.cfg.conformal_margin,
                tol.conformal_abs,
            ));
        }
        let r_e = self.cfg.area_region_factor * self.radius;
        out.push(area_distortion_check(
            &field,
            tracers,
            t,
            self.center,
            r_e,
            self.omega0_linf,
            tol.bound_rel,
        ));
        if self.euler {
            out.push(area_preservation_check(
                &field,
                tracers,
                t,
                self.center,
                r_e,
                tol.area_preservation,
            ));
        }
        if self.cfg.farfield {
            out.extend(farfield_checks(tracers, t, self.center, tol, self.net_circulation));
        }
        let k = field.max_k();
        if k.is_finite() {
            out.push(quasisymmetry_check(tracers, t, &self.triples, k, tol.quasisymmetry_cap));
            out.push(area_ratio_check(&field, tracers, t, self.center, r_e, k, tol.quasisymmetry_cap));
        }
        out
    }

    /// Initial-derivative check from tracers advanced by a single short
    /// step `tau`. The identity `∂̄v = e^{iθ}ω/2` holds for the Cauchy
    /// kernel only, so Euler runs have no such entry.
    pub fn initial_derivative_entry(&self, tracers_at_tau: &TracerGrid, tau: f64) -> Option<ReportEntry> {
        if self.euler {
            return None;
        }
        Some(match beltrami(tracers_at_tau) {
            Ok(f) => initial_derivative_check(
                &f,
                tracers_at_tau,
                tau,
                self.theta,
                &self.rho0,
                self.cfg.tolerances.initial_derivative_rel,
            ),
            Err(_) => ReportEntry::inconclusive("initial_derivative", tau),
        })
    }
}

fn make_triples(tracers: &TracerGrid, n: usize, seed: u64) -> Vec<(usize, usize, usize)> {
    let centers: Vec<usize> = tracers.stencils.iter().map(|s| s.center).collect();
    if centers.len() < 3 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v = sample(&mut rng, centers.len(), 3).into_vec();
            (centers[v[0]], centers[v[1]], centers[v[2]])
        })
        .collect()
}

impl Observer for FlowObserver {
    fn observe(&mut self, state: &SimState, report: &mut DiagnosticsReport) -> Result<()> {
        if let Some(tr) = &state.tracers {
            report.extend(self.entries(tr, state.t));
        }
        Ok(())
    }
}
