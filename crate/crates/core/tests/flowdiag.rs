use std::f64::consts::PI;

use qcflow::complexfield::KernelSpec;
use qcflow::dynamics::{run_state, step, RunOptions, SimState, StepConfig};
use qcflow::flowdiag::{
    beltrami, FlowDiagConfig, FlowObserver, RegionTag, SupportGeometry, TracerGrid, TracerSpec,
};
use qcflow::report::{DiagnosticsReport, Verdict};
use qcflow::vorticity::{make_indicator, GridGeometry, Shape, VorticityGrid};
use qcflow::C64;

fn unit_disk(h: f64) -> VorticityGrid {
    let g = GridGeometry::centered(1.0 + 4.0 * h, h).unwrap();
    make_indicator(&Shape::disk(C64::new(0.0, 0.0), 1.0), 1.0, g).unwrap()
}

fn spec() -> TracerSpec {
    TracerSpec {
        stride: 12,
        ..TracerSpec::default()
    }
}

fn with_tracers(grid: &VorticityGrid, kernel: KernelSpec) -> (SimState, SupportGeometry) {
    let sup = SupportGeometry::from_grid(grid);
    let tr = TracerGrid::build(&spec(), &sup).unwrap();
    (SimState::from_grid(grid, kernel, 0.0).with_tracers(tr), sup)
}

fn advance(state: SimState, dt: f64, delta: f64, t: f64) -> SimState {
    let mut rep = DiagnosticsReport::default();
    run_state(state, &StepConfig::new(dt, delta), &RunOptions::new(t, 1_000), &mut [], &mut rep).unwrap()
}

/// Outside a Rankine vortex of circulation Γ the Euler flow rotates each
/// circle |z| = r by Γt/(2πr²). For X(z) = z e^{iφ(|z|)} one finds
/// |μ| = a/√(1+a²) with a = r|φ'(r)|/2 = Γt/(2πr²): differential rotation
/// is not conformal.
#[test]
fn euler_exterior_shear_matches_closed_form() {
    let h = 0.05;
    let (s0, _) = with_tracers(&unit_disk(h), KernelSpec::euler());
    let t = 0.5;
    let s1 = advance(s0, 0.05, 1.5 * h, t);
    let tr = s1.tracers.as_ref().unwrap();
    let f = beltrami(tr).unwrap();
    let gamma = PI;
    let mut checked = 0;
    for (k, st) in tr.stencils.iter().enumerate() {
        let r = tr.initial[st.center].norm();
        if r < 1.4 {
            continue;
        }
        let a = gamma * t / (2.0 * PI * r * r);
        let expect = a / (1.0 + a * a).sqrt();
        assert!((f.mu[k].norm() - expect).abs() < 2e-3, "r {r}: {} vs {expect}", f.mu[k].norm());
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn cauchy_disk_is_conformal_well_outside_support() {
    let h = 0.06;
    let (s0, sup) = with_tracers(&unit_disk(h), KernelSpec::cauchy(0.0));
    let s1 = advance(s0, 0.05, 1.5 * h, 0.5);
    let tr = s1.tracers.as_ref().unwrap();
    let f = beltrami(tr).unwrap();
    let mut n = 0;
    for (k, st) in tr.stencils.iter().enumerate() {
        if sup.signed_depth(tr.initial[st.center]) <= -0.5 {
            assert!(f.mu[k].norm() < 1e-2);
            n += 1;
        }
    }
    assert!(n > 20);
}

/// μ(τ)/τ → e^{iθ}ω₀/2 inside the support as τ → 0.
#[test]
fn initial_derivative_carries_the_kernel_phase() {
    let h = 0.06;
    for theta in [0.0, PI / 2.0] {
        let (s0, _) = with_tracers(&unit_disk(h), KernelSpec::cauchy(theta));
        let tau = 0.01;
        let s1 = step(&s0, &StepConfig::new(tau, 1.5 * h)).unwrap();
        let tr = s1.tracers.as_ref().unwrap();
        let f = beltrami(tr).unwrap();
        let mut n = 0;
        for (k, st) in tr.stencils.iter().enumerate() {
            if tr.initial[st.center].norm() < 0.6 {
                let m = f.mu[k] / tau;
                assert!((m.norm() - 0.5).abs() < 0.025, "{}", m.norm());
                assert!((m.arg() - theta).abs() < 0.05, "{}", m.arg());
                n += 1;
            }
        }
        assert!(n > 3);
    }
}

#[test]
fn observer_passes_on_a_coarse_disk_run() {
    let h = 0.06;
    let grid = unit_disk(h);
    let (s0, sup) = with_tracers(&grid, KernelSpec::cauchy(0.0));
    let cfg = StepConfig::new(0.05, 1.5 * h);
    let fc = FlowDiagConfig {
        saturation: true,
        ..FlowDiagConfig::default()
    };
    let mut obs = FlowObserver::new(&s0, cfg.blob_kernel(), &sup, fc).unwrap();
    let mut rep = DiagnosticsReport::default();
    run_state(s0, &cfg, &RunOptions::new(0.5, 5), &mut [&mut obs], &mut rep).unwrap();
    assert!(rep.all_hard_pass(), "{}", rep.summary());
    for check in ["distortion", "pointwise_bound", "conformal_outside", "farfield_b", "area_distortion"] {
        assert_eq!(rep.entries_for(check).count(), 3, "{check}");
    }
    // no tail to measure at t = 0, then the 1/z law of a net circulation
    let decay: Vec<_> = rep.entries_for("farfield_decay").collect();
    assert_eq!(decay[0].verdict, Verdict::Inconclusive);
    for e in &decay[1..] {
        assert!((e.measured + 1.0).abs() < 0.05, "{}", e.measured);
    }
}

#[test]
fn tracer_tags_partition_the_lattice() {
    let grid = unit_disk(0.06);
    let sup = SupportGeometry::from_grid(&grid);
    let tr = TracerGrid::build(&spec(), &sup).unwrap();
    let inside = tr.tags.iter().filter(|t| **t == RegionTag::InsideSupport).count();
    let far = tr.tags.iter().filter(|t| **t == RegionTag::FarField).count();
    assert!(inside > 0 && far >= 8);
    for &k in &tr.far {
        assert!(tr.initial[k].norm() >= 3.9 * sup.radius);
    }
}
