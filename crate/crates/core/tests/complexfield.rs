use std::f64::consts::PI;

use proptest::prelude::*;
use qcflow::complexfield::{
    beurling_direct, divergence_of_velocity, linfty_bound, velocity_direct, BlobKernel,
    BlobSources, BoundMode, Field, KernelSpec,
};
use qcflow::vorticity::{
    make_gaussian, make_indicator_sampled, GridGeometry, Shape, VorticityGrid,
};
use qcflow::C64;

fn disk_grid(half: f64, h: f64) -> VorticityGrid {
    let g = GridGeometry::centered(half, h).unwrap();
    make_indicator_sampled(&Shape::disk(C64::new(0.0, 0.0), 1.0), 1.0, g, 16).unwrap()
}

fn vel(grid: &VorticityGrid, z: &[C64], spec: KernelSpec) -> Vec<C64> {
    velocity_direct(&Field::Grid(grid.sources()), z, spec)
        .unwrap()
        .into_iter()
        .map(|s| s.value)
        .collect()
}

#[test]
fn disk_velocity_examples() {
    let d = disk_grid(2.0, 0.02);
    let v = vel(&d, &[C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.5, 0.0)], KernelSpec::cauchy(0.0));
    assert!(v[0].norm() < 1e-3, "{}", v[0]);
    assert!((v[1] - 0.25).norm() < 1e-3, "{}", v[1]);
    assert!((v[2] - 0.25).norm() < 1e-3, "{}", v[2]);
}

#[test]
fn disk_beurling_examples() {
    let d = disk_grid(2.0, 0.02);
    let z = [C64::new(0.3, 0.0), C64::new(2.0, 0.0), C64::new(-0.1, 0.45)];
    let s = beurling_direct(&Field::Grid(d.sources()), &z).unwrap();
    assert!(s[0].value.norm() < 5e-3, "{}", s[0].value);
    assert!((s[1].value + 0.25).norm() < 1e-2, "{}", s[1].value);
    assert!(s[2].value.norm() < 5e-3, "{}", s[2].value);

    let zero = VorticityGrid::zeros(d.geometry);
    for s in beurling_direct(&Field::Grid(zero.sources()), &z).unwrap() {
        assert_eq!(s.value, C64::new(0.0, 0.0));
    }
}

/// Interior divergence of an axis-aligned ellipse patch is constant. The
/// oracle is the thin-strip limit: a horizontal strip of half-width b
/// carries v = -i y inside, so Sχ = -1 there; scaling gives -(a-b)/(a+b).
#[test]
fn ellipse_interior_divergence() {
    let (a, b) = (1.5, 0.75);
    let g = GridGeometry::centered(2.0, 0.02).unwrap();
    let e = make_indicator_sampled(&Shape::ellipse(a, b), 1.0, g, 16).unwrap();
    let z = [C64::new(0.0, 0.0), C64::new(0.5, 0.2), C64::new(-0.7, -0.3)];
    let div = divergence_of_velocity(&Field::Grid(e.sources()), &z, KernelSpec::cauchy(0.0)).unwrap();
    for d in div {
        assert!((d + (a - b) / (a + b)).abs() < 5e-3, "{d}");
    }
}

#[test]
fn euler_divergence_is_identically_zero() {
    let d = disk_grid(2.0, 0.05);
    let z: Vec<C64> = (0..30).map(|k| C64::from_polar(0.1 * k as f64, k as f64)).collect();
    let div = divergence_of_velocity(&Field::Grid(d.sources()), &z, KernelSpec::euler()).unwrap();
    assert!(div.iter().all(|&x| x == 0.0));
}

#[test]
fn euler_velocity_is_solid_rotation_inside_disk() {
    let d = disk_grid(2.0, 0.02);
    let z = [C64::new(0.5, 0.0), C64::new(0.0, 2.0)];
    let v = vel(&d, &z, KernelSpec::euler());
    assert!((v[0] - C64::new(0.0, 0.25)).norm() < 1e-3);
    assert!((v[1] - C64::new(-0.25, 0.0)).norm() < 1e-3);
}

/// ∂̄ and ∂ of the velocity by centered differences at spacing η.
fn fd_derivatives(grid: &VorticityGrid, z: C64, eta: f64, spec: KernelSpec) -> (C64, C64) {
    let pts = [z + eta, z - eta, z + C64::i() * eta, z - C64::i() * eta];
    let v = vel(grid, &pts, spec);
    let dx = (v[0] - v[1]) / (2.0 * eta);
    let dy = (v[2] - v[3]) / (2.0 * eta);
    ((dx + C64::i() * dy) / 2.0, (dx - C64::i() * dy) / 2.0)
}

#[test]
fn dbar_identity_converges_at_second_order() {
    let theta = 0.7;
    let spec = KernelSpec::cauchy(theta);
    let exact = |z: C64| (-z.norm_sqr() / 0.25).exp();
    let z = C64::new(0.23, -0.11);
    let mut errs = Vec::new();
    for h in [0.08, 0.04, 0.02] {
        let g = GridGeometry::centered(3.0, h).unwrap();
        let w = make_gaussian(C64::new(0.0, 0.0), 1.0, 0.5, 1e-9, g).unwrap();
        let (dbar, _) = fd_derivatives(&w, z, h, spec);
        errs.push((dbar - spec.phase() * exact(z) / 2.0).norm());
    }
    let r1 = errs[0] / errs[1];
    let r2 = errs[1] / errs[2];
    assert!(r1 > 3.0 && r2 > 3.0, "errors {errs:?}");
}

#[test]
fn beurling_consistency_under_refinement() {
    let spec = KernelSpec::cauchy(0.3);
    let mut errs = Vec::new();
    for h in [0.08, 0.04, 0.02] {
        let g = GridGeometry::centered(3.0, h).unwrap();
        let w = make_gaussian(C64::new(0.0, 0.0), 1.0, 0.5, 1e-9, g).unwrap();
        // piecewise-constant data has log-singular Sω on cell edges, so
        // sample at the cell center nearest a fixed point
        let (i, j) = (((-0.2 - g.origin.re) / g.h) as usize, ((0.3 - g.origin.im) / g.h) as usize);
        let z = g.center(i, j);
        let (_, d) = fd_derivatives(&w, z, h, spec);
        let s = beurling_direct(&Field::Grid(w.sources()), &[z]).unwrap()[0].value;
        errs.push((d - spec.phase() * s / 2.0).norm());
    }
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!(errs[2] < 1e-3, "{errs:?}");
}

#[test]
fn non_finite_input_is_rejected() {
    let p = [C64::new(f64::NAN, 0.0)];
    let m = [1.0];
    let f = Field::Blobs(BlobSources { positions: &p, masses: &m, kernel: BlobKernel::rankine(0.1) });
    assert!(velocity_direct(&f, &[C64::new(1.0, 0.0)], KernelSpec::cauchy(0.0)).is_err());
    let empty = Field::Blobs(BlobSources { positions: &[], masses: &[], kernel: BlobKernel::rankine(0.1) });
    let v = velocity_direct(&empty, &[C64::new(1.0, 0.0)], KernelSpec::cauchy(0.0)).unwrap();
    assert_eq!(v[0].value, C64::new(0.0, 0.0));
}

fn cloud() -> impl Strategy<Value = (Vec<C64>, Vec<f64>)> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -2.0f64..2.0), 1..40).prop_map(|v| {
        (
            v.iter().map(|(x, y, _)| C64::new(*x, *y)).collect(),
            v.iter().map(|(_, _, m)| *m).collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Rankine blobs on distinct sites of a lattice with spacing ≥ 2δ do not
    /// overlap, so the density's norms and support are known exactly.
    #[test]
    fn bounds_dominate_sampled_velocity(
        sites in prop::collection::btree_map((0usize..12, 0usize..12), -2.0f64..2.0, 1..40),
        delta in 0.05f64..0.125,
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let area = PI * delta * delta;
        let pos: Vec<C64> = sites.keys().map(|(i, j)| C64::new(-1.375 + 0.25 * *i as f64, -1.375 + 0.25 * *j as f64)).collect();
        let omega: Vec<f64> = sites.values().copied().collect();
        let masses: Vec<f64> = omega.iter().map(|w| w * area).collect();
        let stats = qcflow::complexfield::FieldStats {
            l1: masses.iter().map(|m| m.abs()).sum(),
            linf: omega.iter().fold(0.0f64, |m, w| m.max(w.abs())),
            support_area: area * pos.len() as f64,
            support_radius: 2.0,
            support_center: C64::new(0.0, 0.0),
        };
        let src = Field::Blobs(BlobSources { positions: &pos, masses: &masses, kernel: BlobKernel::rankine(delta) });
        let targets: Vec<C64> = (0..81)
            .flat_map(|j| (0..81).map(move |i| C64::new(-2.0 + 0.05 * i as f64, -2.0 + 0.05 * j as f64)))
            .chain(pos.iter().map(|p| p + delta * 0.999))
            .collect();
        let v = velocity_direct(&src, &targets, KernelSpec::cauchy(theta)).unwrap();
        let sup = v.iter().fold(0.0f64, |m, s| m.max(s.value.norm()));
        prop_assert!(sup <= linfty_bound(&stats, BoundMode::L1Linf).unwrap());
        prop_assert!(sup <= linfty_bound(&stats, BoundMode::SupportLinf).unwrap());
    }

    #[test]
    fn transforms_are_linear((pos, m1) in cloud(), scale in -3.0f64..3.0, theta in 0.0f64..std::f64::consts::TAU) {
        let m2: Vec<f64> = m1.iter().enumerate().map(|(k, m)| m * (k as f64).cos()).collect();
        let sum: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| scale * a + b).collect();
        let kernel = BlobKernel::gaussian(0.1);
        let targets: Vec<C64> = (0..20).map(|k| C64::from_polar(0.15 * k as f64, 1.3 * k as f64)).collect();
        let spec = KernelSpec::cauchy(theta);
        let f = |m: &[f64]| {
            let src = Field::Blobs(BlobSources { positions: &pos, masses: m, kernel });
            let v = velocity_direct(&src, &targets, spec).unwrap();
            let s = beurling_direct(&src, &targets).unwrap();
            (v, s)
        };
        let (v1, s1) = f(&m1);
        let (v2, s2) = f(&m2);
        let (vs, ss) = f(&sum);
        for k in 0..targets.len() {
            let ev = vs[k].value - (scale * v1[k].value + v2[k].value);
            let es = ss[k].value - (scale * s1[k].value + s2[k].value);
            prop_assert!(ev.norm() < 1e-9 * (1.0 + vs[k].value.norm()));
            prop_assert!(es.norm() < 1e-9 * (1.0 + ss[k].value.norm()) * 100.0);
        }
    }
}
