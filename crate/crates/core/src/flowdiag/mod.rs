//! Quasiconformal diagnostics of the numerical flow map, measured on
//! passively advected tracers.

mod beltrami;
mod checks;
mod fit;
mod observer;
mod tracers;

pub use beltrami::{beltrami, log_distortion, BeltramiField};
pub use checks::{
    area_distortion_check, area_preservation_check, area_ratio, area_ratio_check,
    conformal_outside_check, distortion_check, farfield_checks, initial_derivative_check,
    pointwise_bound_check, quasisymmetry_check, quasisymmetry_constant, saturation_check,
    Tolerances,
};
pub use fit::{fit_far_field, fit_linear_map, singular_values_2x2, FarFieldFit, LinearFit};
pub use observer::{FlowDiagConfig, FlowObserver};
pub use tracers::{RegionTag, Stencil, SupportGeometry, TracerGrid, TracerSpec};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use crate::C64;

    #[test]
    fn identity_map_has_zero_mu() {
        let t = TracerGrid::block(11, 0.02);
        let f = beltrami(&t).unwrap();
        // lattice coordinates i·s are rounded, so μ is zero up to rounding
        assert!(f.mu.iter().all(|m| m.norm() < 1e-13));
        let e = distortion_check(&f, 0.0, 1.0, 0.05);
        assert_eq!(e.verdict, Verdict::Pass);
        assert!((e.measured - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_map_mu_is_closed_form() {
        let (a, b) = (1.7, 0.6);
        let mut t = TracerGrid::block(9, 0.05);
        t.apply_map(|z| C64::new(a * z.re, b * z.im));
        let f = beltrami(&t).unwrap();
        for m in &f.mu {
            assert!((m - (a - b) / (a + b)).norm() < 1e-12);
        }
        for j in &f.jacobian {
            assert!((j - a * b).abs() < 1e-12);
        }
    }

    #[test]
    fn beltrami_differences_converge_at_second_order() {
        // ∂X = 1 + 0.6 z, ∂̄X = 0.6 z̄²
        let map = |z: C64| z + 0.3 * z * z + 0.2 * z.conj() * z.conj() * z.conj();
        let shift = C64::new(0.3, 0.2);
        let mut errs = Vec::new();
        for s in [0.04, 0.02, 0.01] {
            let mut t = TracerGrid::block(3, s);
            t.apply_map(|z| map(z + shift));
            let f = beltrami(&t).unwrap();
            let z = shift;
            let ex = 0.6 * z.conj() * z.conj() / (1.0 + 0.6 * z);
            errs.push((f.mu[0] - ex).norm());
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn degenerate_derivative_is_an_error() {
        let mut t = TracerGrid::block(5, 0.1);
        t.apply_map(|z| C64::new(z.re * z.re, 0.0) * 0.0);
        assert!(matches!(beltrami(&t), Err(crate::Error::DegenerateDerivative { .. })));
    }

    #[test]
    fn quasisymmetry_of_identity_and_linear_maps() {
        let mut t = TracerGrid::block(15, 0.1);
        let n = t.len();
        let triples: Vec<_> = (0..100).map(|k| (k % n, (k * 7 + 3) % n, (k * 13 + 5) % n)).collect();
        let c = quasisymmetry_constant(&t.initial, &t.current, &triples, 1.0).unwrap();
        assert!((c - 1.0).abs() < 1e-12);

        let (a, b) = (2.0, 0.8);
        t.apply_map(|z| C64::new(a * z.re, b * z.im));
        let c = quasisymmetry_constant(&t.initial, &t.current, &triples, a / b).unwrap();
        assert!(c <= 10.0, "{c}");
    }

    #[test]
    fn tolerance_monotonicity() {
        let (a, b) = (1.3, 0.8);
        let mut t = TracerGrid::block(9, 0.05);
        t.apply_map(|z| C64::new(a * z.re, b * z.im));
        let f = beltrami(&t).unwrap();
        let omega_ref = vec![1.0; f.len()];
        let mut passed = false;
        for tol in [0.0, 0.01, 0.1, 0.5, 1.0, 5.0] {
            let p = pointwise_bound_check(&f, 0.4, &omega_ref, tol, 0.0).passed();
            assert!(!passed || p);
            passed = p;
        }
        assert!(passed);
        let mut passed = false;
        for tol in [0.0, 0.01, 0.1, 0.5, 1.0, 5.0] {
            let d = distortion_check(&f, 0.2, 1.0, tol).passed();
            assert!(!passed || d);
            passed = d;
        }
        assert!(passed);
    }
}
