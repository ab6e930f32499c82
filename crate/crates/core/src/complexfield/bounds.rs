use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// `√(2/π)`: the minimum over `R > 0` of `R·‖f‖∞ + ‖f‖₁/(2πR)` equals this
/// constant times `√(‖f‖₁‖f‖∞)`.
pub const SHARP_LINF_CONSTANT: f64 = 0.797_884_560_802_865_4;

/// Norms and support geometry of a scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldStats {
    pub l1: f64,
    pub linf: f64,
    pub support_area: f64,
    /// Radius of a disk around `support_center` containing the support.
    pub support_radius: f64,
    pub support_center: C64,
}

impl FieldStats {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l1", self.l1),
            ("linf", self.linf),
            ("support_area", self.support_area),
            ("support_radius", self.support_radius),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::input(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.support_center.re.is_finite() && self.support_center.im.is_finite()) {
            return Err(Error::input("support center must be finite"));
        }
        Ok(())
    }

    /// Hölder: `‖f‖₁ ≤ ‖f‖∞ · |supp f|`, up to relative rounding `rel`.
    pub fn holder_holds(&self, rel: f64) -> bool {
        self.l1 <= self.linf * self.support_area * (1.0 + rel) + f64::MIN_POSITIVE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    /// `C √(‖f‖₁ ‖f‖∞)`
    L1Linf,
    /// `C √|supp f| ‖f‖∞`
    SupportLinf,
}

/// Upper bound on `‖K∗f‖∞` for either kernel (`|K(z)| = 1/(2π|z|)`).
///
/// Split the integral at radius `R`: the inner disk contributes at most
/// `R‖f‖∞`, the outside at most `‖f‖₁/(2πR)`. The optimal `R` gives the
/// sharp constant [`SHARP_LINF_CONSTANT`]; the support form follows from
/// `‖f‖₁ ≤ |supp f| ‖f‖∞`.
pub fn linfty_bound(stats: &FieldStats, mode: BoundMode) -> Result<f64> {
    stats.validate()?;
    let v = match mode {
        BoundMode::L1Linf => (stats.l1 * stats.linf).sqrt(),
        BoundMode::SupportLinf => stats.support_area.sqrt() * stats.linf,
    };
    Ok(SHARP_LINF_CONSTANT * v)
}

/// Constant `C_∞` with `|x - c|·|K∗f(x)| ≤ C_∞` whenever `|x - c| > 2R`,
/// where `c`, `R` are the support center and radius.
///
/// For such `x`, `|x - y| ≥ |x - c| - R ≥ |x - c|/2` on the support, so
/// `|x - c|·|K∗f(x)| ≤ ‖f‖₁/π ≤ ‖f‖∞ R²`, i.e. `¼ ‖f‖∞ (2R)²`.
pub fn farfield_constant(stats: &FieldStats) -> Result<f64> {
    stats.validate()?;
    Ok(0.25 * stats.linf * (2.0 * stats.support_radius).powi(2))
}

/// The smaller `‖f‖₁/π` form of [`farfield_constant`], used when the L¹ norm
/// is known exactly.
pub fn farfield_constant_l1(stats: &FieldStats) -> Result<f64> {
    stats.validate()?;
    Ok(stats.l1 / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> FieldStats {
        FieldStats {
            l1: PI,
            linf: 1.0,
            support_area: PI,
            support_radius: 1.0,
            support_center: C64::new(0.0, 0.0),
        }
    }

    #[test]
    fn sharp_constant_value() {
        assert!((SHARP_LINF_CONSTANT - (2.0 / PI).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn constant_minimizes_split_estimate() {
        // golden-section search over R of R·linf + l1/(2πR)
        let (l1, linf) = (PI, 1.0);
        let f = |r: f64| r * linf + l1 / (2.0 * PI * r);
        let (mut a, mut b) = (1e-3, 10.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let min = f((a + b) / 2.0);
        let bound = linfty_bound(&disk(), BoundMode::L1Linf).unwrap();
        assert!((min - bound).abs() < 1e-12);
        assert!((bound - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trivial_and_support_bounds() {
        let zero = FieldStats {
            l1: 0.0,
            linf: 3.0,
            ..disk()
        };
        assert_eq!(linfty_bound(&zero, BoundMode::L1Linf).unwrap(), 0.0);
        let b = linfty_bound(&disk(), BoundMode::SupportLinf).unwrap();
        assert!((b - 2f64.sqrt()).abs() < 1e-12);
        assert!(farfield_constant(&disk()).unwrap() >= 0.5);
        assert_eq!(farfield_constant(&FieldStats::default()).unwrap(), 0.0);
    }

    #[test]
    fn negative_stats_rejected() {
        let bad = FieldStats {
            l1: -1.0,
            ..disk()
        };
        assert!(linfty_bound(&bad, BoundMode::L1Linf).is_err());
        assert!(farfield_constant(&bad).is_err());
    }
}
