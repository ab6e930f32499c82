use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[serde(alias = "cauchy_theta")]
    Cauchy,
    Euler,
}

/// Which convolution kernel defines the velocity law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Rotation angle in radians. Ignored for [`KernelKind::Euler`].
    pub theta: f64,
}

impl KernelSpec {
    pub fn cauchy(theta: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Cauchy,
            theta,
        }
    }

    pub fn euler() -> Self {
        KernelSpec {
            kind: KernelKind::Euler,
            theta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::Cauchy && !self.theta.is_finite() {
            return Err(Error::input(format!("kernel angle must be finite, got {}", self.theta)));
        }
        Ok(())
    }

    /// `e^{iθ}` for the Cauchy kernel.
    pub fn phase(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }

    pub fn is_euler(&self) -> bool {
        self.kind == KernelKind::Euler
    }

    /// Combine a raw Cauchy sum `Σ m_j k(z - z_j)` (with `k ≈ 1/w`) into a
    /// velocity. The Euler law uses the conjugate of the same sum.
    #[inline]
    pub(crate) fn finish_velocity(&self, raw: C64) -> C64 {
        match self.kind {
            KernelKind::Cauchy => self.phase() * raw / (2.0 * PI),
            KernelKind::Euler => C64::i() * raw.conj() / (2.0 * PI),
        }
    }
}

/// Evaluate the unregularized kernel at `z ≠ 0`.
pub fn eval_kernel(spec: KernelSpec, z: C64) -> Result<C64> {
    spec.validate()?;
    if z == C64::new(0.0, 0.0) {
        return Err(Error::Singular);
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::input("kernel argument must be finite"));
    }
    Ok(match spec.kind {
        KernelKind::Cauchy => spec.phase() / (2.0 * PI * z),
        KernelKind::Euler => C64::i() / (2.0 * PI * z.conj()),
    })
}

/// Core profile of a regularized blob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BlobShape {
    /// Uniform disk of radius δ: `1/w` is replaced by `w̄/δ²` inside the core.
    #[default]
    Rankine,
    /// Gaussian `e^{-|w|²/δ²} / (πδ²)`: `1/w` becomes `(1 - e^{-|w|²/δ²}) / w`.
    Gaussian,
}

/// Beyond `|w|² / δ² > GAUSS_CUTOFF` the Gaussian core factor is 1 to
/// machine precision.
const GAUSS_CUTOFF: f64 = 40.0;

/// Regularized point-source kernels for one blob shape and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobKernel {
    pub shape: BlobShape,
    pub radius: f64,
}

impl BlobKernel {
    pub fn new(shape: BlobShape, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::input(format!("blob radius must be > 0, got {radius}")));
        }
        Ok(BlobKernel { shape, radius })
    }

    pub fn rankine(radius: f64) -> Self {
        BlobKernel {
            shape: BlobShape::Rankine,
            radius,
        }
    }

    pub fn gaussian(radius: f64) -> Self {
        BlobKernel {
            shape: BlobShape::Gaussian,
            radius,
        }
    }

    /// Regularized `1/w` (the Cauchy transform of a unit-mass blob is this
    /// divided by π). Returns 0 at `w = 0`.
    #[inline]
    pub fn cauchy(&self, w: C64) -> C64 {
        let r2 = w.norm_sqr();
        if r2 == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let d2 = self.radius * self.radius;
        let inv = w.conj() / r2;
        match self.shape {
            BlobShape::Rankine => {
                if r2 < d2 {
                    w.conj() / d2
                } else {
                    inv
                }
            }
            BlobShape::Gaussian => {
                let s = r2 / d2;
                if s > GAUSS_CUTOFF {
                    inv
                } else {
                    inv * (-(-s).exp_m1())
                }
            }
        }
    }

    /// `∂` of [`BlobKernel::cauchy`]: the regularized `-1/w²`.
    #[inline]
    pub fn beurling(&self, w: C64) -> C64 {
        let r2 = w.norm_sqr();
        if r2 == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let d2 = self.radius * self.radius;
        let wc = w.conj();
        let inv2 = wc * wc / (r2 * r2);
        match self.shape {
            BlobShape::Rankine => {
                if r2 < d2 {
                    C64::new(0.0, 0.0)
                } else {
                    -inv2
                }
            }
            BlobShape::Gaussian => {
                let s = r2 / d2;
                if s > GAUSS_CUTOFF {
                    -inv2
                } else {
                    // 1 - (1 + s) e^{-s}, with a series near 0
                    let f = if s < 1e-3 {
                        s * s * (0.5 - s / 3.0 + s * s / 8.0)
                    } else {
                        -(-s).exp_m1() - s * (-s).exp()
                    };
                    -inv2 * f
                }
            }
        }
    }

    /// Density of a unit-mass blob at offset `w`.
    #[inline]
    pub fn density(&self, w: C64) -> f64 {
        let r2 = w.norm_sqr();
        let d2 = self.radius * self.radius;
        match self.shape {
            BlobShape::Rankine => {
                if r2 < d2 {
                    1.0 / (PI * d2)
                } else {
                    0.0
                }
            }
            BlobShape::Gaussian => {
                let s = r2 / d2;
                if s > GAUSS_CUTOFF {
                    0.0
                } else {
                    (-s).exp() / (PI * d2)
                }
            }
        }
    }

    /// Radius beyond which the blob density is zero (or negligible).
    pub fn reach(&self) -> f64 {
        match self.shape {
            BlobShape::Rankine => self.radius,
            BlobShape::Gaussian => self.radius * GAUSS_CUTOFF.sqrt(),
        }
    }
}
