//! Convolution kernels and singular integral transforms.
//!
//! Two velocity laws are supported, selected by [`KernelSpec`]:
//!
//! * Cauchy: `K(z) = e^{iθ} / (2π z)`, so that `∂̄v = e^{iθ} ω / 2`;
//! * Euler: `K(z) = i / (2π z̄)`, the divergence-free Biot-Savart law.
//!
//! Fields are either blob sets (Lagrangian particles with a regularized
//! core) or uniform grids (piecewise constant cells). Every per-target sum
//! runs over sources in a fixed order with compensated accumulation, so
//! results do not depend on how targets are split across threads.

mod bounds;
mod cells;
mod kernel;
mod sum;
mod transform;

pub use bounds::{farfield_constant, farfield_constant_l1, linfty_bound, BoundMode, FieldStats, SHARP_LINF_CONSTANT};
pub use cells::{cell_beurling_integral, cell_cauchy_integral};
pub use kernel::{eval_kernel, BlobKernel, BlobShape, KernelKind, KernelSpec};
pub use sum::{CompensatedSum, ComplexSum};
pub use transform::{
    beurling_direct, blob_density, blob_velocity_and_divergence, divergence_of_velocity,
    velocity_direct, BlobSources, ComplexSample, Field, GridSources, SourceSet,
};
