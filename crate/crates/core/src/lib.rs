//! Active-scalar transport in the plane for velocity laws of the form
//! `v = K * ω`, with `K(z) = e^{iθ} / (2πz)` (Cauchy kernel) or the Euler
//! kernel `K(z) = i / (2π z̄)`, together with numerical diagnostics of the
//! quasiconformal flow maps these velocities generate.
//!
//! Module map:
//!
//! * [`complexfield`]: kernels, Cauchy and Beurling transforms of blob and
//!   grid fields, and the a-priori velocity bounds.
//! * [`vorticity`]: grids, blobs, mollification and norm tracking.
//! * [`dynamics`]: the self-consistent blob/tracer integrator.
//! * [`flowdiag`]: Beltrami coefficients and distortion checks on tracers.
//! * [`velform`]: the velocity/pressure-like formulation and its residuals.
//! * [`scenario`], [`report`], [`cli`]: configuration, reports and commands.

// `!(x > 0.0)` style guards reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod complexfield;
pub mod dynamics;
pub mod error;
pub mod flowdiag;
pub mod report;
pub mod scenario;
pub mod velform;
pub mod vorticity;

pub use error::{Error, Result};

/// Complex plane coordinate / complex value.
pub type C64 = num_complex::Complex64;
