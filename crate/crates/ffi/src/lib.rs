//! C ABI for qcflow.
//!
//! Objects are opaque handles created by `qcf_*_new`/`qcf_*_load` calls
//! and released by the matching `qcf_*_free`. Every fallible function
//! returns a [`QcfStatus`]; on failure the message is available from
//! [`qcf_last_error`] on the same thread. No function unwinds across the
//! boundary: panics are caught and reported as [`QcfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qcflow::complexfield::{velocity_direct, BlobKernel, BlobShape, BlobSources, Field, KernelSpec};
use qcflow::dynamics::{step, velocity_field, SimState, StepConfig};
use qcflow::report::DiagnosticsReport;
use qcflow::scenario::ScenarioConfig;
use qcflow::{Error, C64};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Singular = 4,
    Blowup = 5,
    Degenerate = 6,
    Memory = 7,
    Io = 8,
    /// The output buffer is too small; the required size was written.
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcfKernelKind {
    Cauchy = 0,
    Euler = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcfBlobShape {
    Rankine = 0,
    Gaussian = 1,
}

/// A parsed and validated scenario.
pub struct QcfScenario {
    config: ScenarioConfig,
}

/// A blob simulation built from a scenario's initial data.
pub struct QcfSimulation {
    state: SimState,
    step: StepConfig,
}

/// Diagnostics from a scenario run.
pub struct QcfReport {
    report: DiagnosticsReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut m = msg.into();
    m.retain(|c| c != '\0');
    let c = CString::new(m).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QcfStatus {
    match e {
        Error::Singular => QcfStatus::Singular,
        Error::Input(_) => QcfStatus::InvalidInput,
        Error::Blowup { .. } => QcfStatus::Blowup,
        Error::DegenerateDerivative { .. } => QcfStatus::Degenerate,
        Error::Config { .. } => QcfStatus::Config,
        Error::Memory { .. } => QcfStatus::Memory,
        Error::Io(_) | Error::Csv(_) => QcfStatus::Io,
    }
}

fn fail(e: Error) -> QcfStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

/// Run `f`, converting panics into [`QcfStatus::Panic`].
fn guard(f: impl FnOnce() -> QcfStatus) -> QcfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            QcfStatus::Panic
        }
    }
}

macro_rules! check_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return QcfStatus::NullPointer;
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qcf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn qcf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, QcfStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(QcfStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        QcfStatus::InvalidInput
    })
}

/// # Safety
/// `p` must point to `n` readable values, or `n` must be 0.
unsafe fn slice<'a, T>(p: *const T, n: usize) -> &'a [T] {
    if n == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(p, n)
    }
}

/// # Safety
/// `p` must point to `n` writable values, or `n` must be 0.
unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> &'a mut [T] {
    if n == 0 {
        &mut []
    } else {
        std::slice::from_raw_parts_mut(p, n)
    }
}

/// Parse a scenario from TOML text.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qcf_scenario_parse(text: *const c_char, out: *mut *mut QcfScenario) -> QcfStatus {
    guard(|| {
        check_null!(out);
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::parse(text) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(QcfScenario { config }));
                QcfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Load a scenario file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qcf_scenario_load(path: *const c_char, out: *mut *mut QcfScenario) -> QcfStatus {
    guard(|| {
        check_null!(out);
        let path = match str_arg(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::load(Path::new(path)) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(QcfScenario { config }));
                QcfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must be NULL or a handle from `qcf_scenario_parse`/`_load` that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn qcf_scenario_free(s: *mut QcfScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Run a scenario with all configured diagnostics. `out_dir` may be NULL
/// to skip writing checkpoints. A report is returned even when checks
/// fail; query it with `qcf_report_all_pass`.
///
/// # Safety
/// `scenario` must be a live handle, `out_dir` NULL or a valid string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qcf_run_scenario(
    scenario: *const QcfScenario,
    out_dir: *const c_char,
    out: *mut *mut QcfReport,
) -> QcfStatus {
    guard(|| {
        check_null!(scenario, out);
        let dir = if out_dir.is_null() {
            None
        } else {
            match str_arg(out_dir) {
                Ok(d) => Some(Path::new(d)),
                Err(s) => return s,
            }
        };
        if let Some(d) = dir {
            if let Err(e) = std::fs::create_dir_all(d) {
                return fail(e.into());
            }
        }
        match qcflow::cli::run_scenario(&(*scenario).config, dir) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(QcfReport { report }));
                QcfStatus::Ok
            }
            Err((_, e)) => fail(e),
        }
    })
}

/// 1 if every hard check passed, 0 otherwise (or for NULL).
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_report_all_pass(r: *const QcfReport) -> i32 {
    if r.is_null() {
        return 0;
    }
    i32::from((*r).report.all_hard_pass())
}

/// Number of report rows.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_report_len(r: *const QcfReport) -> usize {
    if r.is_null() {
        return 0;
    }
    (*r).report.entries.len()
}

/// Copy the report CSV (NUL-terminated) into `buf`. `needed` receives the
/// size including the terminator; pass `buf = NULL, len = 0` to query it.
///
/// # Safety
/// `r` must be a live handle, `buf` writable for `len` bytes (or NULL with
/// `len = 0`) and `needed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qcf_report_csv(r: *const QcfReport, buf: *mut c_char, len: usize, needed: *mut usize) -> QcfStatus {
    guard(|| {
        check_null!(r, needed);
        let csv = (*r).report.to_csv_string();
        *needed = csv.len() + 1;
        if buf.is_null() || len < csv.len() + 1 {
            set_error("buffer too small for report csv");
            return QcfStatus::BufferTooSmall;
        }
        let dst = slice_mut(buf.cast::<u8>(), len);
        dst[..csv.len()].copy_from_slice(csv.as_bytes());
        dst[csv.len()] = 0;
        QcfStatus::Ok
    })
}

/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_report_free(r: *mut QcfReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Build a simulation from the scenario's initial data and numerics,
/// without tracers.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_new(scenario: *const QcfScenario, out: *mut *mut QcfSimulation) -> QcfStatus {
    guard(|| {
        check_null!(scenario, out);
        let cfg = &(*scenario).config;
        match cfg.initial_grid() {
            Ok(grid) => {
                let sim = QcfSimulation {
                    state: SimState::from_grid(&grid, cfg.kernel_spec(), 0.0),
                    step: cfg.step_config(),
                };
                *out = Box::into_raw(Box::new(sim));
                QcfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Advance by `n` steps of the scenario's `dt`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_step(sim: *mut QcfSimulation, n: u64) -> QcfStatus {
    guard(|| {
        check_null!(sim);
        let s = &mut *sim;
        for _ in 0..n {
            match step(&s.state, &s.step) {
                Ok(next) => s.state = next,
                Err(e) => return fail(e),
            }
        }
        QcfStatus::Ok
    })
}

/// Current time, or NaN for NULL.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_time(sim: *const QcfSimulation) -> f64 {
    if sim.is_null() {
        return f64::NAN;
    }
    (*sim).state.t
}

/// Number of blobs, or 0 for NULL.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_blob_count(sim: *const QcfSimulation) -> usize {
    if sim.is_null() {
        return 0;
    }
    (*sim).state.blobs.len()
}

/// Copy blob positions and jacobians into caller arrays of length `n`,
/// which must equal `qcf_sim_blob_count`. `jac` may be NULL.
///
/// # Safety
/// `x`, `y` (and `jac` when non-NULL) must be writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_blobs(sim: *const QcfSimulation, x: *mut f64, y: *mut f64, jac: *mut f64, n: usize) -> QcfStatus {
    guard(|| {
        check_null!(sim, x, y);
        let blobs = &(*sim).state.blobs;
        if n != blobs.len() {
            set_error(format!("expected arrays of length {}, got {n}", blobs.len()));
            return QcfStatus::InvalidInput;
        }
        let (xs, ys) = (slice_mut(x, n), slice_mut(y, n));
        for (k, b) in blobs.iter().enumerate() {
            xs[k] = b.position.re;
            ys[k] = b.position.im;
        }
        if !jac.is_null() {
            for (j, b) in slice_mut(jac, n).iter_mut().zip(blobs) {
                *j = b.jacobian;
            }
        }
        QcfStatus::Ok
    })
}

/// Velocity of the current blob field at `n` targets.
///
/// # Safety
/// Input arrays must be readable and output arrays writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_velocity(
    sim: *const QcfSimulation,
    x: *const f64,
    y: *const f64,
    n: usize,
    u: *mut f64,
    v: *mut f64,
) -> QcfStatus {
    guard(|| {
        check_null!(sim, x, y, u, v);
        let s = &*sim;
        let targets: Vec<C64> = slice(x, n).iter().zip(slice(y, n)).map(|(a, b)| C64::new(*a, *b)).collect();
        match velocity_field(&s.state, s.step.blob_kernel(), &targets) {
            Ok(vel) => {
                write_complex(&vel, slice_mut(u, n), slice_mut(v, n));
                QcfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qcf_sim_free(sim: *mut QcfSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

fn write_complex(src: &[C64], re: &mut [f64], im: &mut [f64]) {
    for ((z, a), b) in src.iter().zip(re).zip(im) {
        *a = z.re;
        *b = z.im;
    }
}

/// Stateless velocity `Σ m_j K_δ(z - z_j)` of `nsrc` blobs at `ntgt`
/// targets. `theta` is ignored for the Euler kernel.
///
/// # Safety
/// Source arrays must be readable for `nsrc` values, target arrays for
/// `ntgt` values and output arrays writable for `ntgt` values.
#[no_mangle]
pub unsafe extern "C" fn qcf_blob_velocity(
    kind: QcfKernelKind,
    theta: f64,
    shape: QcfBlobShape,
    blob_radius: f64,
    sx: *const f64,
    sy: *const f64,
    mass: *const f64,
    nsrc: usize,
    tx: *const f64,
    ty: *const f64,
    ntgt: usize,
    u: *mut f64,
    v: *mut f64,
) -> QcfStatus {
    guard(|| {
        check_null!(sx, sy, mass, tx, ty, u, v);
        let spec = match kind {
            QcfKernelKind::Cauchy => KernelSpec::cauchy(theta),
            QcfKernelKind::Euler => KernelSpec::euler(),
        };
        let shape = match shape {
            QcfBlobShape::Rankine => BlobShape::Rankine,
            QcfBlobShape::Gaussian => BlobShape::Gaussian,
        };
        let blob = match BlobKernel::new(shape, blob_radius) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        let pos: Vec<C64> = slice(sx, nsrc).iter().zip(slice(sy, nsrc)).map(|(a, b)| C64::new(*a, *b)).collect();
        let targets: Vec<C64> = slice(tx, ntgt).iter().zip(slice(ty, ntgt)).map(|(a, b)| C64::new(*a, *b)).collect();
        let field = Field::Blobs(BlobSources {
            positions: &pos,
            masses: slice(mass, nsrc),
            kernel: blob,
        });
        match velocity_direct(&field, &targets, spec) {
            Ok(samples) => {
                let vel: Vec<C64> = samples.into_iter().map(|s| s.value).collect();
                write_complex(&vel, slice_mut(u, ntgt), slice_mut(v, ntgt));
                QcfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
