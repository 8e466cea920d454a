//! C ABI for the pathway-lasso library.
//!
//! The surface is a thin handle-based wrapper around the core crate: datasets
//! and fits live behind opaque pointers created and destroyed here, every
//! entry point returns a [`PlStatus`] code, and the message for the most
//! recent failure on the current thread is available through
//! [`pl_last_error_message`]. The build script regenerates
//! `include/pathlasso.h` with cbindgen.
//!
//! Conventions, mirroring the core crate:
//! - `pl_fit` standardizes the dataset internally (every column centered and
//!   scaled to unit variance); coefficients are reported on that scale.
//! - Mediator matrices cross the boundary in row-major order, one row per
//!   observation.
//! - Output buffers are caller-allocated; their required length is always
//!   the mediator count `K` unless documented otherwise.
//!
//! Every function is panic-safe: a panic inside the library is caught and
//! surfaced as [`PlStatus::Panic`] instead of unwinding across the ABI.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::{Array1, Array2};
use pathlasso::admm::{self, FitResult, SolverOptions};
use pathlasso::dataset::{standardize, MediationDataset};
use pathlasso::eval::select_pathways;
use pathlasso::model::PenaltySpec;
use pathlasso::Error;

/// Result code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The file could not be read or written.
    Io = 3,
    /// The file could be read but not parsed as a mediation dataset.
    Parse = 4,
    /// An argument failed validation (shape, range, or data contents).
    InvalidArgument = 5,
    /// A numeric routine failed (singular system, non-finite intermediate).
    Numeric = 6,
    /// The library panicked; treat the handle states as unchanged.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> PlStatus {
    match err {
        Error::Io(_) => PlStatus::Io,
        Error::Csv(_) | Error::Json(_) => PlStatus::Parse,
        Error::Numeric(_) | Error::DegenerateBootstrap { .. } => PlStatus::Numeric,
        _ => PlStatus::InvalidArgument,
    }
}

fn fail(err: &Error) -> PlStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Runs a closure with panics converted to [`PlStatus::Panic`].
fn guarded<F: FnOnce() -> PlStatus>(body: F) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PlStatus::Panic
        }
    }
}

/// An owned mediation dataset behind an opaque handle.
pub struct PlDataset {
    inner: MediationDataset,
}

/// A completed single-configuration fit behind an opaque handle.
pub struct PlFit {
    result: FitResult,
    k: usize,
}

/// Solver controls, mirroring the core defaults when obtained from
/// [`pl_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlSolverOptions {
    /// Hard iteration cap.
    pub max_iter: usize,
    /// Convergence threshold on the maximum primal residual.
    pub tol_primal: f64,
    /// Convergence threshold on the relative objective change.
    pub tol_change: f64,
    /// Augmented-Lagrangian parameter; fixed during a fit.
    pub rho: f64,
}

impl PlSolverOptions {
    fn to_core(self) -> SolverOptions {
        SolverOptions {
            max_iter: self.max_iter,
            tol_primal: self.tol_primal,
            tol_change: self.tol_change,
            rho: self.rho,
        }
    }
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the most recent error message on this thread into `buf`.
///
/// Returns the full message length in bytes (excluding the trailing NUL).
/// When `buf` is non-null and `cap > 0`, writes at most `cap - 1` bytes plus
/// a NUL terminator, truncating if needed — the snprintf contract. A return
/// value of zero means no error has been recorded yet.
///
/// # Safety
/// `buf` must either be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Reads a dataset from a CSV file laid out as `Z,M1..MK,R` with a header.
///
/// On success stores a new handle in `*out`; free it with
/// [`pl_dataset_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_dataset_read_csv(
    path: *const c_char,
    out: *mut *mut PlDataset,
) -> PlStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer argument");
            return PlStatus::NullArgument;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return PlStatus::InvalidUtf8;
            }
        };
        match MediationDataset::from_csv_path(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PlDataset { inner }));
                PlStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Builds a dataset from caller-provided arrays.
///
/// `z` and `r` have `n` entries; `m` has `n * k` entries in row-major order
/// (observation-major). The arrays are copied.
///
/// # Safety
/// The array pointers must be valid for the stated lengths and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_dataset_new(
    n: usize,
    k: usize,
    z: *const f64,
    m: *const f64,
    r: *const f64,
    out: *mut *mut PlDataset,
) -> PlStatus {
    guarded(|| {
        if z.is_null() || m.is_null() || r.is_null() || out.is_null() {
            set_error("null pointer argument");
            return PlStatus::NullArgument;
        }
        let z = Array1::from_vec(std::slice::from_raw_parts(z, n).to_vec());
        let r = Array1::from_vec(std::slice::from_raw_parts(r, n).to_vec());
        let m = std::slice::from_raw_parts(m, n.saturating_mul(k)).to_vec();
        let m = match Array2::from_shape_vec((n, k), m) {
            Ok(m) => m,
            Err(err) => {
                set_error(&err.to_string());
                return PlStatus::InvalidArgument;
            }
        };
        match MediationDataset::new(z, m, r, None) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PlDataset { inner }));
                PlStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pl_dataset_n(dataset: *const PlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n())
}

/// Number of mediators, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pl_dataset_k(dataset: *const PlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.k())
}

/// Frees a dataset handle. Null is a no-op.
///
/// # Safety
/// `dataset` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pl_dataset_free(dataset: *mut PlDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// The solver defaults: `max_iter = 10000`, `tol_primal = 1e-6`,
/// `tol_change = 1e-8`, `rho = 1`.
#[no_mangle]
pub extern "C" fn pl_solver_options_default() -> PlSolverOptions {
    let opts = SolverOptions::default();
    PlSolverOptions {
        max_iter: opts.max_iter,
        tol_primal: opts.tol_primal,
        tol_change: opts.tol_change,
        rho: opts.rho,
    }
}

/// Fits one penalty configuration and stores a new handle in `*out`.
///
/// The dataset is standardized internally; coefficients come back on the
/// standardized scale. `lambda` weighs the pathway-product penalty, `phi`
/// its convexity guard (must be ≥ 1/2), `omega` the plain lasso penalty.
/// A null `options` uses [`pl_solver_options_default`]. Free the handle
/// with [`pl_fit_free`].
///
/// # Safety
/// `dataset` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pl_fit(
    dataset: *const PlDataset,
    lambda: f64,
    phi: f64,
    omega: f64,
    options: *const PlSolverOptions,
    out: *mut *mut PlFit,
) -> PlStatus {
    guarded(|| {
        let Some(dataset) = dataset.as_ref() else {
            set_error("null dataset handle");
            return PlStatus::NullArgument;
        };
        if out.is_null() {
            set_error("null output pointer");
            return PlStatus::NullArgument;
        }
        let opts = options
            .as_ref()
            .map_or_else(SolverOptions::default, |o| o.to_core());
        let k = dataset.inner.k();
        let spec = PenaltySpec::with_unit_weights(k, lambda, phi, omega);
        let fitted = standardize(&dataset.inner)
            .and_then(|std| admm::fit(&std, &spec, &opts, None));
        match fitted {
            Ok(result) => {
                *out = Box::into_raw(Box::new(PlFit { result, k }));
                PlStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Frees a fit handle. Null is a no-op.
///
/// # Safety
/// `fit` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_free(fit: *mut PlFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Whether the solver met both tolerances within the iteration cap.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_converged(fit: *const PlFit) -> bool {
    fit.as_ref().is_some_and(|f| f.result.converged)
}

/// Iterations performed, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_iterations(fit: *const PlFit) -> usize {
    fit.as_ref().map_or(0, |f| f.result.iterations)
}

/// Final objective value, or NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_objective(fit: *const PlFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.result.objective)
}

/// The direct (treatment → outcome) effect `C`, or NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_direct_effect(fit: *const PlFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.result.coefs.c)
}

/// Mediator count of the fitted dataset, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_k(fit: *const PlFit) -> usize {
    fit.as_ref().map_or(0, |f| f.k)
}

unsafe fn copy_vector(
    fit: *const PlFit,
    buf: *mut f64,
    len: usize,
    pick: impl Fn(&PlFit) -> Array1<f64>,
) -> PlStatus {
    guarded(|| {
        let Some(fit) = fit.as_ref() else {
            set_error("null fit handle");
            return PlStatus::NullArgument;
        };
        if buf.is_null() {
            set_error("null buffer");
            return PlStatus::NullArgument;
        }
        if len != fit.k {
            set_error(&format!("buffer has {} entries, need {}", len, fit.k));
            return PlStatus::InvalidArgument;
        }
        let values = pick(fit);
        ptr::copy_nonoverlapping(values.as_slice().unwrap().as_ptr(), buf, fit.k);
        PlStatus::Ok
    })
}

/// Copies the treatment → mediator coefficients `A` into `buf` (length `K`).
///
/// # Safety
/// `fit` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_a(fit: *const PlFit, buf: *mut f64, len: usize) -> PlStatus {
    copy_vector(fit, buf, len, |f| f.result.coefs.a.clone())
}

/// Copies the mediator → outcome coefficients `B` into `buf` (length `K`).
///
/// # Safety
/// `fit` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_b(fit: *const PlFit, buf: *mut f64, len: usize) -> PlStatus {
    copy_vector(fit, buf, len, |f| f.result.coefs.b.clone())
}

/// Copies the per-pathway products `A_j B_j` into `buf` (length `K`).
///
/// # Safety
/// `fit` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_ab(fit: *const PlFit, buf: *mut f64, len: usize) -> PlStatus {
    copy_vector(fit, buf, len, |f| f.result.coefs.pathway_effects().0)
}

/// Selects pathways with `|A_j B_j| > cutoff` and reports their indices.
///
/// Always stores the selection size in `*count`. When `indices` is null the
/// call only counts; otherwise the buffer must hold at least `*count`
/// entries (`cap` of `K` is always enough) or the call fails with
/// `InvalidArgument` and writes nothing.
///
/// # Safety
/// `fit` must be a live handle, `count` valid, and `indices` null or valid
/// for `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn pl_fit_selected(
    fit: *const PlFit,
    cutoff: f64,
    indices: *mut usize,
    cap: usize,
    count: *mut usize,
) -> PlStatus {
    guarded(|| {
        let Some(fit) = fit.as_ref() else {
            set_error("null fit handle");
            return PlStatus::NullArgument;
        };
        if count.is_null() {
            set_error("null count pointer");
            return PlStatus::NullArgument;
        }
        if !(cutoff >= 0.0) {
            set_error("cutoff must be >= 0");
            return PlStatus::InvalidArgument;
        }
        let (ab, _) = fit.result.coefs.pathway_effects();
        let selection = select_pathways(&ab, cutoff);
        *count = selection.selected.len();
        if indices.is_null() {
            return PlStatus::Ok;
        }
        if cap < selection.selected.len() {
            set_error(&format!(
                "index buffer holds {} entries, selection has {}",
                cap,
                selection.selected.len()
            ));
            return PlStatus::InvalidArgument;
        }
        for (slot, &j) in selection.selected.iter().enumerate() {
            *indices.add(slot) = j;
        }
        PlStatus::Ok
    })
}
