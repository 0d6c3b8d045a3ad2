//! C ABI for the alignment-dynamics laboratory: opaque config handles,
//! status codes mirroring the CLI exit codes, and array-based entry points
//! for the singular operators and the spectral gap.
//!
//! Conventions: functions returning `TfStatus` never unwind; on any status
//! other than `Ok` a thread-local message is retrievable through
//! `tf_last_error`. Strings returned as `char*` are owned by the caller and
//! must be released with `tf_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use topoflock::config::{parse_config_text, ExperimentConfig};
use topoflock::fields::{DensityField, Grid1D};
use topoflock::fourier::DerivativeMethod;
use topoflock::kernels::{CutoffShape, KernelFamily, KernelSpec};
use topoflock::nonlocal::{default_correction_radius, eval_commutator, eval_lphi};
use topoflock::runner::run_experiment;

/// Status codes; nonzero values match the CLI exit codes where applicable.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    ConfigError = 2,
    CheckFailure = 3,
    RuntimeAbort = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// Opaque experiment configuration.
pub struct TfConfig {
    inner: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn guard<F: FnOnce() -> TfStatus>(f: F) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TfStatus::Panic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, TfStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(TfStatus::InvalidArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        TfStatus::InvalidArgument
    })
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call.
#[no_mangle]
pub extern "C" fn tf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string allocated by this library.
///
/// # Safety
/// `s` must have been returned by a `tf_*` function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to a `TfConfig*` slot.
#[no_mangle]
pub unsafe extern "C" fn tf_config_default(out: *mut *mut TfConfig) -> TfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TfStatus::InvalidArgument;
        }
        let cfg = Box::new(TfConfig {
            inner: ExperimentConfig::default(),
        });
        *out = Box::into_raw(cfg);
        TfStatus::Ok
    })
}

/// Parse a configuration from `key = value` text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_config_parse_text(
    text: *const c_char,
    out: *mut *mut TfConfig,
) -> TfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TfStatus::InvalidArgument;
        }
        let text = match cstr(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config_text(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(TfConfig { inner }));
                TfStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::ConfigError
            }
        }
    })
}

/// Parse a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_config_parse_file(
    path: *const c_char,
    out: *mut *mut TfConfig,
) -> TfStatus {
    guard(|| {
        let path = match cstr(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                set_error(&format!("cannot read {path}: {e}"));
                return TfStatus::ConfigError;
            }
        };
        let c_text = CString::new(text).unwrap_or_default();
        tf_config_parse_text(c_text.as_ptr(), out)
    })
}

/// Override one key on an existing configuration, re-validating everything.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tf_config_set(
    cfg: *mut TfConfig,
    key: *const c_char,
    value: *const c_char,
) -> TfStatus {
    guard(|| {
        if cfg.is_null() {
            set_error("null config handle");
            return TfStatus::InvalidArgument;
        }
        let (key, value) = match (cstr(key), cstr(value)) {
            (Ok(k), Ok(v)) => (k, v),
            _ => return TfStatus::InvalidArgument,
        };
        let handle = &mut *cfg;
        let text = format!("{}{key} = {value}\n", handle.inner.to_text());
        match parse_config_text(&text) {
            Ok(inner) => {
                handle.inner = inner;
                TfStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::ConfigError
            }
        }
    })
}

/// Canonical text form of a configuration; free with `tf_string_free`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tf_config_to_text(cfg: *const TfConfig) -> *mut c_char {
    if cfg.is_null() {
        return ptr::null_mut();
    }
    let text = (*cfg).inner.to_text();
    CString::new(text).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Release a configuration handle.
///
/// # Safety
/// `cfg` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_config_free(cfg: *mut TfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the experiment described by the config. `out_dir` optionally
/// overrides the config's output directory; pass NULL to keep it.
///
/// # Safety
/// `cfg` must be a live handle; `out_dir` NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tf_run(cfg: *const TfConfig, out_dir: *const c_char) -> TfStatus {
    guard(|| {
        if cfg.is_null() {
            set_error("null config handle");
            return TfStatus::InvalidArgument;
        }
        let mut config = (*cfg).inner.clone();
        if !out_dir.is_null() {
            match cstr(out_dir) {
                Ok(d) => config.out_dir = d.to_string(),
                Err(s) => return s,
            }
        }
        match run_experiment(&config) {
            Ok(report) => {
                if report.runtime_abort() {
                    set_error(&report.termination.label());
                    TfStatus::RuntimeAbort
                } else if !report.all_checks_pass() {
                    let failed: Vec<String> = report
                        .checks
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| c.name.clone())
                        .collect();
                    set_error(&format!("failed checks: {}", failed.join(", ")));
                    TfStatus::CheckFailure
                } else {
                    TfStatus::Ok
                }
            }
            Err(topoflock::runner::RunError::Config(e)) => {
                set_error(&e.to_string());
                TfStatus::ConfigError
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::RuntimeAbort
            }
        }
    })
}

unsafe fn density_from_raw(
    n: usize,
    rho: *const f64,
    length: f64,
) -> Result<DensityField, TfStatus> {
    if rho.is_null() || n < 8 {
        set_error("need a non-null density with at least 8 samples");
        return Err(TfStatus::InvalidArgument);
    }
    let grid = Grid1D::new(n, length).map_err(|e| {
        set_error(&e.to_string());
        TfStatus::InvalidArgument
    })?;
    let values = std::slice::from_raw_parts(rho, n).to_vec();
    DensityField::new(grid, values).map_err(|e| {
        set_error(&e.to_string());
        TfStatus::InvalidArgument
    })
}

fn topological_spec(alpha: f64, tau: f64, r0: f64, length: f64) -> Result<KernelSpec, TfStatus> {
    KernelSpec::new(
        KernelFamily::Topological,
        alpha,
        tau,
        r0,
        CutoffShape::SmoothCos2,
        length,
    )
    .map_err(|e| {
        set_error(&e.to_string());
        TfStatus::InvalidArgument
    })
}

/// Apply the singular alignment operator to `f` on a periodic grid carrying
/// the density `rho` (topological kernel family, smooth cutoff). Writes n
/// values into `out`.
///
/// # Safety
/// `rho`, `f` and `out` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn tf_alignment_operator(
    n: usize,
    rho: *const f64,
    f: *const f64,
    length: f64,
    alpha: f64,
    tau: f64,
    r0: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        if f.is_null() || out.is_null() {
            set_error("null array argument");
            return TfStatus::InvalidArgument;
        }
        let density = match density_from_raw(n, rho, length) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let spec = match topological_spec(alpha, tau, r0, length) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let fv = std::slice::from_raw_parts(f, n);
        let r = default_correction_radius(&spec, density.grid().dx());
        match eval_lphi(fv, &density, &spec, r, DerivativeMethod::Spectral) {
            Ok(result) => {
                std::ptr::copy_nonoverlapping(result.values.as_ptr(), out, n);
                TfStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::InvalidArgument
            }
        }
    })
}

/// Density-weighted commutator of the alignment operator with `f`; the
/// source term of the momentum equation. Writes n values into `out`.
///
/// # Safety
/// `rho`, `f` and `out` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn tf_commutator(
    n: usize,
    rho: *const f64,
    f: *const f64,
    length: f64,
    alpha: f64,
    tau: f64,
    r0: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        if f.is_null() || out.is_null() {
            set_error("null array argument");
            return TfStatus::InvalidArgument;
        }
        let density = match density_from_raw(n, rho, length) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let spec = match topological_spec(alpha, tau, r0, length) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let fv = std::slice::from_raw_parts(f, n);
        let r = default_correction_radius(&spec, density.grid().dx());
        match eval_commutator(&density, fv, &spec, r, DerivativeMethod::Spectral) {
            Ok(result) => {
                std::ptr::copy_nonoverlapping(result.values.as_ptr(), out, n);
                TfStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::InvalidArgument
            }
        }
    })
}

/// Second-smallest eigenvalue of the density-weighted alignment form.
///
/// # Safety
/// `rho` must point to `n` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn tf_lambda2(
    n: usize,
    rho: *const f64,
    length: f64,
    alpha: f64,
    tau: f64,
    r0: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TfStatus::InvalidArgument;
        }
        let density = match density_from_raw(n, rho, length) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let spec = match topological_spec(alpha, tau, r0, length) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match topoflock::spectral::lambda2(&density, &spec) {
            Ok(report) => {
                *out = report.lambda2;
                TfStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::InvalidArgument
            }
        }
    })
}
