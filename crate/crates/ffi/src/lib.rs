//! C ABI for `jrcsim`.
//!
//! Conventions:
//!
//! - every fallible function returns a [`JrcStatus`]; on failure a message is
//!   available from [`jrc_last_error_message`] on the same thread;
//! - objects are opaque handles created by `*_new`/`*_load`/`*_run` and
//!   released by the matching `*_free`, which accepts NULL;
//! - strings are NUL-terminated UTF-8;
//! - panics never cross the boundary, they surface as `JRC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use jrcsim::config::RunConfig;
use jrcsim::estimator::Hypothesis;
use jrcsim::montecarlo::{roc_sweep, run_trial, write_roc_csv, RocSweep, TrialOptions};
use jrcsim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JrcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    Io = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Resolved run configuration.
pub struct JrcConfig {
    inner: RunConfig,
}

/// Result of a ROC sweep.
pub struct JrcRoc {
    sweep: RocSweep,
}

/// Outcome of a single trial.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JrcTrialResult {
    /// 1 if the pipeline completed, 0 otherwise.
    pub valid: u8,
    /// 1 if the echo really came from a physical target.
    pub truth_real: u8,
    /// 1 if `score > gamma` at the configured detector threshold.
    pub decided_real: u8,
    pub t_stat: f64,
    /// `t_stat / sigma2`, or `t_stat` when noiseless.
    pub score: f64,
    pub sigma2: f64,
    pub r0_hat_h0: f64,
    pub v_hat_h0: f64,
    pub f_cfo_hat_h0: f64,
    pub residual_h0: f64,
    pub r0_hat_h1: f64,
    pub v_hat_h1: f64,
    pub residual_h1: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JrcCurveInfo {
    pub snr_db: f64,
    pub genie: u8,
    pub n_points: usize,
    pub n_trials: usize,
    pub n_valid_h0: usize,
    pub n_valid_h1: usize,
    pub n_invalid: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JrcRocPoint {
    pub gamma: f64,
    pub p_fa: f64,
    pub p_d: f64,
    pub p_fa_lo: f64,
    pub p_fa_hi: f64,
    pub p_d_lo: f64,
    pub p_d_hi: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> JrcStatus {
    match err {
        Error::Config(_) | Error::Usage(_) | Error::Parse(_) => JrcStatus::Config,
        Error::Io(_) => JrcStatus::Io,
        _ => JrcStatus::Runtime,
    }
}

struct Fail(JrcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> JrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JrcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            JrcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(JrcStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(JrcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn jrc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn jrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn jrc_config_new_default(out: *mut *mut JrcConfig) -> JrcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(JrcConfig {
            inner: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Loads a TOML config or run manifest.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jrc_config_load(path: *const c_char, out: *mut *mut JrcConfig) -> JrcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_ptr(out, "out")?;
        let inner = RunConfig::load(Some(Path::new(path)), &[])?;
        *out = Box::into_raw(Box::new(JrcConfig { inner }));
        Ok(())
    })
}

/// Applies one `section.key=value` override. On failure the configuration
/// is left unchanged.
///
/// # Safety
/// `cfg` must be a live handle and `assignment` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn jrc_config_set(cfg: *mut JrcConfig, assignment: *const c_char) -> JrcStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "cfg")?;
        let assignment = str_arg(assignment, "assignment")?;
        cfg.inner = cfg.inner.with_override(assignment)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jrc_config_free(cfg: *mut JrcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured single-trial scenario. With `genie != 0` the
/// false-target fit uses the scenario's true CFO.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jrc_run_trial(cfg: *const JrcConfig, genie: u8, out: *mut JrcTrialResult) -> JrcStatus {
    guard(|| {
        let cfg = &handle(cfg, "cfg")?.inner;
        let out = out_ptr(out, "out")?;
        let ofdm = cfg.ofdm_config()?;
        let scenario = cfg.scenario()?;
        let mode = cfg.mode()?;
        let opts = if genie != 0 {
            TrialOptions::genie_for(&scenario, mode)
        } else {
            TrialOptions::estimated(mode)
        };
        let rec = run_trial(&ofdm, &scenario, &opts)?;
        let mut r = JrcTrialResult {
            valid: rec.is_valid() as u8,
            truth_real: (rec.truth == Hypothesis::H1RealTarget) as u8,
            sigma2: rec.sigma2,
            ..JrcTrialResult::default()
        };
        if let (Some(t), Some(s), Some(e0), Some(e1)) = (rec.t_stat, rec.score(), &rec.est0, &rec.est1) {
            r.t_stat = t;
            r.score = s;
            r.decided_real = (rec.decision(cfg.detector.gamma) == Some(Hypothesis::H1RealTarget)) as u8;
            r.r0_hat_h0 = e0.r0_hat;
            r.v_hat_h0 = e0.v_hat;
            r.f_cfo_hat_h0 = e0.f_cfo_hat.unwrap_or(f64::NAN);
            r.residual_h0 = e0.residual_norm;
            r.r0_hat_h1 = e1.r0_hat;
            r.v_hat_h1 = e1.v_hat;
            r.residual_h1 = e1.residual_norm;
        }
        *out = r;
        if let Some(e) = rec.error {
            set_error(e);
        }
        Ok(())
    })
}

/// Runs the configured ROC sweep on `workers` threads (0 = all cores).
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jrc_roc_run(cfg: *const JrcConfig, workers: usize, out: *mut *mut JrcRoc) -> JrcStatus {
    guard(|| {
        let cfg = &handle(cfg, "cfg")?.inner;
        let out = out_ptr(out, "out")?;
        let sweep = roc_sweep(&cfg.ofdm_config()?, &cfg.roc_request()?, workers)?;
        *out = Box::into_raw(Box::new(JrcRoc { sweep }));
        Ok(())
    })
}

/// Number of curves; 0 for NULL.
///
/// # Safety
/// `roc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jrc_roc_curve_count(roc: *const JrcRoc) -> usize {
    roc.as_ref().map_or(0, |r| r.sweep.curves.len())
}

/// # Safety
/// `roc` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jrc_roc_curve_info(roc: *const JrcRoc, curve: usize, out: *mut JrcCurveInfo) -> JrcStatus {
    guard(|| {
        let sweep = &handle(roc, "roc")?.sweep;
        let out = out_ptr(out, "out")?;
        let c = sweep
            .curves
            .get(curve)
            .ok_or_else(|| Fail(JrcStatus::OutOfRange, format!("curve {curve} of {}", sweep.curves.len())))?;
        *out = JrcCurveInfo {
            snr_db: c.snr_db,
            genie: c.genie as u8,
            n_points: c.points.len(),
            n_trials: c.n_trials,
            n_valid_h0: c.n_valid_h0,
            n_valid_h1: c.n_valid_h1,
            n_invalid: sweep.invalid[curve],
        };
        Ok(())
    })
}

/// # Safety
/// `roc` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jrc_roc_point(roc: *const JrcRoc, curve: usize, index: usize, out: *mut JrcRocPoint) -> JrcStatus {
    guard(|| {
        let sweep = &handle(roc, "roc")?.sweep;
        let out = out_ptr(out, "out")?;
        let p = sweep
            .curves
            .get(curve)
            .and_then(|c| c.points.get(index))
            .ok_or_else(|| Fail(JrcStatus::OutOfRange, format!("point ({curve}, {index}) does not exist")))?;
        *out = JrcRocPoint {
            gamma: p.gamma,
            p_fa: p.p_fa,
            p_d: p.p_d,
            p_fa_lo: p.p_fa_lo,
            p_fa_hi: p.p_fa_hi,
            p_d_lo: p.p_d_lo,
            p_d_hi: p.p_d_hi,
        };
        Ok(())
    })
}

/// Writes all curves in the ROC CSV schema.
///
/// # Safety
/// `roc` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn jrc_roc_write_csv(roc: *const JrcRoc, path: *const c_char) -> JrcStatus {
    guard(|| {
        let sweep = &handle(roc, "roc")?.sweep;
        let path = str_arg(path, "path")?;
        let file = std::fs::File::create(path).map_err(Error::from)?;
        write_roc_csv(&sweep.curves, std::io::BufWriter::new(file))?;
        Ok(())
    })
}

/// # Safety
/// `roc` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jrc_roc_free(roc: *mut JrcRoc) {
    if !roc.is_null() {
        drop(Box::from_raw(roc));
    }
}
