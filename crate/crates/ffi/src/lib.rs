//! C ABI over the `ris-eem` optimizer.
//!
//! Objects are opaque handles returned through out-pointers and
//! released with the matching `ris_*_free`. Every call returns a
//! [`RisStatus`]; on failure [`ris_last_error_message`] describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ris_eem::channel::ChannelSet;
use ris_eem::config::{dbm_to_w, load_config, SystemConfig};
use ris_eem::eem::{init_random_phase, run_eem, EEReport};
use ris_eem::harness::{run_scheme, Scheme};
use ris_eem::phase::PhaseConfig;
use ris_eem::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    Dimension = 3,
    Numerical = 4,
    NonConvergence = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// System configuration handle.
pub struct RisConfig(SystemConfig);

/// Channel draw handle.
pub struct RisChannels(ChannelSet);

/// Optimization result handle.
pub struct RisReport(EEReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RisStatus {
    match e {
        Error::InvalidConfig(_) | Error::InfeasibleBudget(_) => RisStatus::InvalidConfig,
        Error::Dimension(_) | Error::BlockMismatch { .. } => RisStatus::Dimension,
        Error::NonConvergence { .. } => RisStatus::NonConvergence,
        Error::Io(_) => RisStatus::InvalidArgument,
        _ => RisStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RisStatus, String)>) -> RisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RisStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RisStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RisStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RisStatus, String) {
    (RisStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RisStatus, String)> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (RisStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (RisStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| (RisStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn ris_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default deployment.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_config_default(out: *mut *mut RisConfig) -> RisStatus {
    guard(|| unsafe { write_out(out, Box::into_raw(Box::new(RisConfig(SystemConfig::default())))) })
}

/// Configuration from a JSON document with unit-suffixed keys.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_config_from_json(json: *const c_char, out: *mut *mut RisConfig) -> RisStatus {
    guard(|| unsafe {
        let text = c_str(json, "json")?;
        let cfg = load_config(text).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(RisConfig(cfg))))
    })
}

/// Per-BS transmit budget in dBm.
///
/// # Safety
/// `config` must come from a constructor above and not be freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_config_set_pt_dbm(config: *mut RisConfig, dbm: f64) -> RisStatus {
    guard(|| unsafe {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        let mut next = cfg.0.clone();
        next.pt_w = dbm_to_w(dbm);
        next.validate().map_err(lib_err)?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or an unfreed handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_config_free(config: *mut RisConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Channel draw for `seed`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_channels_generate(
    config: *const RisConfig,
    seed: u64,
    out: *mut *mut RisChannels,
) -> RisStatus {
    guard(|| unsafe {
        let cfg = borrow(config, "config")?;
        write_out(out, Box::into_raw(Box::new(RisChannels(ChannelSet::generate(&cfg.0, seed)))))
    })
}

/// # Safety
/// `channels` must be null or an unfreed handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_channels_free(channels: *mut RisChannels) {
    if !channels.is_null() {
        drop(unsafe { Box::from_raw(channels) });
    }
}

/// Alternating optimization from the random phase state drawn for `seed`.
///
/// # Safety
/// `config` and `channels` must be live handles; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_eem_run(
    config: *const RisConfig,
    channels: *const RisChannels,
    seed: u64,
    out: *mut *mut RisReport,
) -> RisStatus {
    guard(|| unsafe {
        let cfg = &borrow(config, "config")?.0;
        let ch = &borrow(channels, "channels")?.0;
        let q = if cfg.ris_elements() > 0 {
            init_random_phase(cfg, seed)
        } else {
            PhaseConfig::zeros(0, cfg.resolution)
        };
        let rep = run_eem(cfg, ch, &q).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(RisReport(rep))))
    })
}

/// # Safety
/// `report` must be null or an unfreed handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_report_free(report: *mut RisReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Final energy efficiency in bits/J.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_report_eta(report: *const RisReport, out: *mut f64) -> RisStatus {
    guard(|| unsafe { write_out(out, borrow(report, "report")?.0.final_eta) })
}

/// Final sum rate in bits/s/Hz.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_report_sum_rate(report: *const RisReport, out: *mut f64) -> RisStatus {
    guard(|| unsafe { write_out(out, borrow(report, "report")?.0.final_rates.sum) })
}

/// Number of outer iterations.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_report_iterations(report: *const RisReport, out: *mut usize) -> RisStatus {
    guard(|| unsafe { write_out(out, borrow(report, "report")?.0.iterations) })
}

/// Copy up to `capacity` trace values into `buf` and store the full trace
/// length in `len`. Passing a null `buf` with zero capacity queries the length.
///
/// # Safety
/// `buf` must hold `capacity` doubles unless `capacity` is zero; `len` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_report_copy_trace(
    report: *const RisReport,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> RisStatus {
    guard(|| unsafe {
        let trace = &borrow(report, "report")?.0.eta_trace;
        if capacity > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            let n = capacity.min(trace.len());
            ptr::copy_nonoverlapping(trace.as_ptr(), buf, n);
        }
        write_out(len, trace.len())
    })
}

/// Report as a JSON string, released with [`ris_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_report_to_json(report: *const RisReport, out: *mut *mut c_char) -> RisStatus {
    guard(|| unsafe {
        let rep = borrow(report, "report")?;
        let text = serde_json::to_string(&rep.0).map_err(|e| (RisStatus::Numerical, e.to_string()))?;
        let c = CString::new(text).map_err(|e| (RisStatus::Numerical, e.to_string()))?;
        write_out(out, c.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Final `eta` of one scheme (`proposed_ris`, `das`, `no_ris`,
/// `conventional_cellfree`) on the channel draw for `seed`.
///
/// # Safety
/// `config` must be a live handle, `scheme` NUL-terminated, `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ris_benchmark_eta(
    config: *const RisConfig,
    scheme: *const c_char,
    seed: u64,
    out: *mut f64,
) -> RisStatus {
    guard(|| unsafe {
        let cfg = borrow(config, "config")?;
        let scheme: Scheme = c_str(scheme, "scheme")?.parse().map_err(lib_err)?;
        let rep = run_scheme(scheme, &cfg.0, seed).map_err(lib_err)?;
        write_out(out, rep.final_eta)
    })
}
