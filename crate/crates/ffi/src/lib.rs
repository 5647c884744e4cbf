//! C ABI for the meshmac simulator.
//!
//! The surface follows the usual opaque-handle pattern: configurations and
//! result records live behind pointers that C code never dereferences, every
//! fallible call returns a [`MeshmacStatus`], and the most recent failure
//! message is kept per thread for [`meshmac_last_error`]. Panics inside the
//! library are caught at the boundary and reported as
//! `MeshmacStatus::Invariant` rather than unwinding into foreign frames.
//!
//! The committed header `include/meshmac.h` is generated from this file by
//! cbindgen during the build; regenerate it by building the crate.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use meshmac::config::{ScenarioConfig, ScenarioError};
use meshmac::metrics::{MetricsRecord, CSV_HEADER};
use meshmac::sim::contention::contention_time_probe;
use meshmac::sim::runner::{run_scenario, RunnerError};

// ---------------------------------------------------------------------------
// Status codes and error reporting
// ---------------------------------------------------------------------------

/// Result classes, aligned with the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshmacStatus {
    /// The call succeeded.
    Ok = 0,
    /// An internal invariant was violated (a bug, not a usage error).
    Invariant = 1,
    /// The configuration or an I/O operation was rejected.
    Config = 2,
    /// The topology is unusable: disconnected, unroutable, or uncolorable.
    Topology = 3,
    /// A pointer or string argument was null or malformed.
    Argument = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn status_of(e: &RunnerError) -> MeshmacStatus {
    match e {
        RunnerError::Scenario(_) | RunnerError::Manifest { .. } | RunnerError::Io { .. } => {
            MeshmacStatus::Config
        }
        RunnerError::Topology(_)
        | RunnerError::NoRoute { .. }
        | RunnerError::Coloring(_)
        | RunnerError::Baseline(_) => MeshmacStatus::Topology,
    }
}

/// Runs `f` with panics converted to `Invariant` and the fallback value.
fn guarded<T>(fallback: T, f: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("invariant violation: {msg}"));
            fallback
        }
    }
}

/// Last failure message of the calling thread.
///
/// The pointer stays valid until the next failing call on the same thread;
/// it is never null and points at an empty string when nothing failed yet.
#[no_mangle]
pub extern "C" fn meshmac_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---------------------------------------------------------------------------
// Static strings
// ---------------------------------------------------------------------------

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn meshmac_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap())
        .as_ptr()
}

/// The fixed CSV header matching [`meshmac_record_csv_row`]; static storage.
#[no_mangle]
pub extern "C" fn meshmac_csv_header() -> *const c_char {
    static HEADER: OnceLock<CString> = OnceLock::new();
    HEADER.get_or_init(|| CString::new(CSV_HEADER).unwrap()).as_ptr()
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have come from a meshmac function documented to transfer string
/// ownership, and must not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn meshmac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Configuration handles
// ---------------------------------------------------------------------------

/// Opaque scenario configuration handle.
pub struct MeshmacConfig {
    inner: ScenarioConfig,
}

/// Creates a configuration with library defaults. Never fails.
#[no_mangle]
pub extern "C" fn meshmac_config_new() -> *mut MeshmacConfig {
    Box::into_raw(Box::new(MeshmacConfig { inner: ScenarioConfig::default() }))
}

/// Loads a configuration file (`key = value` lines).
///
/// Returns null and sets the thread error on failure.
///
/// # Safety
/// `path` must be a valid null-terminated string.
#[no_mangle]
pub unsafe extern "C" fn meshmac_config_load(path: *const c_char) -> *mut MeshmacConfig {
    guarded(std::ptr::null_mut(), || {
        if path.is_null() {
            set_error("null path");
            return std::ptr::null_mut();
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return std::ptr::null_mut();
            }
        };
        match ScenarioConfig::load(std::path::Path::new(path)) {
            Ok(inner) => Box::into_raw(Box::new(MeshmacConfig { inner })),
            Err(ScenarioError::Io(e)) => {
                set_error(format!("{path}: {e}"));
                std::ptr::null_mut()
            }
            Err(e) => {
                set_error(e);
                std::ptr::null_mut()
            }
        }
    })
}

/// Applies one `key = value` assignment, exactly as a config file line would.
///
/// # Safety
/// `cfg` must be a live configuration handle; `key` and `value` must be
/// valid null-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn meshmac_config_set(
    cfg: *mut MeshmacConfig,
    key: *const c_char,
    value: *const c_char,
) -> MeshmacStatus {
    guarded(MeshmacStatus::Invariant, || {
        let Some(cfg) = cfg.as_mut() else {
            set_error("null config");
            return MeshmacStatus::Argument;
        };
        if key.is_null() || value.is_null() {
            set_error("null key or value");
            return MeshmacStatus::Argument;
        }
        let (key, value) = match (CStr::from_ptr(key).to_str(), CStr::from_ptr(value).to_str()) {
            (Ok(k), Ok(v)) => (k, v),
            _ => {
                set_error("key or value is not valid UTF-8");
                return MeshmacStatus::Argument;
            }
        };
        match cfg.inner.set(key.trim(), value.trim()) {
            Ok(()) => MeshmacStatus::Ok,
            Err(e) => {
                set_error(e);
                MeshmacStatus::Config
            }
        }
    })
}

/// Sets the master seed.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_config_seed(cfg: *mut MeshmacConfig, seed: u64) -> MeshmacStatus {
    match cfg.as_mut() {
        Some(cfg) => {
            cfg.inner.seed = seed;
            MeshmacStatus::Ok
        }
        None => {
            set_error("null config");
            MeshmacStatus::Argument
        }
    }
}

/// Releases a configuration handle. Null is ignored.
///
/// # Safety
/// `cfg` must have come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn meshmac_config_free(cfg: *mut MeshmacConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

// ---------------------------------------------------------------------------
// Runs and records
// ---------------------------------------------------------------------------

/// Opaque result record handle.
pub struct MeshmacRecord {
    inner: MetricsRecord,
}

/// Runs the configured scenario to completion.
///
/// Returns null and sets the thread error on failure; when `status` is
/// non-null it receives the result class either way. The same configuration
/// and seed always produce the same record.
///
/// # Safety
/// `cfg` must be a live configuration handle; `status` must be null or
/// point at writable storage for one `MeshmacStatus`.
#[no_mangle]
pub unsafe extern "C" fn meshmac_run(
    cfg: *const MeshmacConfig,
    status: *mut MeshmacStatus,
) -> *mut MeshmacRecord {
    let mut class = MeshmacStatus::Ok;
    let record = guarded(std::ptr::null_mut(), || match cfg.as_ref() {
        None => {
            set_error("null config");
            class = MeshmacStatus::Argument;
            std::ptr::null_mut()
        }
        Some(cfg) => match run_scenario(&cfg.inner) {
            Ok(inner) => Box::into_raw(Box::new(MeshmacRecord { inner })),
            Err(e) => {
                class = status_of(&e);
                set_error(e);
                std::ptr::null_mut()
            }
        },
    });
    if record.is_null() && class == MeshmacStatus::Ok {
        class = MeshmacStatus::Invariant; // the guarded closure panicked
    }
    if let Some(status) = status.as_mut() {
        *status = class;
    }
    record
}

/// Offered load in bits per second. NaN when `rec` is null.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_offered_bps(rec: *const MeshmacRecord) -> f64 {
    rec.as_ref().map_or(f64::NAN, |r| r.inner.offered_bps)
}

/// Delivered payload throughput in bits per second. NaN when `rec` is null.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_throughput_bps(rec: *const MeshmacRecord) -> f64 {
    rec.as_ref().map_or(f64::NAN, |r| r.inner.throughput_bps)
}

/// Packet loss rate in `[0, 1]`. NaN when `rec` is null.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_loss_rate(rec: *const MeshmacRecord) -> f64 {
    rec.as_ref().map_or(f64::NAN, |r| r.inner.loss_rate)
}

/// Jain fairness of per-channel delivered payload. NaN when `rec` is null.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_fairness(rec: *const MeshmacRecord) -> f64 {
    rec.as_ref().map_or(f64::NAN, |r| r.inner.fairness)
}

/// Total radio energy in joules. NaN when `rec` is null.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_energy_j(rec: *const MeshmacRecord) -> f64 {
    rec.as_ref().map_or(f64::NAN, |r| r.inner.energy_j)
}

/// Mean end-to-end delay in seconds; NaN when nothing was delivered.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_delay_s(rec: *const MeshmacRecord) -> f64 {
    match rec.as_ref() {
        Some(rec) => rec.inner.delay_s_mean.unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}

/// Final negotiation-window length in seconds; NaN when never reported.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_cna_final_s(rec: *const MeshmacRecord) -> f64 {
    match rec.as_ref() {
        Some(rec) => rec.inner.cna_final_s.unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}

/// Generated packet count (zero when `rec` is null).
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_generated(rec: *const MeshmacRecord) -> u64 {
    rec.as_ref().map_or(0, |r| r.inner.generated_packets)
}

/// Delivered packet count (zero when `rec` is null).
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_delivered(rec: *const MeshmacRecord) -> u64 {
    rec.as_ref().map_or(0, |r| r.inner.delivered_packets)
}

/// Dropped packet count (zero when `rec` is null).
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_dropped(rec: *const MeshmacRecord) -> u64 {
    rec.as_ref().map_or(0, |r| r.inner.dropped_packets)
}

/// Renders the record as one CSV row matching [`meshmac_csv_header`].
///
/// Returns an owned string — release it with [`meshmac_string_free`] — or
/// null when `rec` is null.
///
/// # Safety
/// `rec` must be a live record handle.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_csv_row(rec: *const MeshmacRecord) -> *mut c_char {
    guarded(std::ptr::null_mut(), || {
        let Some(rec) = rec.as_ref() else {
            set_error("null record");
            return std::ptr::null_mut();
        };
        match CString::new(rec.inner.to_csv_row()) {
            Ok(s) => s.into_raw(),
            Err(_) => {
                set_error("record contains an interior NUL");
                std::ptr::null_mut()
            }
        }
    })
}

/// Releases a record handle. Null is ignored.
///
/// # Safety
/// `rec` must have come from [`meshmac_run`] and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn meshmac_record_free(rec: *mut MeshmacRecord) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

// ---------------------------------------------------------------------------
// Contention probe
// ---------------------------------------------------------------------------

/// Plain result of the negotiation-contention probe.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MeshmacProbe {
    /// Contending sender-receiver pairs.
    pub pairs: u32,
    /// Beacon intervals measured.
    pub intervals: u32,
    /// Reservations that never completed.
    pub missing_reservations: u32,
    /// Mean time from beacon to reservation, across flows, seconds.
    pub mean_contention_s: f64,
    /// Mean time from beacon to the interval's last reservation, seconds.
    pub mean_makespan_s: f64,
}

/// Measures negotiation contention for `pairs` same-domain pairs.
///
/// # Safety
/// `out` must point at writable storage for one `MeshmacProbe`.
#[no_mangle]
pub unsafe extern "C" fn meshmac_contention_probe(
    pairs: u32,
    channels: u16,
    seed: u64,
    out: *mut MeshmacProbe,
) -> MeshmacStatus {
    guarded(MeshmacStatus::Invariant, || {
        let Some(out) = out.as_mut() else {
            set_error("null output pointer");
            return MeshmacStatus::Argument;
        };
        if pairs == 0 || channels == 0 {
            set_error("pairs and channels must be at least 1");
            return MeshmacStatus::Argument;
        }
        match contention_time_probe(pairs, channels, seed) {
            Ok(r) => {
                *out = MeshmacProbe {
                    pairs: r.pairs,
                    intervals: r.intervals,
                    missing_reservations: r.missing_reservations,
                    mean_contention_s: r.mean_contention_s,
                    mean_makespan_s: r.mean_makespan_s,
                };
                MeshmacStatus::Ok
            }
            Err(e) => {
                let status = status_of(&e);
                set_error(e);
                status
            }
        }
    })
}
