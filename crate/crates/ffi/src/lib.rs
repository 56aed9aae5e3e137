//! C ABI over the loadsim pipeline.
//!
//! Every function returns a [`LoadsimStatus`]. On failure the message is kept
//! per thread and read with [`loadsim_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use loadsim::config::{Inputs, RunConfig};
use loadsim::simulation::SimulationOutput;
use loadsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Data = 6,
    LengthMismatch = 7,
    BufferTooSmall = 8,
    NotFound = 9,
    Panic = 99,
}

impl From<&Error> for LoadsimStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => LoadsimStatus::Io,
            Error::Parse { .. } | Error::Schema { .. } | Error::Csv(_) => LoadsimStatus::Parse,
            Error::Validation(_) | Error::UnknownBehavior(_) | Error::UnmappedCodes(_) => LoadsimStatus::Validation,
            Error::LengthMismatch { .. } | Error::Misaligned(_) | Error::MismatchedRuns(_) => {
                LoadsimStatus::LengthMismatch
            }
            _ => LoadsimStatus::Data,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: LoadsimStatus, message: &str) -> LoadsimStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> Result<(), LoadsimStatus>) -> LoadsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LoadsimStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(LoadsimStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> LoadsimStatus {
    fail(LoadsimStatus::from(&e), &e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, LoadsimStatus> {
    if p.is_null() {
        return Err(fail(LoadsimStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(LoadsimStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize) -> Result<&'a [f64], LoadsimStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LoadsimStatus::NullPointer, "null array argument"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `src` into `out` (capacity `cap`) and stores the full length in
/// `written`; a null `out` only queries the length.
unsafe fn copy_out(src: &[f64], out: *mut f64, cap: usize, written: *mut usize) -> Result<(), LoadsimStatus> {
    if !written.is_null() {
        *written = src.len();
    }
    if out.is_null() {
        return Ok(());
    }
    if cap < src.len() {
        return Err(fail(LoadsimStatus::BufferTooSmall, &format!("need {} values, buffer holds {cap}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn loadsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn loadsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque run configuration.
pub struct LoadsimConfig {
    inner: RunConfig,
}

/// Loads and validates a run configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn loadsim_config_load(path: *const c_char, out: *mut *mut LoadsimConfig) -> LoadsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(LoadsimStatus::NullPointer, "null output handle"));
        }
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path)?);
        let cfg = RunConfig::load(&path).map_err(lib_err)?;
        cfg.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LoadsimConfig { inner: cfg }));
        Ok(())
    })
}

/// Overrides the seed of a loaded configuration.
///
/// # Safety
/// `config` must come from [`loadsim_config_load`].
#[no_mangle]
pub unsafe extern "C" fn loadsim_config_set_seed(config: *mut LoadsimConfig, seed: u64) -> LoadsimStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null config"))?;
        cfg.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must come from [`loadsim_config_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn loadsim_config_free(config: *mut LoadsimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Opaque result of a simulation.
pub struct LoadsimRun {
    inner: SimulationOutput,
}

/// Runs the configured simulation.
///
/// # Safety
/// `config` must come from [`loadsim_config_load`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn loadsim_simulate(config: *const LoadsimConfig, out: *mut *mut LoadsimRun) -> LoadsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(LoadsimStatus::NullPointer, "null output handle"));
        }
        *out = ptr::null_mut();
        let cfg = &config.as_ref().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null config"))?.inner;
        let inputs = Inputs::load(cfg).map_err(lib_err)?;
        let run = inputs.run(cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LoadsimRun { inner: run }));
        Ok(())
    })
}

/// Simulated minutes and dwellings.
///
/// # Safety
/// `run` must come from [`loadsim_simulate`]; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn loadsim_run_shape(run: *const LoadsimRun, minutes: *mut u32, dwellings: *mut usize) -> LoadsimStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null run"))?.inner;
        if !minutes.is_null() {
            *minutes = r.minutes;
        }
        if !dwellings.is_null() {
            *dwellings = r.dwellings;
        }
        Ok(())
    })
}

/// Mean load per dwelling in W, one value per minute.
///
/// # Safety
/// `out` must hold `cap` doubles or be null; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn loadsim_run_load(
    run: *const LoadsimRun,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> LoadsimStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null run"))?.inner;
        copy_out(&r.mean_load, out, cap, written)
    })
}

/// Mean load of one appliance group (e.g. `cooking`, `dhw`).
///
/// # Safety
/// As [`loadsim_run_load`]; `group` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn loadsim_run_group_load(
    run: *const LoadsimRun,
    group: *const c_char,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> LoadsimStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null run"))?.inner;
        let name = str_arg(group)?;
        let g = r.group_index(name).ok_or_else(|| fail(LoadsimStatus::NotFound, &format!("no group `{name}`")))?;
        copy_out(&r.group_load[g], out, cap, written)
    })
}

/// Number of showers taken during the run.
///
/// # Safety
/// `run` must come from [`loadsim_simulate`]; `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn loadsim_run_shower_count(run: *const LoadsimRun, count: *mut usize) -> LoadsimStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null run"))?.inner;
        let c = count.as_mut().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null count"))?;
        *c = r.showers.len();
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`loadsim_simulate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn loadsim_run_free(run: *mut LoadsimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadsimMetricReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub wape: f64,
    pub mda: f64,
    pub frechet: f64,
}

/// All six metrics of `model` against `reference`, both of length `len`.
///
/// # Safety
/// Both arrays must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn loadsim_compare(
    model: *const f64,
    reference: *const f64,
    len: usize,
    out: *mut LoadsimMetricReport,
) -> LoadsimStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null report"))?;
        let r = loadsim::metrics::compare(slice_arg(model, len)?, slice_arg(reference, len)?).map_err(lib_err)?;
        *out = LoadsimMetricReport { mae: r.mae, rmse: r.rmse, mape: r.mape, wape: r.wape, mda: r.mda, frechet: r.frechet };
        Ok(())
    })
}

/// Discrete Fréchet distance between two series of different lengths.
///
/// # Safety
/// `a` holds `na` doubles, `b` holds `nb`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn loadsim_frechet(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut f64,
) -> LoadsimStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| fail(LoadsimStatus::NullPointer, "null result"))?;
        *out = loadsim::metrics::frechet_discrete(slice_arg(a, na)?, slice_arg(b, nb)?).map_err(lib_err)?;
        Ok(())
    })
}
