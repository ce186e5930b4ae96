//! C ABI over the eoda toolkit.
//!
//! Every fallible function returns an [`EodaStatus`]; on failure a message is
//! available from [`eoda_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with [`eoda_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use eoda::encoding::{canonicalize_krk, JobShopInstance, JobShopSchedule, KrkPosition};
use eoda::eods::{run_eods, EodsConfig, EodsTrace};
use eoda::oracles::jobshop::validate_instance_json;
use eoda::oracles::{jobshop_cost, makespan_lower_bound, Cost, KrkTablebase};
use eoda::problem::{Domain, Problem};
use eoda::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EodaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInstance = 3,
    Config = 4,
    Io = 5,
    Runtime = 6,
    Panic = 7,
}

/// Depth reported by [`eoda_krk_cost`] for drawn positions.
pub const EODA_KRK_DRAW: i32 = -1;

/// A loaded or freshly built KRK tablebase.
pub struct EodaTablebase(Arc<KrkTablebase>);

/// A job-shop problem instance.
pub struct EodaJobShop(JobShopInstance);

/// The per-iteration record of a finished optimisation run.
pub struct EodaTrace(EodsTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(EodaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Validation(_) | Error::Decode(_) => EodaStatus::InvalidInstance,
            Error::Dimension(_) | Error::DomainMismatch { .. } => EodaStatus::InvalidArgument,
            Error::Config { .. } | Error::Json(_) => EodaStatus::Config,
            Error::Io(_) | Error::Corrupt(_) => EodaStatus::Io,
            Error::NonFinite { .. } | Error::AlignmentExhausted { .. } | Error::Empty(_) => EodaStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: EodaStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EodaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EodaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EodaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(EodaStatus::NullPointer, format!("{name} is null")),
    }
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    match p.as_mut() {
        Some(r) => Ok(r),
        None => fail(EodaStatus::NullPointer, format!("{name} is null")),
    }
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(EodaStatus::NullPointer, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(EodaStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .or_else(|_| fail(EodaStatus::Runtime, "string contains a nul byte"))
}

unsafe fn read_position(squares: *const u8) -> Result<KrkPosition, Failure> {
    if squares.is_null() {
        return fail(EodaStatus::NullPointer, "squares is null");
    }
    let s = std::slice::from_raw_parts(squares, 6);
    let pos = KrkPosition::from_tuple([s[0], s[1], s[2], s[3], s[4], s[5]]);
    pos.validate()?;
    Ok(pos)
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn eoda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next library call on this thread.
#[no_mangle]
pub extern "C" fn eoda_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn eoda_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the tablebase by retrograde analysis.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_tablebase_build(out: *mut *mut EodaTablebase) -> EodaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(EodaTablebase(Arc::new(KrkTablebase::build()))));
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_tablebase_load(path: *const c_char, out: *mut *mut EodaTablebase) -> EodaStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let out = out_ptr(out, "out")?;
        let tb = KrkTablebase::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(EodaTablebase(Arc::new(tb))));
        Ok(())
    })
}

/// # Safety
/// `tb` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn eoda_tablebase_save(tb: *const EodaTablebase, path: *const c_char) -> EodaStatus {
    guard(|| {
        let tb = deref(tb, "tb")?;
        tb.0.save(Path::new(c_str(path, "path")?))?;
        Ok(())
    })
}

/// Number of stored canonical positions; 0 for null.
///
/// # Safety
/// `tb` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eoda_tablebase_len(tb: *const EodaTablebase) -> usize {
    tb.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `tb` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoda_tablebase_free(tb: *mut EodaTablebase) {
    if !tb.is_null() {
        drop(Box::from_raw(tb));
    }
}

/// Depth-to-mate of a position with Black to move. `squares` holds six
/// 0-based coordinates: white king file and rank, white rook file and rank,
/// black king file and rank. Draws report [`EODA_KRK_DRAW`].
///
/// # Safety
/// `squares` must point to 6 bytes; `tb` and `out_depth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eoda_krk_cost(
    tb: *const EodaTablebase,
    squares: *const u8,
    out_depth: *mut i32,
) -> EodaStatus {
    guard(|| {
        let tb = deref(tb, "tb")?;
        let pos = read_position(squares)?;
        let out = out_ptr(out_depth, "out_depth")?;
        *out = match tb.0.cost(&pos)? {
            Cost::Value(d) => d as i32,
            Cost::Draw => EODA_KRK_DRAW,
            Cost::Infeasible(_) => return fail(EodaStatus::Runtime, "unexpected infeasible chess cost"),
        };
        Ok(())
    })
}

/// Writes the symmetry-canonical form of a legal position to `out`.
///
/// # Safety
/// `squares` and `out` must each point to 6 bytes.
#[no_mangle]
pub unsafe extern "C" fn eoda_krk_canonicalize(squares: *const u8, out: *mut u8) -> EodaStatus {
    guard(|| {
        let pos = read_position(squares)?;
        if out.is_null() {
            return fail(EodaStatus::NullPointer, "out is null");
        }
        let c = canonicalize_krk(&pos)?.to_tuple();
        std::slice::from_raw_parts_mut(out, 6).copy_from_slice(&c);
        Ok(())
    })
}

/// The frozen 5x5 benchmark instance.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_jobshop_benchmark(out: *mut *mut EodaJobShop) -> EodaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(EodaJobShop(JobShopInstance::benchmark())));
        Ok(())
    })
}

/// Parses an instance from JSON `{"routings": [[..]], "durations": [[..]]}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_jobshop_from_json(json: *const c_char, out: *mut *mut EodaJobShop) -> EodaStatus {
    guard(|| {
        let json = c_str(json, "json")?;
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(EodaJobShop(validate_instance_json(json)?)));
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoda_jobshop_free(inst: *mut EodaJobShop) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eoda_jobshop_dims(
    inst: *const EodaJobShop,
    out_jobs: *mut usize,
    out_machines: *mut usize,
) -> EodaStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        *out_ptr(out_jobs, "out_jobs")? = inst.0.n_jobs();
        *out_ptr(out_machines, "out_machines")? = inst.0.n_machines();
        Ok(())
    })
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eoda_jobshop_lower_bound(inst: *const EodaJobShop, out: *mut u32) -> EodaStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        *out_ptr(out, "out")? = makespan_lower_bound(&inst.0);
        Ok(())
    })
}

/// Makespan of a schedule given as machine-major job orders: `orders[m * n_jobs + i]`
/// is the `i`-th job processed on machine `m`. Deadlocked schedules set
/// `*out_feasible` to false and report the infeasibility sentinel.
///
/// # Safety
/// `orders` must point to `len` values; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eoda_jobshop_cost(
    inst: *const EodaJobShop,
    orders: *const u32,
    len: usize,
    out_makespan: *mut u32,
    out_feasible: *mut bool,
) -> EodaStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        if orders.is_null() {
            return fail(EodaStatus::NullPointer, "orders is null");
        }
        let (n, m) = (inst.0.n_jobs(), inst.0.n_machines());
        if len != n * m {
            return fail(EodaStatus::InvalidArgument, format!("expected {} order entries, got {len}", n * m));
        }
        let flat = std::slice::from_raw_parts(orders, len);
        let schedule = JobShopSchedule {
            machine_orders: flat.chunks(n).map(|c| c.iter().map(|&j| j as usize).collect()).collect(),
        };
        let (v, ok) = match jobshop_cost(&inst.0, &schedule)? {
            Cost::Value(v) => (v, true),
            Cost::Infeasible(v) => (v, false),
            Cost::Draw => return fail(EodaStatus::Runtime, "unexpected draw in job-shop cost"),
        };
        *out_ptr(out_makespan, "out_makespan")? = v;
        *out_ptr(out_feasible, "out_feasible")? = ok;
        Ok(())
    })
}

/// Runs the optimiser with a JSON configuration (the same keys as the CLI
/// config file). Chess runs need `tb`; job-shop runs use `inst`, or the
/// benchmark instance when it is null.
///
/// # Safety
/// `config_json` must be a nul-terminated string; `tb` and `inst` null or
/// live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_run(
    config_json: *const c_char,
    tb: *const EodaTablebase,
    inst: *const EodaJobShop,
    out: *mut *mut EodaTrace,
) -> EodaStatus {
    guard(|| {
        let json = c_str(config_json, "config_json")?;
        let out = out_ptr(out, "out")?;
        let cfg: EodsConfig = serde_json::from_str(json).map_err(Error::from)?;
        let problem = match cfg.domain {
            Domain::Chess => match tb.as_ref() {
                Some(t) => Problem::chess(Arc::clone(&t.0)),
                None => return fail(EodaStatus::NullPointer, "chess runs need a tablebase"),
            },
            Domain::Jobshop => {
                let instance = inst.as_ref().map_or_else(JobShopInstance::benchmark, |i| i.0.clone());
                Problem::jobshop(instance)?
            }
        };
        let (trace, _model) = run_eods(&cfg, &problem)?;
        *out = Box::into_raw(Box::new(EodaTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoda_trace_free(trace: *mut EodaTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of iterations; 0 for null.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eoda_trace_iterations(trace: *const EodaTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.iterations.len())
}

/// Near-optimal instances covered by the end of the run.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eoda_trace_final_coverage(trace: *const EodaTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.final_coverage())
}

/// The per-iteration CSV, identical to the CLI's trace CSV.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_trace_csv(trace: *const EodaTrace, out: *mut *mut c_char) -> EodaStatus {
    guard(|| {
        let trace = deref(trace, "trace")?;
        *out_ptr(out, "out")? = into_c_string(trace.0.to_csv())?;
        Ok(())
    })
}

/// The full trace as JSON.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eoda_trace_json(trace: *const EodaTrace, out: *mut *mut c_char) -> EodaStatus {
    guard(|| {
        let trace = deref(trace, "trace")?;
        let json = serde_json::to_string(&trace.0).map_err(Error::from)?;
        *out_ptr(out, "out")? = into_c_string(json)?;
        Ok(())
    })
}
