//! C ABI for the basemerge library.
//!
//! Every entry point returns a [`BmStatus`]; results travel through out
//! pointers. Handles (`BmNetwork`, `BmTimeseries`, `BmAnalysis`, `BmTrace`)
//! are opaque, created and destroyed only by this interface, and must not be
//! shared across a `*_free` call. A human-readable description of the most
//! recent failure on the calling thread is available from
//! [`bm_last_error_message`]. All functions catch panics and convert them to
//! `BM_STATUS_PANIC`, so unwinding never crosses the boundary.

use basemerge::io::casegen::{generate_case_study, CaseStudyConfig};
use basemerge::io::network::load_network;
use basemerge::io::pipeline::{analyze, run_strategy, Analysis};
use basemerge::io::timeseries::load_timeseries;
use basemerge::merging::{Cluster, ComEvaluator};
use basemerge::strategies::{
    bell_number, detect_adjacency, stirling2, AdjacencyMode, StrategyKind, StrategyTrace,
    DEFAULT_EXHAUSTIVE_CAP,
};
use basemerge::transport::{NetworkModel, TimestepData};
use basemerge::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Result codes of every `bm_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BmStatus {
    Ok = 0,
    /// a required pointer argument was null
    NullArgument = 1,
    /// a string argument was not valid UTF-8
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    /// a time step (or merged block) has no feasible solution
    Infeasible = 6,
    Unbounded = 7,
    SolverFailure = 8,
    /// exhaustive enumeration refused: too many bases
    CapExceeded = 9,
    UndefinedMetric = 10,
    ContractViolation = 11,
    IndexOutOfRange = 12,
    /// the caller's buffer is too small; the required size is reported
    BufferTooSmall = 13,
    /// an internal panic was caught at the boundary
    Panic = 14,
}

/// Merger-search strategies exposed through the C interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BmStrategy {
    Exhaustive = 0,
    Greedy = 1,
    GreedyAdjacent = 2,
}

/// Adjacency detection modes for the greedy-adjacent strategy.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BmAdjacency {
    InputSpace = 0,
    ActiveSet = 1,
}

/// Opaque network handle.
pub struct BmNetwork {
    inner: NetworkModel,
}

/// Opaque time-series handle.
pub struct BmTimeseries {
    inner: Vec<TimestepData>,
}

/// Opaque handle over a solved and grouped horizon.
pub struct BmAnalysis {
    inner: Analysis,
}

/// Opaque strategy-trace handle.
pub struct BmTrace {
    inner: StrategyTrace,
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

fn status_of(err: &Error) -> BmStatus {
    match err {
        Error::Validation(_) => BmStatus::Validation,
        Error::Parse { .. } => BmStatus::Parse,
        Error::Io { .. } => BmStatus::Io,
        Error::InfeasibleTimestep { .. } => BmStatus::Infeasible,
        Error::UnboundedTimestep { .. } => BmStatus::Unbounded,
        Error::SolverFailure(_) => BmStatus::SolverFailure,
        Error::CapExceeded { .. } => BmStatus::CapExceeded,
        Error::UndefinedMetric(_) => BmStatus::UndefinedMetric,
        Error::Contract(_) => BmStatus::ContractViolation,
    }
}

fn fail(err: &Error) -> BmStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guarded(f: impl FnOnce() -> BmStatus + std::panic::UnwindSafe) -> BmStatus {
    match catch_unwind(f) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            BmStatus::Panic
        }
    }
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, BmStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(BmStatus::NullArgument);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(BmStatus::InvalidUtf8)
        }
    }
}

fn write_string(text: &str, buf: *mut c_char, cap: usize, written: *mut usize) -> BmStatus {
    let needed = text.len() + 1;
    if !written.is_null() {
        unsafe { *written = needed };
    }
    if buf.is_null() {
        // size query
        return BmStatus::Ok;
    }
    if cap < needed {
        set_error("buffer too small");
        return BmStatus::BufferTooSmall;
    }
    unsafe {
        std::ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
    }
    BmStatus::Ok
}

macro_rules! out_ptr {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => {
                set_error("null out pointer");
                return BmStatus::NullArgument;
            }
        }
    };
}

macro_rules! handle {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(h) => h,
            None => {
                set_error("null handle");
                return BmStatus::NullArgument;
            }
        }
    };
}

/// Version of the underlying library, as a static string.
#[no_mangle]
pub extern "C" fn bm_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing `bm_*` call on the same thread.
#[no_mangle]
pub extern "C" fn bm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Load a network description from a JSON file.
///
/// # Safety
/// `path` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_network_load(
    path: *const c_char,
    out: *mut *mut BmNetwork,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_network(&path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BmNetwork { inner }));
                BmStatus::Ok
            }
            Err(e) => fail(&e),
        }
    }))
}

/// Load a time series from a CSV file.
///
/// # Safety
/// `path` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_timeseries_load(
    path: *const c_char,
    out: *mut *mut BmTimeseries,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_timeseries(&path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BmTimeseries { inner }));
                BmStatus::Ok
            }
            Err(e) => fail(&e),
        }
    }))
}

/// Generate the built-in synthetic case study.
///
/// # Safety
/// `out_net` and `out_ts` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_case_study_generate(
    weeks: u32,
    seed: u64,
    out_net: *mut *mut BmNetwork,
    out_ts: *mut *mut BmTimeseries,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out_net = out_ptr!(out_net);
        let out_ts = out_ptr!(out_ts);
        let cfg = CaseStudyConfig {
            weeks,
            seed,
            ..CaseStudyConfig::default()
        };
        match generate_case_study(&cfg) {
            Ok((net, steps)) => {
                *out_net = Box::into_raw(Box::new(BmNetwork { inner: net }));
                *out_ts = Box::into_raw(Box::new(BmTimeseries { inner: steps }));
                BmStatus::Ok
            }
            Err(e) => fail(&e),
        }
    }))
}

/// Solve every time step, group bases, and audit exactness.
///
/// # Safety
/// `net` and `ts` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_analyze(
    net: *const BmNetwork,
    ts: *const BmTimeseries,
    out: *mut *mut BmAnalysis,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let net = handle!(net);
        let ts = handle!(ts);
        match analyze(net.inner.clone(), ts.inner.clone()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BmAnalysis { inner }));
                BmStatus::Ok
            }
            Err(e) => fail(&e),
        }
    }))
}

/// Number of time steps behind an analysis (0 for a null handle).
#[no_mangle]
pub extern "C" fn bm_analysis_horizon(analysis: *const BmAnalysis) -> usize {
    unsafe { analysis.as_ref() }.map_or(0, |a| a.inner.bases.horizon)
}

/// Number of bases found (0 for a null handle).
#[no_mangle]
pub extern "C" fn bm_analysis_basis_count(analysis: *const BmAnalysis) -> usize {
    unsafe { analysis.as_ref() }.map_or(0, |a| a.inner.bases.n_bases())
}

/// Objective of the full per-time-step model.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_analysis_full_objective(
    analysis: *const BmAnalysis,
    out: *mut f64,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let a = handle!(analysis);
        *out = a.inner.full_objective;
        BmStatus::Ok
    }))
}

/// Objective of the aggregated (one block per basis) model.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_analysis_aggregated_objective(
    analysis: *const BmAnalysis,
    out: *mut f64,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let a = handle!(analysis);
        *out = a.inner.aggregated.objective;
        BmStatus::Ok
    }))
}

/// Whether the exactness audit passed.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_analysis_exactness_pass(
    analysis: *const BmAnalysis,
    out: *mut bool,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let a = handle!(analysis);
        *out = a.inner.exactness.pass;
        BmStatus::Ok
    }))
}

/// Weight (member count) of one basis, by zero-based index.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_analysis_basis_weight(
    analysis: *const BmAnalysis,
    index: usize,
    out: *mut u64,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let a = handle!(analysis);
        match a.inner.bases.groups.get(index) {
            Some(g) => {
                *out = g.weight as u64;
                BmStatus::Ok
            }
            None => {
                set_error("basis index out of range");
                BmStatus::IndexOutOfRange
            }
        }
    }))
}

/// Misclassification cost and host of merging two bases (zero-based), with
/// no re-solve.
///
/// # Safety
/// `analysis` must be a live handle; `out_com` and `out_host` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bm_analysis_pairwise_com(
    analysis: *const BmAnalysis,
    basis_a: usize,
    basis_b: usize,
    out_com: *mut f64,
    out_host: *mut usize,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out_com = out_ptr!(out_com);
        let out_host = out_ptr!(out_host);
        let a = handle!(analysis);
        let bs = &a.inner.bases;
        if basis_a >= bs.n_bases() || basis_b >= bs.n_bases() || basis_a == basis_b {
            set_error("basis pair out of range");
            return BmStatus::IndexOutOfRange;
        }
        match Cluster::from_ids(&[basis_a, basis_b], bs) {
            Ok(cluster) => {
                let eval = ComEvaluator::new(bs);
                let host = eval.host_for(&cluster.basis_ids);
                *out_com = host.com;
                *out_host = host.basis;
                BmStatus::Ok
            }
            Err(e) => fail(&e),
        }
    }))
}

/// Run a merger-search strategy down to `target_k` clusters.
/// `exhaustive_cap` of 0 means the built-in default.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_run_strategy(
    analysis: *const BmAnalysis,
    strategy: BmStrategy,
    target_k: usize,
    exhaustive_cap: usize,
    adjacency: BmAdjacency,
    out: *mut *mut BmTrace,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out = out_ptr!(out);
        let a = handle!(analysis);
        let cap = if exhaustive_cap == 0 {
            DEFAULT_EXHAUSTIVE_CAP
        } else {
            exhaustive_cap
        };
        let kind = match strategy {
            BmStrategy::Exhaustive => StrategyKind::Exhaustive,
            BmStrategy::Greedy => StrategyKind::Greedy,
            BmStrategy::GreedyAdjacent => StrategyKind::GreedyAdjacent,
        };
        let adjacency_list = if kind == StrategyKind::GreedyAdjacent {
            let mode = match adjacency {
                BmAdjacency::InputSpace => AdjacencyMode::InputSpace,
                BmAdjacency::ActiveSet => AdjacencyMode::ActiveSet,
            };
            Some(detect_adjacency(&a.inner.bases, &a.inner.rhs_by_t, mode).0)
        } else {
            None
        };
        match run_strategy(&a.inner, kind, target_k, cap, adjacency_list.as_ref()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BmTrace { inner }));
                BmStatus::Ok
            }
            Err(e) => fail(&e),
        }
    }))
}

/// Number of recorded levels in a trace (0 for a null handle).
#[no_mangle]
pub extern "C" fn bm_trace_level_count(trace: *const BmTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.inner.levels.len())
}

/// Cluster count, misclassification cost, and evaluated-merger count of one
/// trace level (zero-based, ordered from all-singletons downwards).
///
/// # Safety
/// `trace` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_trace_level(
    trace: *const BmTrace,
    index: usize,
    out_k: *mut usize,
    out_com: *mut f64,
    out_evaluated: *mut u64,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let out_k = out_ptr!(out_k);
        let out_com = out_ptr!(out_com);
        let out_evaluated = out_ptr!(out_evaluated);
        let t = handle!(trace);
        match t.inner.levels.get(index) {
            Some(level) => {
                *out_k = level.k;
                *out_com = level.com;
                *out_evaluated = level.evaluated;
                BmStatus::Ok
            }
            None => {
                set_error("level index out of range");
                BmStatus::IndexOutOfRange
            }
        }
    }))
}

/// Canonical text of one level's partition, e.g. `{1,2},{3}` (1-based ids).
/// Pass a null `buf` to query the required size through `written`.
///
/// # Safety
/// `trace` must be a live handle; `buf`/`written` follow the buffer contract.
#[no_mangle]
pub unsafe extern "C" fn bm_trace_partition(
    trace: *const BmTrace,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        let t = handle!(trace);
        match t.inner.levels.get(index) {
            Some(level) => write_string(&level.partition.display_one_based(), buf, cap, written),
            None => {
                set_error("level index out of range");
                BmStatus::IndexOutOfRange
            }
        }
    }))
}

/// Decimal string of the Bell number B_n.
///
/// # Safety
/// `buf`/`written` follow the buffer contract.
#[no_mangle]
pub unsafe extern "C" fn bm_bell_number(
    n: u32,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        write_string(&bell_number(n as usize).to_string(), buf, cap, written)
    }))
}

/// Decimal string of the Stirling number of the second kind S(n, k).
///
/// # Safety
/// `buf`/`written` follow the buffer contract.
#[no_mangle]
pub unsafe extern "C" fn bm_stirling2(
    n: u32,
    k: u32,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> BmStatus {
    guarded(AssertUnwindSafe(|| {
        write_string(
            &stirling2(n as usize, k as usize).to_string(),
            buf,
            cap,
            written,
        )
    }))
}

/// # Safety
/// `handle` must come from this interface and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_network_free(handle: *mut BmNetwork) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// # Safety
/// `handle` must come from this interface and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_timeseries_free(handle: *mut BmTimeseries) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// # Safety
/// `handle` must come from this interface and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_analysis_free(handle: *mut BmAnalysis) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// # Safety
/// `handle` must come from this interface and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_trace_free(handle: *mut BmTrace) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}
