//! C ABI over the marchetype toolkit.
//!
//! Objects cross the boundary as opaque handles (`MtLp`, `MtReport`) that the caller
//! frees with the matching `*_free` function. Every fallible call returns an
//! [`MtStatus`]; on failure `mt_last_error_message` describes the error on the
//! calling thread. Panics are caught and reported as `MT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use marchetype::model::{
    compile_interdependent, compile_ipwc, compile_spwc, constraint_count, ConstraintMenu, MenuShape,
    TargetingInstance,
};
use marchetype::oracle::{densify, simplex_solve, OracleStatus};
use marchetype::pdhg::{solve, SolveReport, SolveStatus, SolverConfig};
use marchetype::{Error, SparseMatrix, StandardLp};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    Parse = 4,
    Guard = 5,
    Numerical = 6,
    Infeasible = 7,
    Panic = 8,
}

/// Outcome of a PDHG solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtSolveStatus {
    Optimal = 0,
    IterationLimit = 1,
    NumericalFailure = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtCompileMode {
    Individual = 0,
    Segment = 1,
    Interdependent = 2,
}

/// Solver options. Start from `mt_solver_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MtSolverConfig {
    pub tolerance: f64,
    pub max_iterations: u64,
    pub restart: bool,
    pub rescale: bool,
    /// Adaptive steps and primal weight; `false` gives fixed steps from the average.
    pub adaptive: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MtConstraintCounts {
    pub volume1: u64,
    pub volume2: u64,
    pub similarity1: u64,
    pub similarity2: u64,
    pub targeting: u64,
    pub total: u64,
}

/// Opaque LP handle.
pub struct MtLp {
    lp: StandardLp,
}

/// Opaque solve report handle.
pub struct MtReport {
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MtStatus, String);

fn status_of(e: &Error) -> MtStatus {
    match e {
        Error::IndexOutOfRange { .. } | Error::DimensionMismatch { .. } => MtStatus::DimensionMismatch,
        Error::SizeGuard(_) => MtStatus::Guard,
        Error::NumericalBreakdown(_) => MtStatus::Numerical,
        Error::Mps { .. } | Error::Json(_) => MtStatus::Parse,
        _ => MtStatus::InvalidInput,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MtStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording failures and catching panics.
fn ffi_call(f: impl FnOnce() -> Result<(), Failure>) -> MtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MtStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {message}"));
            MtStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(MtStatus::Parse, format!("{what} is not UTF-8: {e}")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(MtStatus::Parse, format!("{what}: {e}")))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads an LP from its JSON triplet file contents.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mt_lp_from_json(json: *const c_char, out: *mut *mut MtLp) -> MtStatus {
    ffi_call(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let lp = StandardLp::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(MtLp { lp }));
        Ok(())
    })
}

/// Builds `min objective·x s.t. Ax ≤ rhs, 0 ≤ x ≤ 1` from `nnz` triplets.
///
/// # Safety
/// Array arguments must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mt_lp_from_triplets(
    n_rows: usize,
    n_cols: usize,
    rows: *const usize,
    cols: *const usize,
    values: *const f64,
    nnz: usize,
    objective: *const f64,
    rhs: *const f64,
    out: *mut *mut MtLp,
) -> MtStatus {
    ffi_call(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let rows = slice_arg(rows, nnz, "rows")?;
        let cols = slice_arg(cols, nnz, "cols")?;
        let values = slice_arg(values, nnz, "values")?;
        let triplets: Vec<(usize, usize, f64)> = (0..nnz).map(|k| (rows[k], cols[k], values[k])).collect();
        let matrix = SparseMatrix::from_triplets(n_rows, n_cols, &triplets)?;
        let lp = StandardLp::unlabeled(
            slice_arg(objective, n_cols, "objective")?.to_vec(),
            matrix,
            slice_arg(rhs, n_rows, "rhs")?.to_vec(),
        )?;
        *out = Box::into_raw(Box::new(MtLp { lp }));
        Ok(())
    })
}

/// Compiles a targeting instance and constraint menu (both JSON) into an LP.
/// `pair_profits_json` is read only in interdependent mode.
///
/// # Safety
/// String arguments must be NUL-terminated or null where allowed; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mt_compile(
    instance_json: *const c_char,
    menu_json: *const c_char,
    mode: MtCompileMode,
    pair_profits_json: *const c_char,
    out: *mut *mut MtLp,
) -> MtStatus {
    ffi_call(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let instance: TargetingInstance = parse_json(str_arg(instance_json, "instance_json")?, "instance")?;
        let menu: ConstraintMenu = parse_json(str_arg(menu_json, "menu_json")?, "menu")?;
        let lp = match mode {
            MtCompileMode::Individual => compile_ipwc(&instance, &menu)?,
            MtCompileMode::Segment => compile_spwc(&instance, &menu)?,
            MtCompileMode::Interdependent => {
                let pairs: Vec<Vec<Vec<f64>>> =
                    parse_json(str_arg(pair_profits_json, "pair_profits_json")?, "pair profits")?;
                compile_interdependent(&instance, &menu, &pairs)?
            }
        };
        *out = Box::into_raw(Box::new(MtLp { lp }));
        Ok(())
    })
}

/// # Safety
/// `lp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_lp_n_rows(lp: *const MtLp) -> usize {
    lp.as_ref().map_or(0, |h| h.lp.n_rows())
}

/// # Safety
/// `lp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_lp_n_cols(lp: *const MtLp) -> usize {
    lp.as_ref().map_or(0, |h| h.lp.n_cols())
}

/// # Safety
/// `lp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_lp_free(lp: *mut MtLp) {
    if !lp.is_null() {
        drop(Box::from_raw(lp));
    }
}

#[no_mangle]
pub extern "C" fn mt_solver_config_default() -> MtSolverConfig {
    let d = SolverConfig::default();
    MtSolverConfig {
        tolerance: d.tolerance,
        max_iterations: d.max_total_iterations as u64,
        restart: d.restart,
        rescale: d.rescale,
        adaptive: true,
    }
}

fn solver_config(c: &MtSolverConfig) -> Result<SolverConfig, Failure> {
    let base = if c.adaptive {
        SolverConfig::default()
    } else {
        SolverConfig::algorithm1()
    };
    let config = SolverConfig {
        tolerance: c.tolerance,
        max_total_iterations: usize::try_from(c.max_iterations).unwrap_or(usize::MAX),
        restart: c.restart,
        rescale: c.rescale,
        ..base
    };
    config.validate()?;
    Ok(config)
}

/// Solves with restarted PDHG. A report is produced whenever the call returns
/// `MT_STATUS_OK`, even if the solve stopped at the iteration limit.
///
/// # Safety
/// `lp` must be a live handle, `config` null (defaults) or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mt_solve(lp: *const MtLp, config: *const MtSolverConfig, out: *mut *mut MtReport) -> MtStatus {
    ffi_call(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let lp = lp.as_ref().ok_or_else(|| null("lp"))?;
        let config = solver_config(&config.as_ref().copied().unwrap_or_else(|| mt_solver_config_default()))?;
        let report = solve(&lp.lp, &config)?;
        *out = Box::into_raw(Box::new(MtReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_report_status(report: *const MtReport) -> MtSolveStatus {
    match report.as_ref().map(|r| r.report.status) {
        Some(SolveStatus::Optimal) => MtSolveStatus::Optimal,
        Some(SolveStatus::IterationLimit) => MtSolveStatus::IterationLimit,
        _ => MtSolveStatus::NumericalFailure,
    }
}

/// Primal objective; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_report_objective(report: *const MtReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.objective)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_report_iterations(report: *const MtReport) -> u64 {
    report.as_ref().map_or(0, |r| r.report.iterations as u64)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_report_restarts(report: *const MtReport) -> u64 {
    report.as_ref().map_or(0, |r| r.report.restarts as u64)
}

/// Relative primal residual, dual residual and duality gap. Any output may be null.
///
/// # Safety
/// `report` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mt_report_residuals(
    report: *const MtReport,
    primal: *mut f64,
    dual: *mut f64,
    gap: *mut f64,
) -> MtStatus {
    ffi_call(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        for (p, v) in [(primal, r.primal_residual), (dual, r.dual_residual), (gap, r.relative_gap)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_report_primal_len(report: *const MtReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.primal.len())
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_report_dual_len(report: *const MtReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.dual.len())
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize, what: &'static str) -> Result<(), Failure> {
    if len != src.len() {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: src.len(),
            actual: len,
        }
        .into());
    }
    if len > 0 {
        if dst.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    }
    Ok(())
}

/// Copies the primal solution into `out`, which must hold exactly `len` values.
///
/// # Safety
/// `report` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mt_report_copy_primal(report: *const MtReport, out: *mut f64, len: usize) -> MtStatus {
    ffi_call(|| copy_out(&report.as_ref().ok_or_else(|| null("report"))?.report.primal, out, len, "primal buffer"))
}

/// Copies the dual solution into `out`, which must hold exactly `len` values.
///
/// # Safety
/// `report` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mt_report_copy_dual(report: *const MtReport, out: *mut f64, len: usize) -> MtStatus {
    ffi_call(|| copy_out(&report.as_ref().ok_or_else(|| null("report"))?.report.dual, out, len, "dual buffer"))
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_report_free(report: *mut MtReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Solves exactly with the dense simplex. `x` must hold `len == n_cols` values or be
/// null with `len == 0`. Returns `MT_STATUS_GUARD` when the LP is too large.
///
/// # Safety
/// `lp` must be a live handle; `x` writable for `len` doubles; `objective` writable or null.
#[no_mangle]
pub unsafe extern "C" fn mt_oracle_solve(lp: *const MtLp, x: *mut f64, len: usize, objective: *mut f64) -> MtStatus {
    ffi_call(|| {
        let lp = lp.as_ref().ok_or_else(|| null("lp"))?;
        let solution = simplex_solve(&densify(&lp.lp)?)?;
        if solution.status == OracleStatus::Infeasible {
            return Err(Failure(MtStatus::Infeasible, "LP is infeasible".into()));
        }
        if len > 0 || !x.is_null() {
            copy_out(&solution.x, x, len, "oracle buffer")?;
        }
        if let Some(o) = objective.as_mut() {
            *o = solution.objective;
        }
        Ok(())
    })
}

/// Closed-form row counts for `k` segments, `j` actions and `i` customers.
/// `default_menu` selects one-sided Volume II and unordered pairs; otherwise every
/// family is two-sided over ordered pairs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mt_constraint_count(
    k: u64,
    j: u64,
    i: u64,
    default_menu: bool,
    out: *mut MtConstraintCounts,
) -> MtStatus {
    ffi_call(|| {
        let out = out_arg(out, "out")?;
        let shape = if default_menu {
            MenuShape::DEFAULT_MENU
        } else {
            MenuShape::FULL_ORDERED
        };
        let c = constraint_count(k, j, i, &shape);
        *out = MtConstraintCounts {
            volume1: c.volume1,
            volume2: c.volume2,
            similarity1: c.similarity1,
            similarity2: c.similarity2,
            targeting: c.targeting,
            total: c.total,
        };
        Ok(())
    })
}
