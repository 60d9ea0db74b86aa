//! C ABI for the paklo solver.
//!
//! Instances and reports are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PakloStatus`]; on failure a
//! message is available from [`paklo_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use paklo::matrix::{parse_matrix_market, SparseNonnegMatrix};
use paklo::{solve, Mode, ProblemInstance, SolveReport, SolverConfig};

pub const PAKLO_MODE_COVER: c_int = 0;
pub const PAKLO_MODE_PACK: c_int = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PakloStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Solver = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque problem instance.
pub struct PakloInstance {
    inner: ProblemInstance,
}

/// Opaque solve result.
pub struct PakloReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut s = msg.into();
    s.retain(|c| c != '\0');
    let c = CString::new(s).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PakloStatus, msg: impl Into<String>) -> PakloStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> PakloStatus) -> PakloStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PakloStatus::Panic, "internal panic"),
    }
}

fn mode_from(mode: c_int) -> Option<Mode> {
    match mode {
        PAKLO_MODE_COVER => Some(Mode::Cover),
        PAKLO_MODE_PACK => Some(Mode::Pack),
        _ => None,
    }
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next paklo call on this thread.
#[no_mangle]
pub extern "C" fn paklo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a Matrix Market coordinate document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn paklo_instance_from_mtx(
    text: *const c_char,
    mode: c_int,
    out: *mut *mut PakloInstance,
) -> PakloStatus {
    guarded(|| {
        if text.is_null() || out.is_null() {
            return fail(PakloStatus::NullPointer, "null argument");
        }
        let Some(mode) = mode_from(mode) else {
            return fail(PakloStatus::InvalidArgument, format!("unknown mode {mode}"));
        };
        // SAFETY: caller guarantees a NUL-terminated string.
        let Ok(text) = unsafe { CStr::from_ptr(text) }.to_str() else {
            return fail(PakloStatus::Parse, "input is not UTF-8");
        };
        let matrix = match parse_matrix_market(text) {
            Ok(m) => m,
            Err(e) => return fail(PakloStatus::Parse, e.to_string()),
        };
        match ProblemInstance::new(matrix, mode) {
            Ok(inner) => {
                // SAFETY: `out` checked non-null; caller guarantees validity.
                unsafe { *out = Box::into_raw(Box::new(PakloInstance { inner })) };
                PakloStatus::Ok
            }
            Err(e) => fail(PakloStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Builds an instance from `nnz` zero-based `(row, col, value)` triplets.
///
/// # Safety
/// `rows`, `cols` and `vals` must each point to `nnz` readable elements;
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn paklo_instance_from_triplets(
    m: usize,
    n: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    vals: *const f64,
    mode: c_int,
    out: *mut *mut PakloInstance,
) -> PakloStatus {
    guarded(|| {
        if out.is_null() || (nnz > 0 && (rows.is_null() || cols.is_null() || vals.is_null())) {
            return fail(PakloStatus::NullPointer, "null argument");
        }
        let Some(mode) = mode_from(mode) else {
            return fail(PakloStatus::InvalidArgument, format!("unknown mode {mode}"));
        };
        let trip: Vec<(usize, usize, f64)> = if nnz == 0 {
            Vec::new()
        } else {
            // SAFETY: caller guarantees `nnz` readable elements in each array.
            let (r, c, v) = unsafe {
                (
                    std::slice::from_raw_parts(rows, nnz),
                    std::slice::from_raw_parts(cols, nnz),
                    std::slice::from_raw_parts(vals, nnz),
                )
            };
            (0..nnz).map(|k| (r[k], c[k], v[k])).collect()
        };
        let built = SparseNonnegMatrix::from_triplets(m, n, &trip)
            .map_err(|e| e.to_string())
            .and_then(|a| ProblemInstance::new(a, mode).map_err(|e| e.to_string()));
        match built {
            Ok(inner) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(PakloInstance { inner })) };
                PakloStatus::Ok
            }
            Err(e) => fail(PakloStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `inst` must be a live handle; `m` and `n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paklo_instance_dims(inst: *const PakloInstance, m: *mut usize, n: *mut usize) -> PakloStatus {
    guarded(|| {
        if inst.is_null() || m.is_null() || n.is_null() {
            return fail(PakloStatus::NullPointer, "null argument");
        }
        // SAFETY: pointers checked non-null; caller guarantees validity.
        unsafe {
            let a = (*inst).inner.matrix();
            *m = a.nrows();
            *n = a.ncols();
        }
        PakloStatus::Ok
    })
}

/// # Safety
/// `inst` must be NULL or a handle from a paklo constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paklo_instance_free(inst: *mut PakloInstance) {
    if !inst.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Runs the full solve pipeline with `0 < eps < 0.5`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn paklo_solve(
    inst: *const PakloInstance,
    eps: f64,
    seed: u64,
    out: *mut *mut PakloReport,
) -> PakloStatus {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            return fail(PakloStatus::NullPointer, "null argument");
        }
        if !(eps > 0.0 && eps < 0.5) {
            return fail(PakloStatus::InvalidArgument, format!("eps must lie in (0, 0.5), got {eps}"));
        }
        // SAFETY: `inst` checked non-null; caller guarantees it is live.
        let inst = unsafe { &(*inst).inner };
        match solve(inst, &SolverConfig::new(eps, seed)) {
            Ok(inner) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(PakloReport { inner })) };
                PakloStatus::Ok
            }
            Err(e) => fail(PakloStatus::Solver, e.to_string()),
        }
    })
}

unsafe fn report_field<T>(report: *const PakloReport, out: *mut T, get: impl FnOnce(&SolveReport) -> T) -> PakloStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(PakloStatus::NullPointer, "null argument");
        }
        // SAFETY: pointers checked non-null; caller guarantees validity.
        unsafe { *out = get(&(*report).inner) };
        PakloStatus::Ok
    })
}

/// `1ᵀx` of the reported solution.
///
/// # Safety
/// `report` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn paklo_report_objective(report: *const PakloReport, out: *mut f64) -> PakloStatus {
    unsafe { report_field(report, out, |r| r.objective) }
}

/// `min_j (Ax)_j − 1` for covering, `1 − max_j (Ay)_j` for packing.
///
/// # Safety
/// `report` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn paklo_report_residual(report: *const PakloReport, out: *mut f64) -> PakloStatus {
    unsafe { report_field(report, out, |r| r.feasibility_residual) }
}

/// # Safety
/// `report` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn paklo_report_iterations(report: *const PakloReport, out: *mut u64) -> PakloStatus {
    unsafe { report_field(report, out, |r| r.iterations) }
}

/// # Safety
/// `report` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn paklo_report_solution_len(report: *const PakloReport, out: *mut usize) -> PakloStatus {
    unsafe { report_field(report, out, |r| r.solution.len()) }
}

/// Copies the solution into `buf`, which must hold at least
/// `paklo_report_solution_len` values.
///
/// # Safety
/// `report` must be a live handle; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn paklo_report_copy_solution(report: *const PakloReport, buf: *mut f64, len: usize) -> PakloStatus {
    guarded(|| {
        if report.is_null() || buf.is_null() {
            return fail(PakloStatus::NullPointer, "null argument");
        }
        // SAFETY: `report` checked non-null.
        let sol = unsafe { &(*report).inner.solution };
        if len < sol.len() {
            return fail(
                PakloStatus::BufferTooSmall,
                format!("buffer holds {len} values, solution has {}", sol.len()),
            );
        }
        // SAFETY: caller guarantees `len ≥ sol.len()` writable values.
        unsafe { ptr::copy_nonoverlapping(sol.as_ptr(), buf, sol.len()) };
        PakloStatus::Ok
    })
}

/// # Safety
/// `report` must be NULL or a handle from [`paklo_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paklo_report_free(report: *mut PakloReport) {
    if !report.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(report) });
    }
}
