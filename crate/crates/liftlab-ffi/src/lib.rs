//! C ABI for the liftlab solver.
//!
//! Handles are opaque pointers owned by this library and released with the
//! matching `_free` function. Structured data crosses the boundary as JSON
//! strings in the same schemas the CLI uses; strings returned through
//! `char**` out-parameters are owned by the caller and released with
//! [`liftlab_string_free`]. Every fallible call returns a [`LiftlabStatus`];
//! on failure, [`liftlab_last_error_message`] describes the most recent
//! error on the calling thread.
//!
//! Pass `tol <= 0` to use the library defaults (rank cut 1e-9, check
//! tolerance 1e-8).
//!
//! # Safety
//!
//! Every `unsafe extern "C"` function requires: handle and string pointers
//! are either null (reported as `NullArgument`) or valid for the call;
//! out-parameters point to writable storage; handles are not used after
//! their `_free`, and each handle/string is freed exactly once by the
//! matching function.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use liftlab::config::{Tols, DEFAULT_CHECK_TOL, DEFAULT_RANK_TOL};
use liftlab::dataset::{gen_classical, gen_random, validate, Dims, LiftingDataSet};
use liftlab::redheffer::{solve_central, solve_seeded, verify, Interpolant};
use liftlab::schema;

/// Result of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftlabStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// JSON parsing or schema validation failed.
    Parse = 3,
    /// A numerical precondition failed (not a contraction, omega not
    /// isometric, ...).
    Numeric = 4,
    /// The operation ran but the checked property does not hold.
    CheckFailed = 5,
}

/// Opaque lifting data set handle.
pub struct LiftlabDataset {
    inner: LiftingDataSet,
}

/// Opaque interpolant handle.
pub struct LiftlabInterpolant {
    inner: Interpolant,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap());
}

fn status_of(err: &liftlab::Error) -> LiftlabStatus {
    use liftlab::Error::*;
    match err {
        Json(_) | Io(_) | ShapeMismatch { .. } | DimMismatch { .. } => LiftlabStatus::Parse,
        _ => LiftlabStatus::Numeric,
    }
}

fn tols(rank_tol: f64, check_tol: f64) -> Tols {
    Tols {
        rank_tol: if rank_tol > 0.0 {
            rank_tol
        } else {
            DEFAULT_RANK_TOL
        },
        check_tol: if check_tol > 0.0 {
            check_tol
        } else {
            DEFAULT_CHECK_TOL
        },
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, LiftlabStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(LiftlabStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        LiftlabStatus::InvalidUtf8
    })
}

fn give_string(s: String, out: *mut *mut c_char) -> LiftlabStatus {
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    let c = CString::new(s.replace('\0', " ")).unwrap();
    unsafe { *out = c.into_raw() };
    LiftlabStatus::Ok
}

/// Version of the underlying library, as a static string.
#[no_mangle]
pub extern "C" fn liftlab_version() -> *const c_char {
    concat!("liftlab ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn liftlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn liftlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses a data set from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn liftlab_dataset_from_json(
    json: *const c_char,
    out: *mut *mut LiftlabDataset,
) -> LiftlabStatus {
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    let text = match unsafe { read_str(json) } {
        Ok(t) => t,
        Err(s) => return s,
    };
    match schema::dataset_from_str(text) {
        Ok(ds) => {
            unsafe { *out = Box::into_raw(Box::new(LiftlabDataset { inner: ds })) };
            LiftlabStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            LiftlabStatus::Parse
        }
    }
}

/// Serializes a data set to its JSON form.
#[no_mangle]
pub unsafe extern "C" fn liftlab_dataset_to_json(
    ds: *const LiftlabDataset,
    out: *mut *mut c_char,
) -> LiftlabStatus {
    let Some(ds) = (unsafe { ds.as_ref() }) else {
        set_error("null data set handle");
        return LiftlabStatus::NullArgument;
    };
    give_string(schema::dataset_to_string(&ds.inner), out)
}

/// Kinds accepted by [`liftlab_dataset_generate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftlabCorpusKind {
    Classical = 0,
    Random = 1,
    Zero = 2,
}

/// Generates a seeded data set. Classical generation uses `h` as the common
/// dimension and ignores `h0`/`hp`.
#[no_mangle]
pub unsafe extern "C" fn liftlab_dataset_generate(
    kind: LiftlabCorpusKind,
    h0: usize,
    h: usize,
    hp: usize,
    seed: u64,
    out: *mut *mut LiftlabDataset,
) -> LiftlabStatus {
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    let ds = match kind {
        LiftlabCorpusKind::Classical => gen_classical(h, seed).ds,
        LiftlabCorpusKind::Random => gen_random(Dims { h0, h, hp }, seed).ds,
        LiftlabCorpusKind::Zero => LiftingDataSet::zero(Dims { h0, h, hp }),
    };
    unsafe { *out = Box::into_raw(Box::new(LiftlabDataset { inner: ds })) };
    LiftlabStatus::Ok
}

/// Checks the defining constraints. `out_pass` receives the verdict; when
/// `out_report_json` is non-null it receives the full report.
#[no_mangle]
pub unsafe extern "C" fn liftlab_dataset_validate(
    ds: *const LiftlabDataset,
    check_tol: f64,
    out_pass: *mut bool,
    out_report_json: *mut *mut c_char,
) -> LiftlabStatus {
    let Some(ds) = (unsafe { ds.as_ref() }) else {
        set_error("null data set handle");
        return LiftlabStatus::NullArgument;
    };
    if out_pass.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    let t = tols(-1.0, check_tol);
    match validate(&ds.inner, t.check_tol) {
        Ok(report) => {
            unsafe { *out_pass = report.pass };
            if !out_report_json.is_null() {
                let rendered = serde_json_string(&report);
                let st = give_string(rendered, out_report_json);
                if st != LiftlabStatus::Ok {
                    return st;
                }
            }
            LiftlabStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Central solution at truncation `n`.
#[no_mangle]
pub unsafe extern "C" fn liftlab_solve_central(
    ds: *const LiftlabDataset,
    n: usize,
    rank_tol: f64,
    check_tol: f64,
    out: *mut *mut LiftlabInterpolant,
) -> LiftlabStatus {
    let Some(ds) = (unsafe { ds.as_ref() }) else {
        set_error("null data set handle");
        return LiftlabStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    match solve_central(&ds.inner, n.max(1), &tols(rank_tol, check_tol)) {
        Ok(ip) => {
            unsafe { *out = Box::into_raw(Box::new(LiftlabInterpolant { inner: ip })) };
            LiftlabStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Interpolant for a seeded random contractive free block.
#[no_mangle]
pub unsafe extern "C" fn liftlab_solve_seeded(
    ds: *const LiftlabDataset,
    seed: u64,
    state_dim: usize,
    n: usize,
    rank_tol: f64,
    check_tol: f64,
    out: *mut *mut LiftlabInterpolant,
) -> LiftlabStatus {
    let Some(ds) = (unsafe { ds.as_ref() }) else {
        set_error("null data set handle");
        return LiftlabStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    match solve_seeded(
        &ds.inner,
        seed,
        state_dim,
        n.max(1),
        &tols(rank_tol, check_tol),
    ) {
        Ok(ip) => {
            unsafe { *out = Box::into_raw(Box::new(LiftlabInterpolant { inner: ip })) };
            LiftlabStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Checks the interpolation constraints of an interpolant.
#[no_mangle]
pub unsafe extern "C" fn liftlab_interpolant_verify(
    ip: *const LiftlabInterpolant,
    rank_tol: f64,
    check_tol: f64,
    out_pass: *mut bool,
    out_report_json: *mut *mut c_char,
) -> LiftlabStatus {
    let Some(ip) = (unsafe { ip.as_ref() }) else {
        set_error("null interpolant handle");
        return LiftlabStatus::NullArgument;
    };
    if out_pass.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    match verify(&ip.inner, &tols(rank_tol, check_tol)) {
        Ok(report) => {
            unsafe { *out_pass = report.pass };
            if !out_report_json.is_null() {
                let st = give_string(serde_json_string(&report), out_report_json);
                if st != LiftlabStatus::Ok {
                    return st;
                }
            }
            LiftlabStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Serializes an interpolant to its JSON form.
#[no_mangle]
pub unsafe extern "C" fn liftlab_interpolant_to_json(
    ip: *const LiftlabInterpolant,
    out: *mut *mut c_char,
) -> LiftlabStatus {
    let Some(ip) = (unsafe { ip.as_ref() }) else {
        set_error("null interpolant handle");
        return LiftlabStatus::NullArgument;
    };
    give_string(schema::interpolant_to_string(&ip.inner), out)
}

/// Parses an interpolant against its data set (the stored hash must match).
#[no_mangle]
pub unsafe extern "C" fn liftlab_interpolant_from_json(
    ds: *const LiftlabDataset,
    json: *const c_char,
    out: *mut *mut LiftlabInterpolant,
) -> LiftlabStatus {
    let Some(ds) = (unsafe { ds.as_ref() }) else {
        set_error("null data set handle");
        return LiftlabStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    let text = match unsafe { read_str(json) } {
        Ok(t) => t,
        Err(s) => return s,
    };
    match schema::interpolant_from_str(text, &ds.inner) {
        Ok(ip) => {
            unsafe { *out = Box::into_raw(Box::new(LiftlabInterpolant { inner: ip })) };
            LiftlabStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            LiftlabStatus::Parse
        }
    }
}

/// Truncation horizon N of an interpolant.
#[no_mangle]
pub unsafe extern "C" fn liftlab_interpolant_truncation(
    ip: *const LiftlabInterpolant,
    out: *mut usize,
) -> LiftlabStatus {
    let Some(ip) = (unsafe { ip.as_ref() }) else {
        set_error("null interpolant handle");
        return LiftlabStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return LiftlabStatus::NullArgument;
    }
    unsafe { *out = ip.inner.truncation };
    LiftlabStatus::Ok
}

/// Copies the `n`-th symbol coefficient into `data` as interleaved
/// `(re, im)` pairs in row-major order. Call with `data == NULL` to query
/// `rows`/`cols` first; `capacity` counts f64 slots (`2 * rows * cols`
/// needed).
#[no_mangle]
pub unsafe extern "C" fn liftlab_interpolant_gamma(
    ip: *const LiftlabInterpolant,
    n: usize,
    out_rows: *mut usize,
    out_cols: *mut usize,
    data: *mut f64,
    capacity: usize,
) -> LiftlabStatus {
    let Some(ip) = (unsafe { ip.as_ref() }) else {
        set_error("null interpolant handle");
        return LiftlabStatus::NullArgument;
    };
    if n > ip.inner.gamma.horizon() {
        set_error(format!(
            "coefficient index {n} exceeds the truncation {}",
            ip.inner.gamma.horizon()
        ));
        return LiftlabStatus::Parse;
    }
    let coeff = ip.inner.gamma.coeff(n);
    if !out_rows.is_null() {
        unsafe { *out_rows = coeff.nrows() };
    }
    if !out_cols.is_null() {
        unsafe { *out_cols = coeff.ncols() };
    }
    if data.is_null() {
        return LiftlabStatus::Ok;
    }
    let needed = 2 * coeff.nrows() * coeff.ncols();
    if capacity < needed {
        set_error(format!("buffer holds {capacity} f64, need {needed}"));
        return LiftlabStatus::CheckFailed;
    }
    let mut at = 0;
    for i in 0..coeff.nrows() {
        for j in 0..coeff.ncols() {
            unsafe {
                *data.add(at) = coeff[(i, j)].re;
                *data.add(at + 1) = coeff[(i, j)].im;
            }
            at += 2;
        }
    }
    LiftlabStatus::Ok
}

/// Uniqueness/properness report for a data set, with optional defect data of
/// an interpolant, as one JSON document.
#[no_mangle]
pub unsafe extern "C" fn liftlab_analyze_json(
    ds: *const LiftlabDataset,
    ip: *const LiftlabInterpolant,
    rank_tol: f64,
    check_tol: f64,
    out: *mut *mut c_char,
) -> LiftlabStatus {
    let Some(ds) = (unsafe { ds.as_ref() }) else {
        set_error("null data set handle");
        return LiftlabStatus::NullArgument;
    };
    let t = tols(rank_tol, check_tol);
    let uniqueness = match liftlab::analysis::uniqueness_report(&ds.inner, &t) {
        Ok(u) => u,
        Err(e) => {
            set_error(e.to_string());
            return status_of(&e);
        }
    };
    let defect = match unsafe { ip.as_ref() } {
        None => None,
        Some(ip) => match liftlab::analysis::interpolant_defect(&ip.inner, &t) {
            Ok(d) => Some(serde_json::json!({
                "dim_d_b": d.frame_d_b.dim(),
                "dim_f_b": d.frame_f_b.dim(),
                "dim_f_bp": d.frame_f_bp.dim(),
                "dim_g_b": d.dim_g_b,
                "dim_g_bp": d.dim_g_bp,
                "tail_caveat": d.tail_caveat,
                "proper_param": liftlab::analysis::proper_param_check(&d),
            })),
            Err(e) => {
                set_error(e.to_string());
                return status_of(&e);
            }
        },
    };
    let doc = serde_json::json!({
        "uniqueness": uniqueness,
        "interpolant": defect,
    });
    give_string(serde_json_string(&doc), out)
}

/// Releases a data set handle.
#[no_mangle]
pub unsafe extern "C" fn liftlab_dataset_free(ds: *mut LiftlabDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Releases an interpolant handle.
#[no_mangle]
pub unsafe extern "C" fn liftlab_interpolant_free(ip: *mut LiftlabInterpolant) {
    if !ip.is_null() {
        drop(unsafe { Box::from_raw(ip) });
    }
}
