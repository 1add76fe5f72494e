//! C ABI over `mathon-core`.
//!
//! Handles are opaque pointers created by `mathon_*_run`/`_from_bytes` and
//! released with the matching `_free`. Every fallible function returns a
//! [`MathonStatus`]; on failure a description is available from
//! [`mathon_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mathon_core::forms::{
    classify_quadric, verify_perp_system, AlternatingForm, PerpSystemReport, QuadraticForm,
    QuadricType,
};
use mathon_core::linalg::Matrix;
use mathon_core::pipeline::{Construction, LineSet, Q};
use mathon_core::projective::{AmbientSpace, Subspace};
use mathon_core::report;

/// Bytes per line in the flat encoding: a 2×6 basis, row-major, entries 0..3.
pub const MATHON_LINE_BYTES: usize = 12;

/// Bytes per Gram matrix: 6×6, row-major.
pub const MATHON_GRAM_BYTES: usize = 36;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MathonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    VerificationFailed = 4,
    NotFound = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MathonFormKind {
    /// Gram matrix of an alternating form.
    Alternating = 0,
    /// Symmetric matrix of a quadratic form.
    Quadratic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MathonQuadric {
    Hyperbolic = 0,
    Elliptic = 1,
    Degenerate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MathonPerpReport {
    pub line_count: usize,
    /// 0 when the bound is not integral.
    pub bound: u64,
    pub all_nonsingular: bool,
    pub pairwise_opposite: bool,
    pub pairwise_disjoint: bool,
    pub is_partial_perp_system: bool,
    pub is_maximal: bool,
    pub failing_pairs: usize,
}

impl From<&PerpSystemReport> for MathonPerpReport {
    fn from(r: &PerpSystemReport) -> Self {
        Self {
            line_count: r.line_count,
            bound: r.bound.unwrap_or(0),
            all_nonsingular: r.all_nonsingular,
            pairwise_opposite: r.pairwise_opposite,
            pairwise_disjoint: r.pairwise_disjoint,
            is_partial_perp_system: r.is_partial_perp_system,
            is_maximal: r.is_maximal,
            failing_pairs: r.failing_pairs.len(),
        }
    }
}

/// A completed construction for one seed.
pub struct MathonPipeline(Construction);

/// A list of lines of PG(5,3).
pub struct MathonLineSet(LineSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn fail(status: MathonStatus, msg: impl Into<String>) -> MathonStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> MathonStatus) -> MathonStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == MathonStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(MathonStatus::Internal, "panic in mathon-core"),
    }
}

fn matrix_from_bytes(bytes: &[u8], rows: usize, cols: usize) -> Result<Matrix, MathonStatus> {
    if bytes.iter().any(|&b| b >= Q) {
        return Err(fail(MathonStatus::InvalidArgument, "entry outside 0..3"));
    }
    Matrix::from_data(Q, rows, cols, bytes.to_vec())
        .map_err(|e| fail(MathonStatus::InvalidArgument, e.to_string()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mathon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Run the construction for `seed_index` in `0..24`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mathon_pipeline_run(seed_index: u32, out: *mut *mut MathonPipeline) -> MathonStatus {
    guard(|| {
        if out.is_null() {
            return fail(MathonStatus::NullPointer, "out is null");
        }
        if seed_index >= 24 {
            return fail(MathonStatus::OutOfRange, format!("seed index {seed_index} not in 0..24"));
        }
        let space = AmbientSpace::new(5, Q);
        match Construction::run(seed_index as usize, &space) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(MathonPipeline(c)));
                MathonStatus::Ok
            }
            Err(e) => fail(MathonStatus::VerificationFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`mathon_pipeline_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mathon_pipeline_free(p: *mut MathonPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copy one stage (`"F4"`, `"L"`, `"F5"`, `"F6"`, `"F15"` or `"M21"`) into a
/// new line set handle.
///
/// # Safety
/// `p` must be a live pipeline handle, `name` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mathon_pipeline_stage(
    p: *const MathonPipeline,
    name: *const c_char,
    out: *mut *mut MathonLineSet,
) -> MathonStatus {
    guard(|| {
        if p.is_null() || name.is_null() || out.is_null() {
            return fail(MathonStatus::NullPointer, "null argument");
        }
        let c = &(*p).0;
        let set = match CStr::from_ptr(name).to_str() {
            Ok("F4") => &c.f4,
            Ok("L") => &c.l,
            Ok("F5") => &c.f5,
            Ok("F6") => &c.f6,
            Ok("F15") => &c.f15,
            Ok("M21") => &c.m21,
            Ok(other) => return fail(MathonStatus::NotFound, format!("no stage {other}")),
            Err(_) => return fail(MathonStatus::InvalidArgument, "stage name is not UTF-8"),
        };
        *out = Box::into_raw(Box::new(MathonLineSet(set.clone())));
        MathonStatus::Ok
    })
}

/// Write the Gram matrix of the construction's alternating form into
/// `out[0..36]`.
///
/// # Safety
/// `p` must be a live pipeline handle and `out` point to 36 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mathon_pipeline_gram(p: *const MathonPipeline, out: *mut u8) -> MathonStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(MathonStatus::NullPointer, "null argument");
        }
        let data = (*p).0.form.gram().data();
        ptr::copy_nonoverlapping(data.as_ptr(), out, MATHON_GRAM_BYTES);
        MathonStatus::Ok
    })
}

/// # Safety
/// `s` must be a live line set handle.
#[no_mangle]
pub unsafe extern "C" fn mathon_lineset_len(s: *const MathonLineSet) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).0.len()
}

/// Write the canonical basis of line `index` into `out[0..12]`.
///
/// # Safety
/// `s` must be a live line set handle and `out` point to 12 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mathon_lineset_line(s: *const MathonLineSet, index: usize, out: *mut u8) -> MathonStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return fail(MathonStatus::NullPointer, "null argument");
        }
        let Some(line) = (*s).0.lines().get(index) else {
            return fail(MathonStatus::OutOfRange, format!("line {index} out of range"));
        };
        ptr::copy_nonoverlapping(line.basis().data().as_ptr(), out, MATHON_LINE_BYTES);
        MathonStatus::Ok
    })
}

/// Build a line set from `count` consecutive 2×6 bases (12 bytes each).
/// Bases are canonicalized; rank-deficient bases and duplicates are rejected.
///
/// # Safety
/// `data` must point to `12 * count` readable bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn mathon_lineset_from_bytes(
    data: *const u8,
    count: usize,
    out: *mut *mut MathonLineSet,
) -> MathonStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(MathonStatus::NullPointer, "null argument");
        }
        let bytes = std::slice::from_raw_parts(data, count * MATHON_LINE_BYTES);
        let mut lines = Vec::with_capacity(count);
        for chunk in bytes.chunks_exact(MATHON_LINE_BYTES) {
            match matrix_from_bytes(chunk, 2, 6) {
                Ok(m) => lines.push(Subspace::canonicalize(&m)),
                Err(s) => return s,
            }
        }
        match LineSet::new("ffi", lines) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(MathonLineSet(set)));
                MathonStatus::Ok
            }
            Err(e) => fail(MathonStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a line set handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mathon_lineset_free(s: *mut MathonLineSet) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Check every perp-system condition for the lines under the polarity of a
/// 6×6 matrix. The report is filled even when the lines fail the check.
///
/// # Safety
/// `s` must be a live line set, `matrix` point to 36 readable bytes and `out`
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn mathon_verify_perp_system(
    s: *const MathonLineSet,
    matrix: *const u8,
    kind: MathonFormKind,
    out: *mut MathonPerpReport,
) -> MathonStatus {
    guard(|| {
        if s.is_null() || matrix.is_null() || out.is_null() {
            return fail(MathonStatus::NullPointer, "null argument");
        }
        let m = match matrix_from_bytes(std::slice::from_raw_parts(matrix, MATHON_GRAM_BYTES), 6, 6) {
            Ok(m) => m,
            Err(st) => return st,
        };
        let lines = (*s).0.lines();
        let report = match kind {
            MathonFormKind::Alternating => AlternatingForm::new(m).map(|f| verify_perp_system(lines, &f)),
            MathonFormKind::Quadratic => QuadraticForm::new(m).map(|f| verify_perp_system(lines, &f)),
        };
        match report {
            Ok(r) => {
                *out = MathonPerpReport::from(&r);
                MathonStatus::Ok
            }
            Err(e) => fail(MathonStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Classify the quadric of a symmetric 6×6 matrix by counting singular points.
///
/// # Safety
/// `sym` must point to 36 readable bytes; `kind` and `points` be writable.
#[no_mangle]
pub unsafe extern "C" fn mathon_classify_quadric(
    sym: *const u8,
    kind: *mut MathonQuadric,
    points: *mut u64,
) -> MathonStatus {
    guard(|| {
        if sym.is_null() || kind.is_null() || points.is_null() {
            return fail(MathonStatus::NullPointer, "null argument");
        }
        let m = match matrix_from_bytes(std::slice::from_raw_parts(sym, MATHON_GRAM_BYTES), 6, 6) {
            Ok(m) => m,
            Err(st) => return st,
        };
        let result = QuadraticForm::new(m).and_then(|q| classify_quadric(&q));
        match result {
            Ok((k, n)) => {
                *kind = match k {
                    QuadricType::Hyperbolic => MathonQuadric::Hyperbolic,
                    QuadricType::Elliptic => MathonQuadric::Elliptic,
                    QuadricType::Degenerate => MathonQuadric::Degenerate,
                };
                *points = n;
                MathonStatus::Ok
            }
            Err(e) => fail(MathonStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Run every pipeline check and return the JSON report as a new string, to be
/// released with [`mathon_string_free`]. Returns `VerificationFailed` (with
/// the report still written) when any check fails.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mathon_report_json(seed_index: u32, out: *mut *mut c_char) -> MathonStatus {
    guard(|| {
        if out.is_null() {
            return fail(MathonStatus::NullPointer, "out is null");
        }
        if seed_index >= 24 {
            return fail(MathonStatus::OutOfRange, format!("seed index {seed_index} not in 0..24"));
        }
        let r = match report::run_pipeline(seed_index as usize, false) {
            Ok(r) => r,
            Err(e) => return fail(MathonStatus::VerificationFailed, e.to_string()),
        };
        let json = report::to_json(&r);
        *out = CString::new(json).unwrap_or_default().into_raw();
        if r.passed {
            MathonStatus::Ok
        } else {
            fail(
                MathonStatus::VerificationFailed,
                format!("failed checks: {}", r.checks.failed().join(", ")),
            )
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mathon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
