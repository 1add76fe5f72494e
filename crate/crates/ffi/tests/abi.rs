use std::ffi::{CStr, CString};
use std::ptr;

use mathon_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mathon_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn run(seed: u32) -> *mut MathonPipeline {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { mathon_pipeline_run(seed, &mut p) }, MathonStatus::Ok);
    assert!(!p.is_null());
    p
}

fn stage(p: *const MathonPipeline, name: &str) -> *mut MathonLineSet {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mathon_pipeline_stage(p, name.as_ptr(), &mut s) }, MathonStatus::Ok);
    s
}

fn lines_bytes(s: *const MathonLineSet) -> Vec<u8> {
    let n = unsafe { mathon_lineset_len(s) };
    let mut out = vec![0u8; n * MATHON_LINE_BYTES];
    for i in 0..n {
        let st = unsafe { mathon_lineset_line(s, i, out[i * MATHON_LINE_BYTES..].as_mut_ptr()) };
        assert_eq!(st, MathonStatus::Ok);
    }
    out
}

#[test]
fn stage_sizes() {
    let p = run(0);
    for (name, n) in [("F4", 4), ("L", 24), ("F5", 5), ("F6", 6), ("F15", 15), ("M21", 21)] {
        let s = stage(p, name);
        assert_eq!(unsafe { mathon_lineset_len(s) }, n, "{name}");
        unsafe { mathon_lineset_free(s) };
    }
    let bogus = CString::new("F7").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { mathon_pipeline_stage(p, bogus.as_ptr(), &mut s) },
        MathonStatus::NotFound
    );
    assert!(last_error().contains("F7"));
    unsafe { mathon_pipeline_free(p) };
}

#[test]
fn perp_report_roundtrip_through_bytes() {
    let p = run(0);
    let m21 = stage(p, "M21");
    let bytes = lines_bytes(m21);
    let mut copy = ptr::null_mut();
    assert_eq!(
        unsafe { mathon_lineset_from_bytes(bytes.as_ptr(), 21, &mut copy) },
        MathonStatus::Ok
    );
    let mut gram = [0u8; MATHON_GRAM_BYTES];
    assert_eq!(unsafe { mathon_pipeline_gram(p, gram.as_mut_ptr()) }, MathonStatus::Ok);
    let mut report = MathonPerpReport::default();
    let st = unsafe {
        mathon_verify_perp_system(copy, gram.as_ptr(), MathonFormKind::Alternating, &mut report)
    };
    assert_eq!(st, MathonStatus::Ok);
    assert_eq!(report.line_count, 21);
    assert_eq!(report.bound, 21);
    assert!(report.is_partial_perp_system && report.is_maximal);
    assert_eq!(report.failing_pairs, 0);

    // the identity is not alternating
    let mut ident = [0u8; MATHON_GRAM_BYTES];
    for i in 0..6 {
        ident[i * 7] = 1;
    }
    let st = unsafe {
        mathon_verify_perp_system(copy, ident.as_ptr(), MathonFormKind::Alternating, &mut report)
    };
    assert_eq!(st, MathonStatus::InvalidArgument);
    unsafe {
        mathon_lineset_free(copy);
        mathon_lineset_free(m21);
        mathon_pipeline_free(p);
    }
}

#[test]
fn from_bytes_rejects_bad_input() {
    let mut s = ptr::null_mut();
    let bad_entry = [3u8; MATHON_LINE_BYTES];
    assert_eq!(
        unsafe { mathon_lineset_from_bytes(bad_entry.as_ptr(), 1, &mut s) },
        MathonStatus::InvalidArgument
    );
    let rank_one = [1, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0u8];
    assert_eq!(
        unsafe { mathon_lineset_from_bytes(rank_one.as_ptr(), 1, &mut s) },
        MathonStatus::InvalidArgument
    );
    let line = [1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0u8];
    let twice: Vec<u8> = line.iter().chain(line.iter()).copied().collect();
    assert_eq!(
        unsafe { mathon_lineset_from_bytes(twice.as_ptr(), 2, &mut s) },
        MathonStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { mathon_lineset_from_bytes(ptr::null(), 1, &mut s) },
        MathonStatus::NullPointer
    );
    assert!(s.is_null());
}

#[test]
fn out_of_range_seed() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { mathon_pipeline_run(24, &mut p) }, MathonStatus::OutOfRange);
    assert!(p.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn quadric_classification() {
    // x0x1 + x2x3 + x4x5 as a symmetric matrix with halves: 1/2 = 2 over GF(3)
    let mut hyp = [0u8; MATHON_GRAM_BYTES];
    for (i, j) in [(0, 1), (2, 3), (4, 5)] {
        hyp[i * 6 + j] = 2;
        hyp[j * 6 + i] = 2;
    }
    let mut kind = MathonQuadric::Degenerate;
    let mut points = 0u64;
    assert_eq!(
        unsafe { mathon_classify_quadric(hyp.as_ptr(), &mut kind, &mut points) },
        MathonStatus::Ok
    );
    assert_eq!((kind, points), (MathonQuadric::Hyperbolic, 130));

    let not_symmetric = {
        let mut m = [0u8; MATHON_GRAM_BYTES];
        m[1] = 1;
        m
    };
    assert_eq!(
        unsafe { mathon_classify_quadric(not_symmetric.as_ptr(), &mut kind, &mut points) },
        MathonStatus::InvalidArgument
    );
}

#[test]
fn report_json_is_valid_and_passes() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mathon_report_json(0, &mut s) }, MathonStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { mathon_string_free(s) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["passed"], true);
    assert_eq!(v["stages"]["M21"].as_array().unwrap().len(), 21);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mathon.h")).unwrap();
    for name in [
        "mathon_last_error",
        "mathon_pipeline_run",
        "mathon_pipeline_free",
        "mathon_pipeline_stage",
        "mathon_pipeline_gram",
        "mathon_lineset_len",
        "mathon_lineset_line",
        "mathon_lineset_from_bytes",
        "mathon_lineset_free",
        "mathon_verify_perp_system",
        "mathon_classify_quadric",
        "mathon_report_json",
        "mathon_string_free",
        "MATHON_STATUS_VERIFICATION_FAILED",
        "typedef struct MathonPipeline MathonPipeline",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        mathon_pipeline_free(ptr::null_mut());
        mathon_lineset_free(ptr::null_mut());
        mathon_string_free(ptr::null_mut());
        assert_eq!(mathon_lineset_len(ptr::null()), 0);
    }
    let mut out = [0u8; MATHON_LINE_BYTES];
    assert_eq!(
        unsafe { mathon_lineset_line(ptr::null(), 0, out.as_mut_ptr()) },
        MathonStatus::NullPointer
    );
}
