//! Round-trip tests for the C ABI, driven from Rust through the same
//! `extern "C"` entry points a foreign caller would use.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use msmax_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(msmax_last_error()) }
        .to_string_lossy()
        .into_owned()
}

/// Builds a function handle from explicit values, panicking on failure.
fn make_function(levels: &[u8], values: &[f64]) -> *mut MsmaxFunction {
    let mut out = ptr::null_mut();
    let code = unsafe {
        msmax_function_new(
            levels.as_ptr(),
            levels.len(),
            values.as_ptr(),
            values.len(),
            &mut out,
        )
    };
    assert_eq!(code, MSMAX_OK, "msmax_function_new: {}", last_error());
    assert!(!out.is_null());
    out
}

fn take_string(s: *mut c_char) -> String {
    assert!(!s.is_null(), "string result was null: {}", last_error());
    let owned = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { msmax_string_free(s) };
    owned
}

#[test]
fn version_and_error_slot_start_clean() {
    let version = unsafe { CStr::from_ptr(msmax_version()) }.to_str().unwrap();
    assert!(!version.is_empty());
    assert_eq!(last_error(), "");
}

#[test]
fn function_round_trip_preserves_layout_and_integral() {
    let levels = [2u8, 1];
    let values: Vec<f64> = (0..8).map(|i| i as f64).collect();
    let f = make_function(&levels, &values);

    assert_eq!(unsafe { msmax_function_dims(f) }, 2);
    assert_eq!(unsafe { msmax_function_value_count(f) }, 8);

    let mut levels_out = [0u8; 2];
    let code = unsafe { msmax_function_levels(f, levels_out.as_mut_ptr(), 2) };
    assert_eq!(code, MSMAX_OK);
    assert_eq!(levels_out, levels);

    let mut values_out = [0f64; 8];
    let code = unsafe { msmax_function_values(f, values_out.as_mut_ptr(), 8) };
    assert_eq!(code, MSMAX_OK);
    assert_eq!(values_out.as_slice(), values.as_slice());

    // Cell volume is 2^-(2+1); the integral is the plain scaled sum.
    let mut integral = 0.0;
    let code = unsafe { msmax_function_integral(f, &mut integral) };
    assert_eq!(code, MSMAX_OK);
    assert_eq!(integral, values.iter().sum::<f64>() / 8.0);

    unsafe { msmax_function_free(f) };
}

#[test]
fn constant_and_spec_constructors_agree() {
    let levels = [3u8];
    let mut a = ptr::null_mut();
    let code = unsafe { msmax_function_constant(levels.as_ptr(), 1, 2.5, &mut a) };
    assert_eq!(code, MSMAX_OK);

    let spec = CString::new("const:c=2.5").unwrap();
    let mut b = ptr::null_mut();
    let code = unsafe { msmax_function_from_spec(spec.as_ptr(), levels.as_ptr(), 1, &mut b) };
    assert_eq!(code, MSMAX_OK);

    let mut va = [0f64; 8];
    let mut vb = [0f64; 8];
    unsafe {
        assert_eq!(msmax_function_values(a, va.as_mut_ptr(), 8), MSMAX_OK);
        assert_eq!(msmax_function_values(b, vb.as_mut_ptr(), 8), MSMAX_OK);
        msmax_function_free(a);
        msmax_function_free(b);
    }
    assert_eq!(va, vb);
}

#[test]
fn maximal_operator_matches_the_library_call() {
    let levels = [3u8];
    let values: Vec<f64> = (0..8).map(|i| 0.25 + (i as f64) * 0.5).collect();
    let f = make_function(&levels, &values);

    let p = [2.0];
    let mut prof = ptr::null_mut();
    let code = unsafe { msmax_profile_new(1, 0.0, p.as_ptr(), 1, 2.0, &mut prof) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());

    let fs = [f as *const MsmaxFunction];
    let mut result = ptr::null_mut();
    let code = unsafe {
        msmax_maximal(
            MsmaxOperator::StrongDyadic,
            0,
            fs.as_ptr(),
            1,
            prof,
            &mut result,
        )
    };
    assert_eq!(code, MSMAX_OK, "{}", last_error());

    let mut got = [0f64; 8];
    unsafe {
        assert_eq!(msmax_function_values(result, got.as_mut_ptr(), 8), MSMAX_OK);
    }

    let direct = {
        let f = msmax::grid::GridFunction::new(&levels, &[0.0], values).unwrap();
        let prof = msmax::maximal::ExponentProfile::new(1, 0.0, &[2.0], 2.0).unwrap();
        msmax::maximal::strong_maximal_dyadic(&[f], &prof).unwrap()
    };
    assert_eq!(got.as_slice(), direct.values());

    unsafe {
        msmax_function_free(result);
        msmax_function_free(f);
        msmax_profile_free(prof);
    }
}

#[test]
fn weight_constants_flow_through_the_boundary() {
    let levels = [3u8];
    let spec = CString::new("power:a=0.5").unwrap();
    let mut w = ptr::null_mut();
    let code = unsafe { msmax_function_from_spec(spec.as_ptr(), levels.as_ptr(), 1, &mut w) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());

    let mut ap = 0.0;
    let code = unsafe { msmax_a_p_constant(w, 2.0, MsmaxFamily::Dyadic, &mut ap) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());
    assert!(ap >= 1.0);

    let mut rd = 0.0;
    let code = unsafe { msmax_reverse_doubling(w, &mut rd) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());
    assert!(rd > 1.0);

    let mut predicted = 0.0;
    let code = unsafe { msmax_rd_prediction(ap.powf(0.5).max(1.0), 2.0, 1, &mut predicted) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());
    assert!(predicted > 1.0);

    // The tuple constant of the single weight under a one-weight profile.
    let p = [4.0, 4.0];
    let mut prof = ptr::null_mut();
    let code = unsafe { msmax_profile_one_weight(1, 0.25, p.as_ptr(), 2, &mut prof) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());

    let mut q = 0.0;
    assert_eq!(unsafe { msmax_profile_q(prof, &mut q) }, MSMAX_OK);
    let expected_q = 1.0 / (0.5 - 0.25);
    assert!((q - expected_q).abs() < 1e-12);

    let ws = [w as *const MsmaxFunction, w as *const MsmaxFunction];
    let mut apq = 0.0;
    let code = unsafe { msmax_a_pq_constant(ws.as_ptr(), 2, prof, MsmaxFamily::All, &mut apq) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());
    assert!(apq > 0.0);

    let mut r = 0.0;
    let mut r_i = [0f64; 2];
    let code = unsafe { msmax_derived_exponents(prof, &mut r, r_i.as_mut_ptr(), 2) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());
    assert!((r - 7.0).abs() < 1e-12);
    assert!((r_i[0] - 7.0 / 3.0).abs() < 1e-12);

    assert_eq!(msmax_conjugate(4.0), 4.0 / 3.0);

    unsafe {
        msmax_function_free(w);
        msmax_profile_free(prof);
    }
}

#[test]
fn null_and_mismatched_arguments_set_error_codes() {
    let mut out = ptr::null_mut();
    let code = unsafe { msmax_function_new(ptr::null(), 2, ptr::null(), 4, &mut out) };
    assert_eq!(code, MSMAX_ERR_INVALID);
    assert!(last_error().contains("null"));

    let levels = [1u8];
    let f = make_function(&levels, &[1.0, 2.0]);
    let mut buf = [0f64; 5];
    let code = unsafe { msmax_function_values(f, buf.as_mut_ptr(), 5) };
    assert_eq!(code, MSMAX_ERR_SHAPE);
    assert!(last_error().contains("5"));

    let bad_spec = CString::new("perimeter:a=1").unwrap();
    let mut w = ptr::null_mut();
    let code = unsafe { msmax_function_from_spec(bad_spec.as_ptr(), levels.as_ptr(), 1, &mut w) };
    assert_eq!(code, MSMAX_ERR_PARSE);
    assert!(w.is_null());

    // Scaling relation 1/p > alpha/n fails at alpha = 0.5, p = 2, n = 1.
    let p = [2.0];
    let mut prof = ptr::null_mut();
    let code = unsafe { msmax_profile_one_weight(1, 0.5, p.as_ptr(), 1, &mut prof) };
    assert_eq!(code, MSMAX_ERR_INVALID);
    assert!(!last_error().is_empty());

    unsafe { msmax_function_free(f) };

    // Frees tolerate null without touching the error slot.
    unsafe {
        msmax_function_free(ptr::null_mut());
        msmax_profile_free(ptr::null_mut());
        msmax_report_free(ptr::null_mut());
        msmax_string_free(ptr::null_mut());
    }
}

#[test]
fn check_catalog_is_exposed() {
    let count = msmax_check_count();
    assert_eq!(count, 12);
    let ids: Vec<String> = (0..count)
        .map(|i| {
            let p = msmax_check_id(i);
            assert!(!p.is_null());
            unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
        })
        .collect();
    assert!(ids.contains(&"constants".to_string()));
    assert!(ids.contains(&"shiftdom".to_string()));
    assert!(msmax_check_id(count).is_null());
}

#[test]
fn running_a_check_yields_a_reproducible_passing_report() {
    let check = CString::new("remark53").unwrap();
    let seed = 11u64;

    let render = |r: *mut MsmaxReport| {
        assert!(unsafe { msmax_report_passed(r) });
        let text = take_string(unsafe { msmax_report_render(r) });
        let tsv = take_string(unsafe { msmax_report_constants_tsv(r) });
        unsafe { msmax_report_free(r) };
        (text, tsv)
    };

    let mut first = ptr::null_mut();
    let code = unsafe { msmax_run_check(check.as_ptr(), &seed, &mut first) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());
    let (text_a, tsv_a) = render(first);

    let mut second = ptr::null_mut();
    let code = unsafe { msmax_run_check(check.as_ptr(), &seed, &mut second) };
    assert_eq!(code, MSMAX_OK);
    let (text_b, tsv_b) = render(second);

    assert!(text_a.starts_with("msmax report v1\ncheck remark53\nseed 11\n"));
    let stripped = msmax::harness::VerificationReport::strip_notes(&text_a);
    assert!(stripped.ends_with("result pass\n"));
    assert_eq!(
        msmax::harness::VerificationReport::strip_notes(&text_a),
        msmax::harness::VerificationReport::strip_notes(&text_b),
    );
    assert_eq!(tsv_a, tsv_b);

    let unknown = CString::new("lemma99").unwrap();
    let mut r = ptr::null_mut();
    let code = unsafe { msmax_run_check(unknown.as_ptr(), ptr::null(), &mut r) };
    assert_eq!(code, MSMAX_ERR_INVALID);
    assert!(last_error().contains("lemma99"));
}

#[test]
fn scenario_text_and_file_entry_points_agree() {
    let text = "check = \"constants\"\nseed = 9\nresolutions = [4]\n\n[profile]\nn = 1\nalpha = 0.25\np = [4.0, 4.0]\none_weight = true\n\n[weights]\nomega = [\"power:a=0.5\", \"const:c=1\"]\n";

    let ctext = CString::new(text).unwrap();
    let mut from_text = ptr::null_mut();
    let code = unsafe { msmax_run_scenario_text(ctext.as_ptr(), &mut from_text) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.toml");
    std::fs::write(&path, text).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut from_file = ptr::null_mut();
    let code = unsafe { msmax_run_scenario_file(cpath.as_ptr(), &mut from_file) };
    assert_eq!(code, MSMAX_OK, "{}", last_error());

    let text_a = take_string(unsafe { msmax_report_render(from_text) });
    let text_b = take_string(unsafe { msmax_report_render(from_file) });
    assert_eq!(
        msmax::harness::VerificationReport::strip_notes(&text_a),
        msmax::harness::VerificationReport::strip_notes(&text_b),
    );

    unsafe {
        msmax_report_free(from_text);
        msmax_report_free(from_file);
    }

    let mut r = ptr::null_mut();
    let missing = CString::new("/nonexistent/scenario.toml").unwrap();
    let code = unsafe { msmax_run_scenario_file(missing.as_ptr(), &mut r) };
    assert_eq!(code, MSMAX_ERR_IO);
}

#[test]
fn generated_header_covers_the_exported_surface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/msmax.h"))
        .expect("build script writes include/msmax.h");

    for symbol in [
        "msmax_function_new",
        "msmax_function_from_spec",
        "msmax_maximal",
        "msmax_fractional_integral",
        "msmax_weak_norm",
        "msmax_a_pq_constant",
        "msmax_run_check",
        "msmax_report_render",
        "msmax_last_error",
        "MSMAX_ERR_PARSE",
        "MSMAX_OPERATOR_STRONG_TRUNCATED",
        "typedef struct MsmaxFunction MsmaxFunction",
    ] {
        assert!(header.contains(symbol), "header is missing `{symbol}`");
    }
}
