use std::ffi::{CStr, CString};
use std::ptr;

use defectlab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dl_last_error()) }.to_string_lossy().into_owned()
}

const SCENARIO: &str = r#"{
  "cover": {"kind": "infinite"},
  "bumps": [{"r": 1.7677669529663689, "theta_lift": 0.7853981633974483, "radius": 0.3}],
  "program": [{"op": "C", "s": 2.5, "t": 2.5}]
}"#;

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    assert_eq!(dl_gamma(5.0, &mut v), DlStatus::Ok);
    assert!((v / 24.0 - 1.0).abs() < 1e-14, "{v}");
    assert_eq!(last_error(), "");
    assert_eq!(dl_gamma(-2.0, &mut v), DlStatus::Pole);
    assert!(last_error().contains("pole"));
    assert_eq!(dl_bessel_k(0.5, 1.0, &mut v), DlStatus::Ok);
    let exact = (std::f64::consts::PI / 2.0).sqrt() * (-1.0f64).exp();
    assert!((v - exact).abs() < 1e-14);
    assert_eq!(dl_bessel_k(0.5, -1.0, &mut v), DlStatus::Domain);
    assert_eq!(dl_gamma(1.0, ptr::null_mut()), DlStatus::NullPointer);
    let version = unsafe { CStr::from_ptr(dl_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn identities_and_classification() {
    let mut r = DlIdentity::default();
    assert_eq!(dl_verify_kv_identity(0.5, 1e-10, &mut r), DlStatus::Ok);
    assert!((r.rhs - std::f64::consts::FRAC_PI_4).abs() < 1e-15 && r.rel_err < 1e-10);
    assert_eq!(dl_verify_nicholson(0.25, 1.0, 1e-8, &mut r), DlStatus::Ok);
    assert!(r.rel_err < 1e-8);
    assert_eq!(dl_verify_mellin(0.0, 2.0, 1e-10, &mut r), DlStatus::Ok);
    assert!((r.lhs - 1.0).abs() < 1e-10);
    assert_eq!(dl_verify_kv_identity(1.5, 1e-8, &mut r), DlStatus::Domain);
    let mut dim = 0usize;
    assert_eq!(dl_defect_dimension(4, &mut dim), DlStatus::Ok);
    assert_eq!(dim, 7);
    let mut e = DlEndpoint::LimitPoint;
    assert_eq!(dl_lp_lc_classify(0.999, &mut e), DlStatus::Ok);
    assert_eq!(e, DlEndpoint::LimitCircle);
    assert_eq!(dl_lp_lc_classify(1.0, &mut e), DlStatus::Ok);
    assert_eq!(e, DlEndpoint::LimitPoint);
    let (mut p, mut m) = (9usize, 9usize);
    assert_eq!(dl_defect_indices_1d(DlBoundary::Interval, 200, 2, &mut p, &mut m), DlStatus::Ok);
    assert_eq!((p, m), (1, 1));
    assert_eq!(dl_defect_indices_1d(DlBoundary::Periodic, 100, 2, &mut p, &mut m), DlStatus::Ok);
    assert_eq!((p, m), (0, 0));
    assert_eq!(dl_defect_indices_1d(DlBoundary::DecayWindow, 100, 2, &mut p, &mut m), DlStatus::Domain);
}

#[test]
fn matrices() {
    let h = [0.0, 1.0, -1.0, 0.0];
    let mut u = [0.0; 4];
    let mut steps = 0u64;
    assert_eq!(dl_exponentiate(2, h.as_ptr(), std::f64::consts::PI, 1e-12, u.as_mut_ptr(), &mut steps), DlStatus::Ok);
    for (a, b) in u.iter().zip([-1.0, 0.0, 0.0, -1.0]) {
        assert!((a - b).abs() < 1e-13);
    }
    assert!(steps >= 7);
    let not_skew = [0.0, 1.0, 1.0, 0.0];
    assert_eq!(dl_exponentiate(2, not_skew.as_ptr(), 1.0, 1e-12, u.as_mut_ptr(), ptr::null_mut()), DlStatus::Domain);

    let rot = |i: usize, j: usize| {
        let mut m = [0.0; 9];
        m[i * 3 + j] = -1.0;
        m[j * 3 + i] = 1.0;
        m
    };
    let (x, y) = (rot(1, 2), rot(2, 0));
    let mut norm = 0.0;
    assert_eq!(dl_resolvent_commutation(3, x.as_ptr(), y.as_ptr(), 1.0, 0.5, 1.0, 0.5, &mut norm), DlStatus::Ok);
    assert!(norm > 1e-3);
    assert_eq!(dl_resolvent_commutation(3, x.as_ptr(), x.as_ptr(), 1.0, 0.5, -0.7, 2.0, &mut norm), DlStatus::Ok);
    assert!(norm <= 1e-12);
    assert_eq!(dl_resolvent_commutation(3, x.as_ptr(), y.as_ptr(), 0.0, 1.0, 1.0, 0.5, &mut norm), DlStatus::Domain);
}

#[test]
fn state_handles() {
    let json = CString::new(SCENARIO).unwrap();
    let mut s: *mut DlState = ptr::null_mut();
    assert_eq!(dl_state_from_json(json.as_ptr(), &mut s), DlStatus::Ok);
    assert!(!s.is_null());
    let mut copy: *mut DlState = ptr::null_mut();
    assert_eq!(dl_state_clone(s, &mut copy), DlStatus::Ok);

    let mut n = 0usize;
    assert_eq!(dl_state_bump_count(s, &mut n), DlStatus::Ok);
    assert_eq!(n, 1);
    let mut norm = 0.0;
    assert_eq!(dl_state_norm(s, &mut norm), DlStatus::Ok);
    assert_eq!(norm, 1.0);

    assert_eq!(dl_state_commutator(s, 2.5, 2.5), DlStatus::Ok);
    let mut sheet = 0i64;
    assert_eq!(dl_state_sheet(s, 0, &mut sheet), DlStatus::Ok);
    assert_eq!(sheet, -1);
    assert_eq!(dl_state_sheet(s, 3, &mut sheet), DlStatus::Domain);
    let (mut re, mut im) = (1.0, 1.0);
    assert_eq!(dl_state_inner_product(s, copy, &mut re, &mut im), DlStatus::Ok);
    assert_eq!((re, im), (0.0, 0.0));

    // onto the positive x axis, where a move along x runs into the puncture
    // and leaves the state as it was
    assert_eq!(dl_state_translate(s, 2, -1.25), DlStatus::Ok);
    assert_eq!(dl_state_translate(s, 1, -2.5), DlStatus::Puncture);
    assert!(last_error().contains("puncture"));
    assert_eq!(dl_state_translate(s, 3, 1.0), DlStatus::Domain);
    assert_eq!(dl_state_translate(s, 2, 1.25), DlStatus::Ok);
    assert_eq!(dl_state_sheet(s, 0, &mut sheet), DlStatus::Ok);
    assert_eq!(sheet, -1);

    assert_eq!(dl_state_bump_count(ptr::null(), &mut n), DlStatus::NullPointer);
    dl_state_free(s);
    dl_state_free(copy);
    dl_state_free(ptr::null_mut());

    let bad = CString::new("{\"cover\": 3}").unwrap();
    let mut t: *mut DlState = ptr::null_mut();
    assert_eq!(dl_state_from_json(bad.as_ptr(), &mut t), DlStatus::Scenario);
    assert!(t.is_null());
}

#[test]
fn scenario_round_trip() {
    let json = CString::new(SCENARIO).unwrap();
    let mut out: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(dl_scenario_run_json(json.as_ptr(), &mut out), DlStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    dl_string_free(out);
    assert!(text.contains("\"trace\""));
    assert!(text.contains("\"sheet\":-1"));
    let invalid = [0xffu8, 0];
    assert_eq!(dl_scenario_run_json(invalid.as_ptr().cast(), &mut out), DlStatus::InvalidUtf8);
    assert!(out.is_null());
    dl_string_free(ptr::null_mut());
}
