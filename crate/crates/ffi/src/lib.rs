//! C ABI over `defectlab`.
//!
//! Every fallible function returns a [`DlStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`dl_last_error`]. Flow states cross the boundary as opaque
//! [`DlState`] handles; strings returned by the library are released with
//! [`dl_string_free`].

// Entry points are called from C, which owns pointer validity.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use defectlab::cover::Axis;
use defectlab::flows::scenario::{run_scenario_json, Scenario};
use defectlab::flows::{commutator_apply, inner_product, translate_state, StateFn};
use defectlab::localexp::{defect_indices_1d, exponentiate_local, resolvent_commutation, Boundary, Generator, LocalFlow};
use defectlab::quad::{verify_kv_identity, verify_mellin, verify_nicholson, IdentityReport};
use defectlab::specfun::{gamma, kv};
use defectlab::spectral::{defect_dimension, lp_lc_classify, Endpoint};
use defectlab::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Pole = 4,
    NonConvergence = 5,
    Puncture = 6,
    OpenLoop = 7,
    NonIntegerWinding = 8,
    Tolerance = 9,
    RankAmbiguity = 10,
    DimensionMismatch = 11,
    Scenario = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlEndpoint {
    LimitCircle = 0,
    LimitPoint = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlBoundary {
    Interval = 0,
    Periodic = 1,
    DecayWindow = 2,
}

/// Both sides of an identity and their relative error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DlIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// A bump state on a cover of the punctured plane.
pub struct DlState(StateFn);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Utf8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> DlStatus {
    match e {
        Error::Pole { .. } => DlStatus::Pole,
        Error::Domain(_) => DlStatus::Domain,
        Error::NonConvergence { .. } => DlStatus::NonConvergence,
        Error::Puncture { .. } => DlStatus::Puncture,
        Error::OpenLoop => DlStatus::OpenLoop,
        Error::NonIntegerWinding { .. } => DlStatus::NonIntegerWinding,
        Error::Tolerance { .. } => DlStatus::Tolerance,
        Error::RankAmbiguity { .. } => DlStatus::RankAmbiguity,
        Error::DimensionMismatch { .. } => DlStatus::DimensionMismatch,
        Error::Scenario(_) => DlStatus::Scenario,
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DlStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (DlStatus::Ok, String::new()),
        Ok(Err(Failure::Lib(e))) => (status_of(&e), e.to_string()),
        Ok(Err(Failure::Null(what))) => (DlStatus::NullPointer, format!("{what} is null")),
        Ok(Err(Failure::Utf8)) => (DlStatus::InvalidUtf8, "string is not valid UTF-8".into()),
        Err(_) => (DlStatus::Panic, "internal panic".into()),
    };
    set_error(msg);
    status
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees a non-null out-pointer is valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("string argument"));
    }
    // SAFETY: the caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Failure::Utf8)
}

fn state<'a>(p: *const DlState) -> Result<&'a DlState, Failure> {
    // SAFETY: handles come from this library and are not yet freed.
    unsafe { p.as_ref() }.ok_or(Failure::Null("state handle"))
}

fn state_mut<'a>(p: *mut DlState) -> Result<&'a mut DlState, Failure> {
    // SAFETY: as for `state`, with exclusive access.
    unsafe { p.as_mut() }.ok_or(Failure::Null("state handle"))
}

fn square(dim: usize, data: *const f64, what: &'static str) -> Result<DMatrix<f64>, Failure> {
    if data.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller passes `dim * dim` doubles in row-major order.
    let s = unsafe { std::slice::from_raw_parts(data, dim * dim) };
    Ok(DMatrix::from_row_slice(dim, dim, s))
}

fn identity_out(r: IdentityReport, o: *mut DlIdentity) -> Result<(), Failure> {
    *out(o, "out")? = DlIdentity {
        lhs: r.lhs,
        rhs: r.rhs,
        rel_err: r.rel_err,
    };
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn dl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dl_gamma(x: f64, out_value: *mut f64) -> DlStatus {
    guard(|| {
        *out(out_value, "out_value")? = gamma(x)?;
        Ok(())
    })
}

/// `K_ν(z)` for real `ν` and `z > 0`.
#[no_mangle]
pub extern "C" fn dl_bessel_k(nu: f64, z: f64, out_value: *mut f64) -> DlStatus {
    guard(|| {
        *out(out_value, "out_value")? = kv(nu, z)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dl_verify_kv_identity(nu: f64, tol: f64, out_report: *mut DlIdentity) -> DlStatus {
    guard(|| identity_out(verify_kv_identity(nu, tol)?, out_report))
}

#[no_mangle]
pub extern "C" fn dl_verify_nicholson(nu: f64, z: f64, tol: f64, out_report: *mut DlIdentity) -> DlStatus {
    guard(|| identity_out(verify_nicholson(nu, z, tol)?, out_report))
}

#[no_mangle]
pub extern "C" fn dl_verify_mellin(nu: f64, beta: f64, tol: f64, out_report: *mut DlIdentity) -> DlStatus {
    guard(|| identity_out(verify_mellin(nu, beta, tol)?, out_report))
}

/// Dimension of the defect space on the `n`-sheeted cover.
#[no_mangle]
pub extern "C" fn dl_defect_dimension(n: u32, out_dim: *mut usize) -> DlStatus {
    guard(|| {
        *out(out_dim, "out_dim")? = defect_dimension(n)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dl_lp_lc_classify(nu: f64, out_endpoint: *mut DlEndpoint) -> DlStatus {
    guard(|| {
        *out(out_endpoint, "out_endpoint")? = match lp_lc_classify(nu)? {
            Endpoint::LimitCircle => DlEndpoint::LimitCircle,
            Endpoint::LimitPoint => DlEndpoint::LimitPoint,
        };
        Ok(())
    })
}

/// Defect indices of the central-difference `d/dx` on `n` nodes.
#[no_mangle]
pub extern "C" fn dl_defect_indices_1d(
    boundary: DlBoundary,
    n: usize,
    margin: usize,
    out_n_plus: *mut usize,
    out_n_minus: *mut usize,
) -> DlStatus {
    guard(|| {
        let b = match boundary {
            DlBoundary::Interval => Boundary::Interval,
            DlBoundary::Periodic => Boundary::Periodic,
            DlBoundary::DecayWindow => Boundary::DecayWindow,
        };
        let d = defect_indices_1d(b, n, margin)?;
        *out(out_n_plus, "out_n_plus")? = d.n_plus;
        *out(out_n_minus, "out_n_minus")? = d.n_minus;
        Ok(())
    })
}

/// `U_t = exp(tH)` for a skew-symmetric `dim × dim` matrix `h` (row-major),
/// built from the local flow. Writes `dim * dim` doubles to `out_u`.
#[no_mangle]
pub extern "C" fn dl_exponentiate(
    dim: usize,
    h: *const f64,
    t: f64,
    tol: f64,
    out_u: *mut f64,
    out_steps: *mut u64,
) -> DlStatus {
    guard(|| {
        let flow = LocalFlow::new(Generator::dense(square(dim, h, "h")?)?)?;
        let e = exponentiate_local(&flow, t, tol)?;
        if out_u.is_null() {
            return Err(Failure::Null("out_u"));
        }
        // SAFETY: the caller provides room for `dim * dim` doubles.
        let dst = unsafe { std::slice::from_raw_parts_mut(out_u, dim * dim) };
        for i in 0..dim {
            for j in 0..dim {
                dst[i * dim + j] = e.u[(i, j)];
            }
        }
        if !out_steps.is_null() {
            *out(out_steps, "out_steps")? = e.steps;
        }
        Ok(())
    })
}

/// `‖[(λ₁ - H₁)⁻¹, (λ₂ - H₂)⁻¹]‖₂` for row-major skew-symmetric matrices.
#[no_mangle]
pub extern "C" fn dl_resolvent_commutation(
    dim: usize,
    h1: *const f64,
    h2: *const f64,
    lambda1_re: f64,
    lambda1_im: f64,
    lambda2_re: f64,
    lambda2_im: f64,
    out_norm: *mut f64,
) -> DlStatus {
    guard(|| {
        let a = Generator::dense(square(dim, h1, "h1")?)?;
        let b = Generator::dense(square(dim, h2, "h2")?)?;
        let l1 = Complex64::new(lambda1_re, lambda1_im);
        let l2 = Complex64::new(lambda2_re, lambda2_im);
        *out(out_norm, "out_norm")? = resolvent_commutation(&a, &b, l1, l2)?;
        Ok(())
    })
}

/// Build the initial state of a JSON scenario (the program is ignored).
/// Release it with [`dl_state_free`].
#[no_mangle]
pub extern "C" fn dl_state_from_json(json: *const c_char, out_state: *mut *mut DlState) -> DlStatus {
    guard(|| {
        let slot = out(out_state, "out_state")?;
        *slot = ptr::null_mut();
        let s = Scenario::from_json(text(json)?)?.initial_state()?;
        *slot = Box::into_raw(Box::new(DlState(s)));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dl_state_clone(s: *const DlState, out_state: *mut *mut DlState) -> DlStatus {
    guard(|| {
        let copy = state(s)?.0.clone();
        *out(out_state, "out_state")? = Box::into_raw(Box::new(DlState(copy)));
        Ok(())
    })
}

/// Frees a state handle. Null is ignored.
#[no_mangle]
pub extern "C" fn dl_state_free(s: *mut DlState) {
    if !s.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Applies `U_axis(t)` in place; `axis` is 1 or 2. On error the state is
/// left unchanged.
#[no_mangle]
pub extern "C" fn dl_state_translate(s: *mut DlState, axis: u8, t: f64) -> DlStatus {
    guard(|| {
        let st = state_mut(s)?;
        let axis = Axis::try_from(axis).map_err(|_| Error::Domain(format!("axis must be 1 or 2, got {axis}")))?;
        st.0 = translate_state(&st.0, axis, t)?;
        Ok(())
    })
}

/// Applies the translation commutator with side lengths `s` and `t` in place.
#[no_mangle]
pub extern "C" fn dl_state_commutator(st: *mut DlState, s: f64, t: f64) -> DlStatus {
    guard(|| {
        let h = state_mut(st)?;
        h.0 = commutator_apply(&h.0, s, t)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dl_state_bump_count(s: *const DlState, out_count: *mut usize) -> DlStatus {
    guard(|| {
        *out(out_count, "out_count")? = state(s)?.0.bumps().len();
        Ok(())
    })
}

/// Sheet index of bump `index`.
#[no_mangle]
pub extern "C" fn dl_state_sheet(s: *const DlState, index: usize, out_sheet: *mut i64) -> DlStatus {
    guard(|| {
        let sheets = state(s)?.0.sheets();
        let sheet = sheets
            .get(index)
            .ok_or_else(|| Error::Domain(format!("bump index {index} out of range ({} bumps)", sheets.len())))?;
        *out(out_sheet, "out_sheet")? = *sheet;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dl_state_norm(s: *const DlState, out_norm: *mut f64) -> DlStatus {
    guard(|| {
        *out(out_norm, "out_norm")? = state(s)?.0.norm();
        Ok(())
    })
}

/// `⟨a, b⟩`, antilinear in `a`.
#[no_mangle]
pub extern "C" fn dl_state_inner_product(a: *const DlState, b: *const DlState, out_re: *mut f64, out_im: *mut f64) -> DlStatus {
    guard(|| {
        let z = inner_product(&state(a)?.0, &state(b)?.0);
        *out(out_re, "out_re")? = z.re;
        *out(out_im, "out_im")? = z.im;
        Ok(())
    })
}

/// Runs a JSON scenario and returns its trace as JSON. Release the string
/// with [`dl_string_free`].
#[no_mangle]
pub extern "C" fn dl_scenario_run_json(json: *const c_char, out_json: *mut *mut c_char) -> DlStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let report = run_scenario_json(text(json)?)?;
        let s = serde_json::to_string(&report).map_err(|e| Error::Scenario(e.to_string()))?;
        *slot = CString::new(s).map_err(|_| Failure::Utf8)?.into_raw();
        Ok(())
    })
}

/// Frees a string returned by the library. Null is ignored.
#[no_mangle]
pub extern "C" fn dl_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the pointer came from `CString::into_raw` and is freed once.
        drop(unsafe { CString::from_raw(s) });
    }
}
