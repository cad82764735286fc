//! C ABI for `g2forms`.
//!
//! Every fallible function returns a [`G2fStatus`]; on failure the message is
//! available from [`g2f_last_error`] on the same thread. Handles are opaque
//! and owned by the caller, who releases them with the matching `_free`.
//! Strings returned through out-pointers are released with [`g2f_string_free`].

#![allow(clippy::missing_safety_doc)]

use g2forms::cli::expr::Expr;
use g2forms::cli::scenario::{Overrides, Scenario, Settings};
use g2forms::exterior::{KForm, Orientation};
use g2forms::{cli, g2, sl3c, Error};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum G2fStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Dimension, degree or length mismatch.
    InvalidArgument = 3,
    Parse = 4,
    /// Expression evaluated outside its domain.
    Domain = 5,
    Scenario = 6,
    /// The form is degenerate, not definite or not positive.
    Degenerate = 7,
    Numerical = 8,
    Panic = 9,
    BufferTooSmall = 10,
}

/// Exterior form on R^n.
pub struct G2fForm(KForm);

/// Parsed coefficient expression.
pub struct G2fExpr(Expr);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> G2fStatus {
    match e {
        Error::DimensionMismatch(..) | Error::DegreeOverflow { .. } | Error::DegreeMismatch { .. } | Error::ZeroDegreeContraction => {
            G2fStatus::InvalidArgument
        }
        Error::Parse { .. } | Error::UnknownIdentifier { .. } => G2fStatus::Parse,
        Error::Domain(_) => G2fStatus::Domain,
        Error::Scenario(_) => G2fStatus::Scenario,
        Error::NotDefinite { .. } | Error::Degenerate { .. } | Error::NotPositive { .. } | Error::DegeneratePositive { .. } => {
            G2fStatus::Degenerate
        }
        _ => G2fStatus::Numerical,
    }
}

struct Fail(G2fStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> G2fStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            G2fStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(format!("panic: {}", msg.unwrap_or_default()));
            G2fStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(G2fStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(G2fStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(G2fStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(G2fStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(G2fStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul removed").into_raw()
}

fn orientation(sign: i32) -> Result<Orientation, Fail> {
    match sign {
        1 => Ok(Orientation::Positive),
        -1 => Ok(Orientation::Negative),
        _ => Err(Fail(G2fStatus::InvalidArgument, format!("orientation must be 1 or -1, got {sign}"))),
    }
}

fn handle(form: KForm) -> *mut G2fForm {
    Box::into_raw(Box::new(G2fForm(form)))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn g2f_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn g2f_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn g2f_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Form of degree `k` on R^n from `C(n,k)` coefficients in lexicographic
/// order of increasing index tuples.
#[no_mangle]
pub unsafe extern "C" fn g2f_form_new(n: usize, k: usize, coeffs: *const f64, len: usize, result: *mut *mut G2fForm) -> G2fStatus {
    guard(|| {
        let result = out(result, "result")?;
        if n > 8 || k > n {
            return Err(Fail(G2fStatus::InvalidArgument, format!("need k <= n <= 8, got n = {n}, k = {k}")));
        }
        let c = slice(coeffs, len, "coeffs")?;
        *result = handle(KForm::from_coeffs(n, k, c.to_vec())?);
        Ok(())
    })
}

/// The standard definite 3-form on R^6.
#[no_mangle]
pub extern "C" fn g2f_form_rho0() -> *mut G2fForm {
    handle(sl3c::rho0())
}

/// The standard positive 3-form on R^7.
#[no_mangle]
pub extern "C" fn g2f_form_phi0() -> *mut G2fForm {
    handle(g2::phi0())
}

#[no_mangle]
pub unsafe extern "C" fn g2f_form_free(form: *mut G2fForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

#[no_mangle]
pub unsafe extern "C" fn g2f_form_dim(form: *const G2fForm) -> usize {
    form.as_ref().map_or(0, |f| f.0.dim())
}

#[no_mangle]
pub unsafe extern "C" fn g2f_form_degree(form: *const G2fForm) -> usize {
    form.as_ref().map_or(0, |f| f.0.degree())
}

/// Number of coefficients, `C(n,k)`.
#[no_mangle]
pub unsafe extern "C" fn g2f_form_len(form: *const G2fForm) -> usize {
    form.as_ref().map_or(0, |f| f.0.coeffs().len())
}

/// Copies the coefficients into `buf`, which must hold `g2f_form_len` values.
#[no_mangle]
pub unsafe extern "C" fn g2f_form_coeffs(form: *const G2fForm, buf: *mut f64, len: usize) -> G2fStatus {
    guard(|| {
        let c = borrow(form, "form")?.0.coeffs();
        if len < c.len() {
            return Err(Fail(G2fStatus::BufferTooSmall, format!("need {} values, got {len}", c.len())));
        }
        if buf.is_null() {
            return Err(Fail(G2fStatus::NullPointer, "buf is null".into()));
        }
        std::slice::from_raw_parts_mut(buf, c.len()).copy_from_slice(c);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn g2f_form_wedge(a: *const G2fForm, b: *const G2fForm, result: *mut *mut G2fForm) -> G2fStatus {
    guard(|| {
        let w = borrow(a, "a")?.0.wedge(&borrow(b, "b")?.0)?;
        *out(result, "result")? = handle(w);
        Ok(())
    })
}

/// Pullback by the linear map with row-major `n x n` matrix `m`.
#[no_mangle]
pub unsafe extern "C" fn g2f_form_pullback(form: *const G2fForm, m: *const f64, len: usize, result: *mut *mut G2fForm) -> G2fStatus {
    guard(|| {
        let f = &borrow(form, "form")?.0;
        let n = f.dim();
        if len != n * n {
            return Err(Fail(G2fStatus::InvalidArgument, format!("matrix needs {} entries, got {len}", n * n)));
        }
        let m = nalgebra::DMatrix::from_row_slice(n, n, slice(m, len, "m")?);
        *out(result, "result")? = handle(f.pullback(&m)?);
        Ok(())
    })
}

/// Quartic invariant of a 3-form on R^6; negative exactly on definite forms.
#[no_mangle]
pub unsafe extern "C" fn g2f_hitchin_lambda(form: *const G2fForm, lambda: *mut f64) -> G2fStatus {
    guard(|| {
        *out(lambda, "lambda")? = sl3c::hitchin_lambda(&borrow(form, "form")?.0)?;
        Ok(())
    })
}

/// Induced complex structure (36 values, row-major) and conjugate form of a
/// definite 3-form on R^6. Either output may be null.
#[no_mangle]
pub unsafe extern "C" fn g2f_sl3c_structure(
    form: *const G2fForm,
    orientation_sign: i32,
    complex_structure: *mut f64,
    rho_tilde: *mut *mut G2fForm,
) -> G2fStatus {
    guard(|| {
        let data = sl3c::analyze_definite(&borrow(form, "form")?.0, orientation(orientation_sign)?)?;
        if !complex_structure.is_null() {
            let buf = std::slice::from_raw_parts_mut(complex_structure, 36);
            for (k, v) in buf.iter_mut().enumerate() {
                *v = data.complex_structure[(k / 6, k % 6)];
            }
        }
        if let Some(r) = rho_tilde.as_mut() {
            *r = handle(data.rho_tilde);
        }
        Ok(())
    })
}

/// Induced metric (49 values, row-major) and coassociative 4-form of a
/// positive 3-form on R^7. Either output may be null.
#[no_mangle]
pub unsafe extern "C" fn g2f_g2_structure(form: *const G2fForm, orientation_sign: i32, metric: *mut f64, star_phi: *mut *mut G2fForm) -> G2fStatus {
    guard(|| {
        let data = g2::analyze_positive(&borrow(form, "form")?.0, orientation(orientation_sign)?)?;
        if !metric.is_null() {
            let buf = std::slice::from_raw_parts_mut(metric, 49);
            for (k, v) in buf.iter_mut().enumerate() {
                *v = data.metric[(k / 7, k % 7)];
            }
        }
        if let Some(s) = star_phi.as_mut() {
            *s = handle(data.star_phi);
        }
        Ok(())
    })
}

/// Smallest eigenvalue of the bilinear form of a 3-form on R^7.
#[no_mangle]
pub unsafe extern "C" fn g2f_positivity_margin(form: *const G2fForm, orientation_sign: i32, margin: *mut f64) -> G2fStatus {
    guard(|| {
        *out(margin, "margin")? = g2::positivity_margin(&borrow(form, "form")?.0, orientation(orientation_sign)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn g2f_expr_parse(source: *const c_char, result: *mut *mut G2fExpr) -> G2fStatus {
    guard(|| {
        let e = Expr::parse(text(source, "source")?)?;
        *out(result, "result")? = Box::into_raw(Box::new(G2fExpr(e)));
        Ok(())
    })
}

/// Evaluates at `x[0..len]` (the variables `x1..`) and `t`.
#[no_mangle]
pub unsafe extern "C" fn g2f_expr_eval(expr: *const G2fExpr, x: *const f64, len: usize, t: f64, value: *mut f64) -> G2fStatus {
    guard(|| {
        let e = &borrow(expr, "expr")?.0;
        let x = slice(x, len, "x")?;
        if e.arity() > len {
            return Err(Fail(G2fStatus::InvalidArgument, format!("expression uses x{} but {len} values were given", e.arity())));
        }
        *out(value, "value")? = e.eval(x, t)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn g2f_expr_free(expr: *mut G2fExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Runs a builtin scenario with default settings. `report_json` receives the
/// report, `passed` (nullable) whether every check passed.
#[no_mangle]
pub unsafe extern "C" fn g2f_run_builtin(name: *const c_char, report_json: *mut *mut c_char, passed: *mut bool) -> G2fStatus {
    guard(|| {
        let json = cli::run_builtin_json(text(name, "name")?, &Settings::default())?;
        finish_report(json, report_json, passed)
    })
}

/// Validates and runs a scenario given as JSON text.
#[no_mangle]
pub unsafe extern "C" fn g2f_run_scenario(scenario_json: *const c_char, report_json: *mut *mut c_char, passed: *mut bool) -> G2fStatus {
    guard(|| {
        let scenario = Scenario::from_json_str(text(scenario_json, "scenario_json")?, &Overrides::default())?;
        finish_report(cli::run(&scenario)?.to_json(), report_json, passed)
    })
}

unsafe fn finish_report(json: String, report_json: *mut *mut c_char, passed: *mut bool) -> Result<(), Fail> {
    let slot = out(report_json, "report_json")?;
    if let Some(p) = passed.as_mut() {
        let v: serde_json::Value = serde_json::from_str(&json).map_err(|e| Fail(G2fStatus::Numerical, e.to_string()))?;
        *p = v["pass"].as_bool().unwrap_or(false);
    }
    *slot = c_string(json);
    Ok(())
}
