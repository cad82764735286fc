use g2forms_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    let p = g2f_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn form_roundtrip_and_wedge() {
    unsafe {
        let mut a = ptr::null_mut();
        let coeffs = [1.0, 2.0, 3.0];
        assert_eq!(g2f_form_new(3, 1, coeffs.as_ptr(), 3, &mut a), G2fStatus::Ok);
        assert_eq!((g2f_form_dim(a), g2f_form_degree(a), g2f_form_len(a)), (3, 1, 3));
        let mut buf = [0.0; 3];
        assert_eq!(g2f_form_coeffs(a, buf.as_mut_ptr(), 3), G2fStatus::Ok);
        assert_eq!(buf, coeffs);
        assert_eq!(g2f_form_coeffs(a, buf.as_mut_ptr(), 2), G2fStatus::BufferTooSmall);

        let mut aa = ptr::null_mut();
        assert_eq!(g2f_form_wedge(a, a, &mut aa), G2fStatus::Ok);
        let mut sq = [1.0; 3];
        g2f_form_coeffs(aa, sq.as_mut_ptr(), 3);
        assert_eq!(sq, [0.0; 3]);
        g2f_form_free(aa);
        g2f_form_free(a);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(g2f_form_new(3, 1, [1.0].as_ptr(), 1, &mut f), G2fStatus::InvalidArgument);
        assert!(f.is_null());
        assert!(last_error().contains("mismatch"));
        assert_eq!(g2f_form_new(3, 1, ptr::null(), 3, &mut f), G2fStatus::NullPointer);

        let decomposable = {
            let mut c = [0.0; 20];
            c[0] = 1.0;
            let mut h = ptr::null_mut();
            g2f_form_new(6, 3, c.as_ptr(), 20, &mut h);
            h
        };
        assert_eq!(g2f_sl3c_structure(decomposable, 1, ptr::null_mut(), ptr::null_mut()), G2fStatus::Degenerate);
        assert_eq!(g2f_sl3c_structure(decomposable, 0, ptr::null_mut(), ptr::null_mut()), G2fStatus::InvalidArgument);
        g2f_form_free(decomposable);

        let mut lambda = 0.0;
        let rho = g2f_form_rho0();
        assert_eq!(g2f_hitchin_lambda(rho, &mut lambda), G2fStatus::Ok);
        assert!(g2f_last_error().is_null());
        g2f_form_free(rho);
    }
}

#[test]
fn g2_structure_of_pulled_back_form() {
    unsafe {
        let phi = g2f_form_phi0();
        let mut m = [0.0; 49];
        for i in 0..7 {
            m[i * 7 + i] = 2.0;
        }
        let mut scaled = ptr::null_mut();
        assert_eq!(g2f_form_pullback(phi, m.as_ptr(), 49, &mut scaled), G2fStatus::Ok);
        let mut metric = [0.0; 49];
        let mut star = ptr::null_mut();
        assert_eq!(g2f_g2_structure(scaled, 1, metric.as_mut_ptr(), &mut star), G2fStatus::Ok);
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 4.0 } else { 0.0 };
                assert!((metric[i * 7 + j] - want).abs() < 1e-12);
            }
        }
        assert_eq!(g2f_form_degree(star), 4);
        let mut margin = 0.0;
        assert_eq!(g2f_positivity_margin(phi, -1, &mut margin), G2fStatus::Ok);
        assert!(margin < 0.0);
        g2f_form_free(star);
        g2f_form_free(scaled);
        g2f_form_free(phi);
    }
}

#[test]
fn expressions() {
    unsafe {
        let src = CString::new("x1*x2 + sin(t)").unwrap();
        let mut e = ptr::null_mut();
        assert_eq!(g2f_expr_parse(src.as_ptr(), &mut e), G2fStatus::Ok);
        let mut v = 0.0;
        assert_eq!(g2f_expr_eval(e, [2.0, 3.0].as_ptr(), 2, 0.0, &mut v), G2fStatus::Ok);
        assert_eq!(v, 6.0);
        assert_eq!(g2f_expr_eval(e, [2.0].as_ptr(), 1, 0.0, &mut v), G2fStatus::InvalidArgument);
        g2f_expr_free(e);

        let bad = CString::new("x1 + nope").unwrap();
        assert_eq!(g2f_expr_parse(bad.as_ptr(), &mut e), G2fStatus::Parse);
        assert!(last_error().contains("nope"));

        let div = CString::new("1/x1").unwrap();
        assert_eq!(g2f_expr_parse(div.as_ptr(), &mut e), G2fStatus::Ok);
        assert_eq!(g2f_expr_eval(e, [0.0].as_ptr(), 1, 0.0, &mut v), G2fStatus::Domain);
        g2f_expr_free(e);
    }
}

#[test]
fn scenarios_return_reports() {
    unsafe {
        let name = CString::new("torus-coframe").unwrap();
        let mut report = ptr::null_mut();
        let mut passed = false;
        assert_eq!(g2f_run_builtin(name.as_ptr(), &mut report, &mut passed), G2fStatus::Ok);
        assert!(passed);
        let json = CStr::from_ptr(report).to_str().unwrap().to_owned();
        g2f_string_free(report);
        let direct = g2forms::cli::run_builtin_json("torus-coframe", &Default::default()).unwrap();
        assert_eq!(json, direct);

        let scenario = CString::new(r#"{"schema": 1, "name": "affine", "operation": {"kind": "maximal", "dim": 1, "n": 9, "boundary": ["0.5*x1"]}}"#).unwrap();
        assert_eq!(g2f_run_scenario(scenario.as_ptr(), &mut report, &mut passed), G2fStatus::Ok);
        assert!(passed);
        g2f_string_free(report);

        let broken = CString::new(r#"{"schema": 2}"#).unwrap();
        assert_eq!(g2f_run_scenario(broken.as_ptr(), &mut report, ptr::null_mut()), G2fStatus::Scenario);
        let msg = last_error();
        assert!(msg.contains("schema") && msg.contains("name"), "{msg}");
    }
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(g2f_version()) }.to_str().unwrap();
    assert_eq!(v, g2forms::VERSION);
}
