use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qvlc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qvlc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn dims_match_hook_and_weyl_formulas() {
    let parts = [2usize, 1];
    let (mut u, mut v) = (0.0, 0.0);
    assert_eq!(unsafe { qvlc_ln_dims(parts.as_ptr(), 2, 3, &mut u, &mut v) }, QvlcStatus::Ok);
    // (2,1) of S_3: 2 standard tableaux; SU(3): 8
    assert!((v.exp() - 2.0).abs() < 1e-9);
    assert!((u.exp() - 8.0).abs() < 1e-9);
    assert_eq!(last_error(), "");
}

#[test]
fn block_probabilities_sum_to_one() {
    let spec = [0.6, 0.4];
    let mut total = 0.0;
    for parts in [[4usize, 0], [3, 1], [2, 2]] {
        let mut p = 0.0;
        assert_eq!(unsafe { qvlc_block_prob_iid(parts.as_ptr(), 2, spec.as_ptr(), 2, &mut p) }, QvlcStatus::Ok);
        total += p;
    }
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn density_handles_and_fidelity() {
    let re = [0.5, 0.5, 0.5, 0.5];
    let diag = [1.0, 0.0, 0.0, 0.0];
    let (mut plus, mut zero) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(qvlc_density_new(2, re.as_ptr(), ptr::null(), &mut plus), QvlcStatus::Ok);
        assert_eq!(qvlc_density_new(2, diag.as_ptr(), ptr::null(), &mut zero), QvlcStatus::Ok);
        let mut f = 0.0;
        assert_eq!(qvlc_fidelity(plus, zero, &mut f), QvlcStatus::Ok);
        assert!((f - 0.5f64.sqrt()).abs() < 1e-9);

        let weights = [0.5, 0.5];
        let atoms = [plus as *const QvlcDensity, zero as *const QvlcDensity];
        let mut source = ptr::null_mut();
        assert_eq!(qvlc_source_new(weights.as_ptr(), atoms.as_ptr(), 2, &mut source), QvlcStatus::Ok);
        qvlc_density_free(plus);
        qvlc_density_free(zero);

        let mut code = ptr::null_mut();
        assert_eq!(qvlc_code_new(1, 2, 0.3, &mut code), QvlcStatus::Ok);
        let (mut err, mut se) = (1.0, 1.0);
        assert_eq!(qvlc_code_average_error(code, source, 100, 0, &mut err, &mut se), QvlcStatus::Ok);
        assert!(err.abs() < 1e-12 && se == 0.0);
        qvlc_code_free(code);
        qvlc_source_free(source);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let not_psd = [1.5, 0.0, 0.0, -0.5];
    let skew = [0.5, 0.3, 0.0, 0.5];
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(qvlc_density_new(2, not_psd.as_ptr(), ptr::null(), &mut h), QvlcStatus::NotPsd);
        assert!(h.is_null());
        assert_eq!(qvlc_density_new(2, skew.as_ptr(), ptr::null(), &mut h), QvlcStatus::NotHermitian);
        assert_eq!(qvlc_density_new(2, ptr::null(), ptr::null(), &mut h), QvlcStatus::NullPointer);
        assert!(last_error().contains("re"));
        let mut x = 0.0;
        let spec = [0.7, 0.3];
        assert_eq!(qvlc_overflow_exponent(2.0, spec.as_ptr(), 2, &mut x), QvlcStatus::InvalidInput);
        assert!(!last_error().is_empty());
        let mut code = ptr::null_mut();
        assert_eq!(qvlc_code_new(0, 2, 0.1, &mut code), QvlcStatus::InvalidInput);
        assert_eq!(qvlc_code_outcome_count(ptr::null(), &mut 0), QvlcStatus::NullPointer);
        qvlc_code_free(ptr::null_mut());
    }
}

#[test]
fn overflow_and_bounds_are_consistent() {
    let spec = [0.8, 0.2];
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(qvlc_code_new(60, 2, 0.2, &mut code), QvlcStatus::Ok);
        let mut count = 0usize;
        assert_eq!(qvlc_code_outcome_count(code, &mut count), QvlcStatus::Ok);
        assert!(count > 1);
        let rate = 0.6;
        let (mut lp, mut lower, mut limit) = (0.0, 0.0, 0.0);
        assert_eq!(qvlc_code_ln_overflow(code, spec.as_ptr(), 2, rate, &mut lp), QvlcStatus::Ok);
        assert_eq!(qvlc_overflow_bound(60, 0.2, rate, spec.as_ptr(), 2, &mut lower), QvlcStatus::Ok);
        assert_eq!(qvlc_overflow_exponent(rate, spec.as_ptr(), 2, &mut limit), QvlcStatus::Ok);
        assert!(-lp / 60.0 >= lower - 1e-9);
        assert!(limit > 0.0);
        let mut e1 = 0.0;
        assert_eq!(qvlc_error_bound(60, 2, 0.2, 0.5, &mut e1), QvlcStatus::Ok);
        assert!((0.0..=1.0).contains(&e1));
        qvlc_code_free(code);
    }
}

/// Compiles a C program against the generated header and static library.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib_dir = deps.parent().unwrap();
    let lib = lib_dir.join("libqvlc_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
