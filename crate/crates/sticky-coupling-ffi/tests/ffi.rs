use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sticky_coupling_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn ou_kit_and_measure_round_trip() {
    unsafe {
        let mut kappa = ptr::null_mut();
        assert_eq!(sc_kappa_new(ptr::null(), ptr::null(), 0, -0.5, 0.0, &mut kappa), ScStatus::Ok);
        let mut kit = ptr::null_mut();
        assert_eq!(sc_kit_new(0.0, kappa, &mut kit), ScStatus::Ok);
        let mut k = ScKitConstants::default();
        assert_eq!(sc_kit_constants(kit, &mut k), ScStatus::Ok);
        assert!((k.c - 0.125).abs() < 1e-8);
        assert!((k.epsilon - 1.0 / (2.0 * 8f64.sqrt())).abs() < 1e-8);
        let mut f = 0.0;
        assert_eq!(sc_kit_eval(kit, ScKitFunction::F, 0.0, &mut f), ScStatus::Ok);
        assert_eq!(f, 0.0);

        let mut pi = ptr::null_mut();
        assert_eq!(sc_measure_new(0.5, kappa, &mut pi), ScStatus::Ok);
        let (mut atom, mut tail) = (0.0, 0.0);
        sc_measure_atom(pi, &mut atom);
        sc_measure_tail(pi, &mut tail);
        assert!((atom + tail - 1.0).abs() < 1e-12);
        assert!((tail - sc_ou_pi_tail(1.0)).abs() < 1e-9);
        let mut ub = 0.0;
        assert_eq!(sc_modified_upper_bound(kappa, pi, 3.0, 0.0, &mut ub), ScStatus::Ok);
        assert!((ub - tail).abs() < 1e-12);

        let (m, x, y) = ([1.0], [0.0], [0.0]);
        let mut tv = 0.0;
        assert_eq!(sc_ou_exact_tv(m.as_ptr(), x.as_ptr(), y.as_ptr(), 1, 60.0, &mut tv), ScStatus::Ok);
        assert!((tv - sc_phi1(0.5)).abs() < 1e-12);
        assert!(tv <= ub);

        sc_measure_free(pi);
        sc_kit_free(kit);
        sc_kappa_free(kappa);
        sc_kit_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(sc_ctilde_inverse_bound(1.0, -1.0, 1.0, &mut out), ScStatus::InvalidInput);
        assert!(!last_error().is_empty());
        assert_eq!(sc_kit_constants(ptr::null(), ptr::null_mut()), ScStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut kappa = ptr::null_mut();
        assert_eq!(sc_kappa_step(0.0, 1.0 / 6.0, 3.0, &mut kappa), ScStatus::Ok);
        let mut pi = ptr::null_mut();
        assert_eq!(sc_measure_new(0.01, kappa, &mut pi), ScStatus::Ok);
        assert_eq!(sc_modified_upper_bound(kappa, pi, -1.0, 0.0, &mut out), ScStatus::InvalidInput);
        let mut a = ScAlphaBound::default();
        assert_eq!(sc_alpha_closed_form(0.0, 1.0 / 6.0, 3.0, 0.01, &mut a), ScStatus::Ok);
        assert_eq!(a.small_m_branch, 1);
        let mut quad = 0.0;
        sc_measure_tail(pi, &mut quad);
        assert!(a.tail_mass_bound >= quad);
        sc_measure_free(pi);
        sc_kappa_free(kappa);
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "sticky_coupling.h"
int main(void) {
    ScKappa *k = NULL;
    ScKit *kit = NULL;
    ScKitConstants c;
    if (sc_kappa_new(NULL, NULL, 0, -0.5, 0.0, &k) != SC_STATUS_OK) return 1;
    if (sc_kit_new(0.0, k, &kit) != SC_STATUS_OK) return 2;
    sc_kit_constants(kit, &c);
    printf("%.10f %s\n", c.c, sc_version());
    sc_kit_free(kit);
    sc_kappa_free(k);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else { return };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/this-test -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libsticky_coupling_ffi.a");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let include = crate_dir.join("include");
    let st = Command::new(&cc).arg("-fsyntax-only").arg("-I").arg(&include).arg(&src).status().unwrap();
    assert!(st.success(), "header does not compile");
    if !lib.exists() {
        return;
    }
    let bin = tmp.path().join("smoke");
    let st = Command::new(&cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success(), "link failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("0.1250000000"));
}

fn which_cc() -> Result<String, ()> {
    for c in ["cc", "gcc", "clang"] {
        if Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(c.to_string());
        }
    }
    Err(())
}
