use std::ffi::CStr;
use std::ptr;

use bellnoise_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bn_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn quadrature_round_trip() {
    let mut exp = ptr::null_mut();
    let st = unsafe { bn_experiment_new_quadrature(1.1, 1e-16, bn_settings_pair_coherent_default(), 1.0, &mut exp) };
    assert_eq!(st, BnStatus::Ok);
    let mut e = BnChEvaluation::default();
    assert_eq!(unsafe { bn_experiment_evaluate(exp, 0.0, &mut e) }, BnStatus::Ok);
    assert!((e.s - 1.0157).abs() < 2e-3);
    let mut c = BnSigmaCutoff::default();
    assert_eq!(unsafe { bn_experiment_sigma_cutoff(exp, 1e-4, &mut c) }, BnStatus::Ok);
    assert!(c.violated && c.sigma_c > 0.2 && c.sigma_c < 0.35);
    unsafe { bn_experiment_free(exp) };
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut exp = ptr::null_mut();
    let st = unsafe { bn_experiment_new_exact(1.1, 20.0, 1e-16, bn_settings_pair_coherent_default(), &mut exp) };
    assert_eq!(st, BnStatus::WindowOverflow);
    assert!(exp.is_null());
    assert!(last_error().contains("20"));

    let st = unsafe { bn_experiment_new_spin(0, bn_settings_pair_coherent_default(), &mut exp) };
    assert_eq!(st, BnStatus::Domain);

    let mut e = BnChEvaluation::default();
    assert_eq!(unsafe { bn_experiment_evaluate(ptr::null(), 0.0, &mut e) }, BnStatus::NullPointer);

    let st = unsafe { bn_experiment_new_quadrature(1.1, 1e-16, bn_settings_pair_coherent_default(), 1.0, ptr::null_mut()) };
    assert_eq!(st, BnStatus::NullPointer);
}

#[test]
fn success_clears_last_error() {
    let mut exp = ptr::null_mut();
    unsafe { bn_experiment_new_spin(0, bn_settings_pair_coherent_default(), &mut exp) };
    assert!(!last_error().is_empty());
    let st = unsafe { bn_experiment_new_spin(1, bn_settings_pair_coherent_default(), &mut exp) };
    assert_eq!(st, BnStatus::Ok);
    assert!(last_error().is_empty());
    unsafe { bn_experiment_free(exp) };
}

#[test]
fn spin_distribution_handle() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { bn_distribution_spin(1, 0.0, 0.0, &mut d) }, BnStatus::Ok);
    let (mut a, mut b, mut c, mut e) = (0, 0, 0, 0);
    assert_eq!(unsafe { bn_distribution_window(d, &mut a, &mut b, &mut c, &mut e) }, BnStatus::Ok);
    assert_eq!((a, b, c, e), (-1, 1, -1, 1));
    assert!((unsafe { bn_distribution_get(d, 1, 1) } - 0.5).abs() < 1e-15);
    assert_eq!(unsafe { bn_distribution_get(d, 5, 5) }, 0.0);
    let (mut pp, mut pa, mut pb) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { bn_distribution_binarize(d, 0.0, &mut pp, &mut pa, &mut pb) }, BnStatus::Ok);
    assert!((pp - 0.5).abs() < 1e-15);
    unsafe { bn_distribution_free(d) };
    unsafe { bn_distribution_free(ptr::null_mut()) };
}

#[test]
fn exact_distribution_and_psi_search() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { bn_distribution_exact(0.0, 2.0, 1e-16, 0.1, 0.2, &mut d) }, BnStatus::Ok);
    let (mut pp, mut pa, mut pb) = (0.0, 0.0, 0.0);
    unsafe { bn_distribution_binarize(d, 1.0, &mut pp, &mut pa, &mut pb) };
    assert!((pp - pa * pb).abs() < 1e-12);
    unsafe { bn_distribution_free(d) };

    let mut psi = 0.0;
    let mut e = BnChEvaluation::default();
    assert_eq!(unsafe { bn_spin_optimize_psi(1, 0.0, &mut psi, &mut e) }, BnStatus::Ok);
    assert!((e.s - 0.5 * (1.0 + 2f64.sqrt())).abs() < 1e-9);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bellnoise.h")).unwrap();
    for name in [
        "BnStatus",
        "BN_STATUS_OK",
        "BN_STATUS_WINDOW_OVERFLOW",
        "typedef struct BnExperiment BnExperiment",
        "bn_experiment_new_quadrature",
        "bn_experiment_sigma_cutoff",
        "bn_distribution_free",
        "bn_last_error_message",
        "BnChEvaluation",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let version = unsafe { CStr::from_ptr(bn_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}
