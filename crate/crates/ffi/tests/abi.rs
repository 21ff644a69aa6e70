use std::ffi::CStr;
use std::ptr;

use qsoftcover_ffi::*;

fn last_error() -> String {
    let p = qsc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn state_round_trip_and_entropy() {
    unsafe {
        let re = [0.75, 0.0, 0.0, 0.25];
        let mut a = ptr::null_mut();
        assert_eq!(qsc_state_from_matrix(2, re.as_ptr(), ptr::null(), &mut a), QscStatus::Ok);
        assert_eq!(qsc_state_dim(a), 2);
        let mut b = ptr::null_mut();
        let mixed = [0.5, 0.0, 0.0, 0.5];
        assert_eq!(qsc_state_from_matrix(2, mixed.as_ptr(), ptr::null(), &mut b), QscStatus::Ok);
        let mut d = 0.0;
        assert_eq!(qsc_relative_entropy(a, b, &mut d), QscStatus::Ok);
        let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((d - (1.0 - h)).abs() < 1e-12);
        qsc_state_free(a);
        qsc_state_free(b);
    }
}

#[test]
fn support_failure_is_infinite() {
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        qsc_state_from_matrix(2, [0.5, 0.0, 0.0, 0.5].as_ptr(), ptr::null(), &mut a);
        qsc_state_from_matrix(2, [1.0, 0.0, 0.0, 0.0].as_ptr(), ptr::null(), &mut b);
        let mut d = 0.0;
        assert_eq!(qsc_relative_entropy(a, b, &mut d), QscStatus::Ok);
        assert_eq!(d, f64::INFINITY);
        qsc_state_free(a);
        qsc_state_free(b);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        let bad = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(qsc_state_from_matrix(2, bad.as_ptr(), ptr::null(), &mut s), QscStatus::MalformedInput);
        assert!(s.is_null());
        assert!(last_error().contains("malformed"));

        assert_eq!(qsc_state_from_matrix(2, ptr::null(), ptr::null(), &mut s), QscStatus::NullPointer);
        assert!(last_error().contains("re"));

        let mut ch = ptr::null_mut();
        assert_eq!(qsc_channel_depolarizing(2, 2.0, &mut ch), QscStatus::Precondition);

        let mut d = 0.0;
        assert_eq!(qsc_relative_entropy(ptr::null(), ptr::null(), &mut d), QscStatus::NullPointer);

        let mut ok = ptr::null_mut();
        assert_eq!(qsc_channel_identity(2, &mut ok), QscStatus::Ok);
        assert!(qsc_last_error().is_null());
        qsc_channel_free(ok);
    }
}

#[test]
fn dimension_mismatch() {
    unsafe {
        let (mut st, mut ch) = (ptr::null_mut(), ptr::null_mut());
        qsc_state_random(3, 3, 1, &mut st);
        qsc_channel_identity(2, &mut ch);
        let mut q = 0.0;
        assert_eq!(qsc_qcover_q2(st, ch, &mut q), QscStatus::DimensionMismatch);
        qsc_state_free(st);
        qsc_channel_free(ch);
    }
}

#[test]
fn cq_orthogonal_values() {
    unsafe {
        let mut e = ptr::null_mut();
        assert_eq!(qsc_ensemble_binary_orthogonal(&mut e), QscStatus::Ok);
        let mut v = 0.0;
        assert_eq!(qsc_cq_exact(e, 1, &mut v), QscStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(qsc_cq_exact(e, 2, &mut v), QscStatus::Ok);
        assert!((v - 0.5).abs() < 1e-12);
        qsc_ensemble_free(e);

        let (w, q) = ([1.0, 0.0, 0.0, 1.0], [0.5, 0.5]);
        let mut c = ptr::null_mut();
        assert_eq!(qsc_ensemble_from_classical(2, 2, w.as_ptr(), q.as_ptr(), &mut c), QscStatus::Ok);
        assert_eq!(qsc_cq_exact(c, 2, &mut v), QscStatus::Ok);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(qsc_cq_q2(c, &mut v), QscStatus::Ok);
        assert!((v - 2.0).abs() < 1e-12);
        qsc_ensemble_free(c);
    }
}

#[test]
fn kraus_channel_matches_identity() {
    unsafe {
        let k = [1.0, 0.0, 0.0, 1.0];
        let (mut a, mut b, mut st) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(qsc_channel_from_kraus(2, 2, 1, k.as_ptr(), ptr::null(), &mut a), QscStatus::Ok);
        qsc_channel_identity(2, &mut b);
        qsc_state_random(2, 2, 7, &mut st);
        let (mut qa, mut qb) = (0.0, 0.0);
        qsc_qcover_q2(st, a, &mut qa);
        qsc_qcover_q2(st, b, &mut qb);
        assert_eq!(qa.to_bits(), qb.to_bits());
        let bad = [1.0, 0.0, 0.0, 0.5];
        let mut c = ptr::null_mut();
        assert_eq!(qsc_channel_from_kraus(2, 2, 1, bad.as_ptr(), ptr::null(), &mut c), QscStatus::MalformedInput);
        for p in [a, b] {
            qsc_channel_free(p);
        }
        qsc_state_free(st);
    }
}

#[test]
fn mc_is_deterministic_and_within_bound() {
    unsafe {
        let (mut st, mut ch) = (ptr::null_mut(), ptr::null_mut());
        qsc_state_random(4, 4, 3, &mut st);
        qsc_channel_random(4, 2, 2, 5, &mut ch);
        let run = || {
            let (mut m, mut s, mut b) = (0.0, 0.0, 0.0);
            assert_eq!(qsc_qcover_mc(st, ch, 2, 100, 9, &mut m, &mut s, &mut b), QscStatus::Ok);
            (m, s, b)
        };
        let (m1, s1, b1) = run();
        let (m2, _, _) = run();
        assert_eq!(m1.to_bits(), m2.to_bits());
        assert!(m1 <= b1 + 3.0 * s1);

        let (mut pure, mut id) = (ptr::null_mut(), ptr::null_mut());
        let re = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        qsc_state_from_matrix(4, re.as_ptr(), ptr::null(), &mut pure);
        qsc_channel_identity(2, &mut id);
        let (mut m, mut s, mut b) = (0.0, 0.0, 0.0);
        assert_eq!(qsc_decouple_mc(pure, 2, 2, id, 10, 1, &mut m, &mut s, &mut b), QscStatus::Ok);
        assert!((m - 1.0).abs() < 1e-10);
        assert!(m <= b);

        qsc_state_free(st);
        qsc_state_free(pure);
        qsc_channel_free(ch);
        qsc_channel_free(id);
    }
}

#[test]
fn h_min_of_product_state() {
    unsafe {
        let re = [0.9, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut st = ptr::null_mut();
        assert_eq!(qsc_state_from_matrix(4, re.as_ptr(), ptr::null(), &mut st), QscStatus::Ok);
        let mut h = 0.0;
        assert_eq!(qsc_h_min(st, 2, 2, &mut h), QscStatus::Ok);
        assert!((h + 0.9f64.log2()).abs() < 1e-6, "{h}");
        qsc_state_free(st);
    }
}

#[test]
fn free_accepts_null() {
    unsafe {
        qsc_state_free(ptr::null_mut());
        qsc_channel_free(ptr::null_mut());
        qsc_ensemble_free(ptr::null_mut());
        assert_eq!(qsc_state_dim(ptr::null()), 0);
    }
}
