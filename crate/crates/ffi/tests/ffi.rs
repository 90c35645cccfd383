use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use bwgeo_ffi::*;

struct Owned(*mut BwMatrix);

impl Drop for Owned {
    fn drop(&mut self) {
        unsafe { bw_matrix_free(self.0) }
    }
}

fn matrix(rows: usize, data: &[f64]) -> Owned {
    let mut out = ptr::null_mut();
    let st = unsafe { bw_matrix_new(rows, data.len() / rows, data.as_ptr(), &mut out) };
    assert_eq!(st, BwStatus::Ok);
    Owned(out)
}

fn data(m: *const BwMatrix) -> Vec<f64> {
    let len = unsafe { bw_matrix_rows(m) * bw_matrix_cols(m) };
    let mut v = vec![0.0; len];
    assert_eq!(unsafe { bw_matrix_copy_data(m, v.as_mut_ptr(), len) }, BwStatus::Ok);
    v
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bw_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn pair() -> (Owned, Owned) {
    (
        matrix(3, &[1., 0., 0., 0., 1., 0., 0., 0., 0.]),
        matrix(3, &[1., 0., 0., 0., 0., 0., 0., 0., 1.]),
    )
}

#[test]
fn matrix_round_trip_is_row_major() {
    let m = matrix(2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(unsafe { (bw_matrix_rows(m.0), bw_matrix_cols(m.0)) }, (2, 3));
    assert_eq!(data(m.0), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let mut short = [0.0; 5];
    let st = unsafe { bw_matrix_copy_data(m.0, short.as_mut_ptr(), 5) };
    assert_eq!(st, BwStatus::DimensionMismatch);
}

#[test]
fn rejects_bad_arguments() {
    let mut out = ptr::null_mut();
    let nan = [f64::NAN];
    assert_eq!(
        unsafe { bw_matrix_new(1, 1, nan.as_ptr(), &mut out) },
        BwStatus::InvalidInput
    );
    assert!(out.is_null());
    let one = [1.0];
    assert_eq!(
        unsafe { bw_matrix_new(1, 1, one.as_ptr(), ptr::null_mut()) },
        BwStatus::NullPointer
    );

    let (a, _) = pair();
    let mut d = 0.0;
    assert_eq!(
        unsafe { bw_distance(a.0, ptr::null(), ptr::null(), &mut d) },
        BwStatus::NullPointer
    );
    let neg = matrix(3, &[1., 0., 0., 0., -1., 0., 0., 0., 1.]);
    assert_eq!(
        unsafe { bw_distance(a.0, neg.0, ptr::null(), &mut d) },
        BwStatus::NotPsd
    );
    assert!(last_error().contains("positive semi-definite"));
    let small = matrix(1, &[1.0]);
    assert_eq!(
        unsafe { bw_distance(a.0, small.0, ptr::null(), &mut d) },
        BwStatus::DimensionMismatch
    );

    let mut tol = bw_tolerances_default();
    tol.rank_rel = -1.0;
    assert_eq!(
        unsafe { bw_distance(a.0, a.0, &tol, &mut d) },
        BwStatus::ParamOutOfRange
    );
}

#[test]
fn distance_interpolation_and_counts() {
    let (a, b) = pair();
    let mut d = 0.0;
    assert_eq!(unsafe { bw_distance(a.0, b.0, ptr::null(), &mut d) }, BwStatus::Ok);
    assert!((d - 2f64.sqrt()).abs() < 1e-12);

    let mut mid = ptr::null_mut();
    assert_eq!(
        unsafe { bw_interpolate(a.0, b.0, 0.5, ptr::null(), &mut mid) },
        BwStatus::Ok
    );
    let mid = Owned(mid);
    let expected = [1.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.25];
    for (x, y) in data(mid.0).iter().zip(expected) {
        assert!((x - y).abs() < 1e-12);
    }
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { bw_interpolate(a.0, b.0, 1.5, ptr::null(), &mut bad) },
        BwStatus::ParamOutOfRange
    );

    let mut c = BwGeodesicCount {
        n: 0,
        k: 0,
        l: 0,
        r: 0,
        in_stratum: BwMultiplicity::One,
        in_cov: BwMultiplicity::One,
    };
    assert_eq!(
        unsafe { bw_count_geodesics(a.0, b.0, ptr::null(), &mut c) },
        BwStatus::Ok
    );
    assert_eq!((c.n, c.k, c.l, c.r), (3, 2, 2, 1));
    assert_eq!(
        (c.in_stratum, c.in_cov),
        (BwMultiplicity::Two, BwMultiplicity::Infinite)
    );
}

#[test]
fn logarithm_uniqueness() {
    let (a, b) = pair();
    let mut v = ptr::null_mut();
    assert_eq!(
        unsafe { bw_log_unique(a.0, b.0, ptr::null(), &mut v) },
        BwStatus::NotUnique
    );
    assert!(v.is_null());

    let b4 = matrix(3, &[4., 0., 0., 0., 4., 0., 0., 0., 0.]);
    assert_eq!(unsafe { bw_log_unique(a.0, b4.0, ptr::null(), &mut v) }, BwStatus::Ok);
    let v = Owned(v);
    // log of 4Σ at Σ is 2Σ
    let expected = [2., 0., 0., 0., 2., 0., 0., 0., 0.];
    for (x, y) in data(v.0).iter().zip(expected) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn segments_from_ball_parameters() {
    let (a, b) = pair();
    let r0 = matrix(1, &[-1.0]);
    let mut seg = ptr::null_mut();
    assert_eq!(
        unsafe { bw_minimizing_geodesic(a.0, b.0, r0.0, ptr::null(), &mut seg) },
        BwStatus::Ok
    );
    let mut at = ptr::null_mut();
    assert_eq!(unsafe { bw_segment_eval(seg, 0.5, &mut at) }, BwStatus::Ok);
    let at = Owned(at);
    let u = 0.25;
    let expected = [1.0, 0.0, 0.0, 0.0, 0.25, u, 0.0, u, 0.25];
    let got = data(at.0);
    let alt = [1.0, 0.0, 0.0, 0.0, 0.25, -u, 0.0, -u, 0.25];
    let close = |e: &[f64]| got.iter().zip(e).all(|(x, y)| (x - y).abs() < 1e-12);
    assert!(close(&expected) || close(&alt), "{got:?}");

    let mut mixed = ptr::null_mut();
    assert_eq!(unsafe { bw_segment_mixed(seg, &mut mixed) }, BwStatus::Ok);
    let mixed = Owned(mixed);
    assert_eq!(unsafe { bw_matrix_rows(mixed.0) }, 3);
    unsafe { bw_segment_free(seg) };

    let mut zero = ptr::null_mut();
    assert_eq!(
        unsafe { bw_minimizing_geodesic(a.0, b.0, ptr::null(), ptr::null(), &mut zero) },
        BwStatus::Ok
    );
    unsafe { bw_segment_free(zero) };

    let big = matrix(1, &[2.0]);
    let mut out = ptr::null_mut();
    let st = unsafe { bw_minimizing_geodesic(a.0, b.0, big.0, ptr::null(), &mut out) };
    assert_eq!(st, BwStatus::ParamOutOfRange);
    let wrong = matrix(1, &[0.1, 0.2]);
    let st = unsafe { bw_minimizing_geodesic(a.0, b.0, wrong.0, ptr::null(), &mut out) };
    assert_eq!(st, BwStatus::DimensionMismatch);
}

fn c_compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Some(cc) = c_compiler() else {
        eprintln!("no C compiler found; skipping header check");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "bwgeo.h"
int demo(void) {
    double v[4] = {2, 0, 0, 1};
    BwMatrix *a = NULL;
    BwTolerances tol = bw_tolerances_default();
    double d = 0.0;
    if (bw_matrix_new(2, 2, v, &a) != BW_STATUS_OK) return 1;
    BwStatus st = bw_distance(a, a, &tol, &d);
    bw_matrix_free(a);
    return st == BW_STATUS_OK ? 0 : (int)st;
}
"#,
    )
    .unwrap();
    for lang in ["c", "c++"] {
        let out = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
