//! C ABI for `bwgeo`.
//!
//! Matrices and geodesic segments are opaque heap handles owned by the
//! caller and released with the matching `*_free` function. Every fallible
//! call returns a [`BwStatus`]; on failure a description of the last error on
//! the calling thread is available from [`bw_last_error_message`].
//!
//! Matrix data crosses the boundary in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bwgeo::cov::{self, BallParam, CovPoint, GeodesicSegment, Multiplicity};
use bwgeo::spd::{self, SpdPoint};
use bwgeo::stratum::{self, StratumPoint};
use bwgeo::{Error, Tolerances};
use nalgebra::DMatrix;

/// Opaque dense matrix.
pub struct BwMatrix(DMatrix<f64>);

/// Opaque minimizing geodesic segment.
pub struct BwSegment(GeodesicSegment);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotPsd = 3,
    DimensionMismatch = 4,
    NotUnique = 5,
    ParamOutOfRange = 6,
    ConvergenceFailure = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwTolerances {
    pub rank_rel: f64,
    pub sym_abs: f64,
    pub eig_cluster: f64,
    pub geo_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwMultiplicity {
    One = 1,
    Two = 2,
    Infinite = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BwGeodesicCount {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub r: usize,
    pub in_stratum: BwMultiplicity,
    pub in_cov: BwMultiplicity,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BwStatus {
    match e {
        Error::NotPsd { .. } | Error::NotSpd { .. } => BwStatus::NotPsd,
        Error::DimensionMismatch(_) | Error::NotSquare { .. } | Error::RankMismatch { .. } => {
            BwStatus::DimensionMismatch
        }
        Error::NotUnique { .. } => BwStatus::NotUnique,
        Error::ParamOutOfBall { .. } | Error::ParamOutOfRange(_) | Error::InvalidTolerances(_) => {
            BwStatus::ParamOutOfRange
        }
        Error::ConvergenceFailure => BwStatus::ConvergenceFailure,
        _ => BwStatus::InvalidInput,
    }
}

struct Fail(BwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BwStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            BwStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            BwStatus::Panic
        }
    }
}

unsafe fn matrix_ref<'a>(m: *const BwMatrix, what: &str) -> Result<&'a DMatrix<f64>, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null(what))
}

unsafe fn tolerances(tol: *const BwTolerances) -> Result<Tolerances, Fail> {
    let t = match tol.as_ref() {
        None => Tolerances::default(),
        Some(t) => Tolerances {
            rank_rel: t.rank_rel,
            sym_abs: t.sym_abs,
            eig_cluster: t.eig_cluster,
            geo_tol: t.geo_tol,
        },
    };
    t.validate()?;
    Ok(t)
}

unsafe fn points(a: *const BwMatrix, b: *const BwMatrix, tol: &Tolerances) -> Result<(CovPoint, CovPoint), Fail> {
    let pa = CovPoint::from_matrix(matrix_ref(a, "a")?, tol)?;
    let pb = CovPoint::from_matrix(matrix_ref(b, "b")?, tol)?;
    if pa.dim() != pb.dim() {
        return Err(Error::DimensionMismatch(format!("{0}x{0} and {1}x{1}", pa.dim(), pb.dim())).into());
    }
    Ok((pa, pb))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn multiplicity(m: Multiplicity) -> BwMultiplicity {
    match m {
        Multiplicity::One => BwMultiplicity::One,
        Multiplicity::Two => BwMultiplicity::Two,
        Multiplicity::Infinite => BwMultiplicity::Infinite,
    }
}

/// Default tolerances.
#[no_mangle]
pub extern "C" fn bw_tolerances_default() -> BwTolerances {
    let t = Tolerances::default();
    BwTolerances {
        rank_rel: t.rank_rel,
        sym_abs: t.sym_abs,
        eig_cluster: t.eig_cluster,
        geo_tol: t.geo_tol,
    }
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn bw_status_message(status: BwStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        BwStatus::Ok => b"ok\0",
        BwStatus::NullPointer => b"null pointer argument\0",
        BwStatus::InvalidInput => b"invalid input\0",
        BwStatus::NotPsd => b"matrix is not positive semi-definite\0",
        BwStatus::DimensionMismatch => b"dimension mismatch\0",
        BwStatus::NotUnique => b"result is not unique\0",
        BwStatus::ParamOutOfRange => b"parameter out of range\0",
        BwStatus::ConvergenceFailure => b"decomposition did not converge\0",
        BwStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Message for the most recent failed call on this thread, or an empty
/// string. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a `rows x cols` matrix from `rows * cols` row-major values.
///
/// # Safety
/// `data` must point to `rows * cols` readable `double`s (it may be null
/// when that product is 0) and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bw_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut BwMatrix,
) -> BwStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(BwStatus::InvalidInput, "size overflow".into()))?;
        let values: &[f64] = if len == 0 {
            &[]
        } else if data.is_null() {
            return Err(null("data"));
        } else {
            std::slice::from_raw_parts(data, len)
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Fail(BwStatus::InvalidInput, "non-finite entry".into()));
        }
        emit(out, BwMatrix(DMatrix::from_row_slice(rows, cols, values)))
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bw_matrix_free(m: *mut BwMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of rows, 0 for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bw_matrix_rows(m: *const BwMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nrows())
}

/// Number of columns, 0 for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bw_matrix_cols(m: *const BwMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.ncols())
}

/// Copies the entries in row-major order into `out`, which holds `len`
/// values; `len` must equal rows * cols.
///
/// # Safety
/// `m` must be a live handle and `out` must point to `len` writable
/// `double`s.
#[no_mangle]
pub unsafe extern "C" fn bw_matrix_copy_data(m: *const BwMatrix, out: *mut f64, len: usize) -> BwStatus {
    guard(|| {
        let m = matrix_ref(m, "m")?;
        if len != m.len() {
            return Err(Fail(
                BwStatus::DimensionMismatch,
                format!("buffer holds {len} values, matrix has {}", m.len()),
            ));
        }
        if len == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (slot, v) in dst.iter_mut().zip(m.transpose().iter()) {
            *slot = *v;
        }
        Ok(())
    })
}

/// Bures-Wasserstein distance between two PSD matrices. `tol` may be null
/// for the defaults.
///
/// # Safety
/// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bw_distance(
    a: *const BwMatrix,
    b: *const BwMatrix,
    tol: *const BwTolerances,
    out: *mut f64,
) -> BwStatus {
    guard(|| {
        let tol = tolerances(tol)?;
        let (pa, pb) = points(a, b, &tol)?;
        let d = cov::bw_distance(&pa, &pb)?;
        *out.as_mut().ok_or_else(|| null("out"))? = d;
        Ok(())
    })
}

/// Point at time `t` in `[0, 1]` on the canonical minimizing geodesic.
///
/// # Safety
/// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bw_interpolate(
    a: *const BwMatrix,
    b: *const BwMatrix,
    t: f64,
    tol: *const BwTolerances,
    out: *mut *mut BwMatrix,
) -> BwStatus {
    guard(|| {
        let tol = tolerances(tol)?;
        let (pa, pb) = points(a, b, &tol)?;
        let m = cov::interpolate(&pa, &pb, t, &tol)?;
        emit(out, BwMatrix(m.into_inner()))
    })
}

/// Logarithm of `b` at `a` when it is unique. Fails with
/// `NotUnique` when several minimizing tangents exist and with
/// `DimensionMismatch` when the ranks differ.
///
/// # Safety
/// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bw_log_unique(
    a: *const BwMatrix,
    b: *const BwMatrix,
    tol: *const BwTolerances,
    out: *mut *mut BwMatrix,
) -> BwStatus {
    guard(|| {
        let tol = tolerances(tol)?;
        let (pa, pb) = points(a, b, &tol)?;
        let v = if pa.is_full_rank() && pb.is_full_rank() {
            spd::log_full(&SpdPoint::from_cov(pa)?, &SpdPoint::from_cov(pb)?, &tol)?
        } else {
            stratum::log_map_stratum(&StratumPoint::from_cov(pa), &pb, &tol)?.v
        };
        emit(out, BwMatrix(v.into_inner()))
    })
}

/// Number of minimizing geodesics between `a` and `b`.
///
/// # Safety
/// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bw_count_geodesics(
    a: *const BwMatrix,
    b: *const BwMatrix,
    tol: *const BwTolerances,
    out: *mut BwGeodesicCount,
) -> BwStatus {
    guard(|| {
        let tol = tolerances(tol)?;
        let (pa, pb) = points(a, b, &tol)?;
        let c = cov::count_minimizing_geodesics(&pa, &pb, &tol)?;
        *out.as_mut().ok_or_else(|| null("out"))? = BwGeodesicCount {
            n: c.n,
            k: c.k,
            l: c.l,
            r: c.r,
            in_stratum: multiplicity(c.in_stratum),
            in_cov: multiplicity(c.in_cov),
        };
        Ok(())
    })
}

/// Minimizing geodesic selected by the contraction `r0`, of shape
/// `(rank a - r) x (rank b - r)` with `r = rank(ab)`. A null `r0` selects
/// the zero parameter.
///
/// # Safety
/// `a` and `b` must be live handles, `r0` and `tol` null or valid, `out`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn bw_minimizing_geodesic(
    a: *const BwMatrix,
    b: *const BwMatrix,
    r0: *const BwMatrix,
    tol: *const BwTolerances,
    out: *mut *mut BwSegment,
) -> BwStatus {
    guard(|| {
        let tol = tolerances(tol)?;
        let (pa, pb) = points(a, b, &tol)?;
        let param = match r0.as_ref() {
            Some(m) => BallParam::new(m.0.clone(), &tol)?,
            None => {
                let (rows, cols) = cov::ball_dims(&pa, &pb, &tol)?;
                BallParam::zero(rows, cols)
            }
        };
        let seg = cov::minimizing_geodesic(&pa, &pb, &param, &tol)?;
        emit(out, BwSegment(seg))
    })
}

/// Point of the segment at time `t` (any real `t`; the segment is
/// minimizing on `[0, 1]`).
///
/// # Safety
/// `seg` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bw_segment_eval(seg: *const BwSegment, t: f64, out: *mut *mut BwMatrix) -> BwStatus {
    guard(|| {
        let seg = seg.as_ref().ok_or_else(|| null("seg"))?;
        if !t.is_finite() {
            return Err(Fail(BwStatus::ParamOutOfRange, "t is not finite".into()));
        }
        emit(out, BwMatrix(seg.0.eval(t).into_inner()))
    })
}

/// Symmetric mixed term `M` of the segment `(1-t)^2 A + 2t(1-t) M + t^2 B`.
///
/// # Safety
/// `seg` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bw_segment_mixed(seg: *const BwSegment, out: *mut *mut BwMatrix) -> BwStatus {
    guard(|| {
        let seg = seg.as_ref().ok_or_else(|| null("seg"))?;
        emit(out, BwMatrix(seg.0.mixed.as_matrix().clone()))
    })
}

/// Releases a segment. Null is ignored.
///
/// # Safety
/// `seg` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bw_segment_free(seg: *mut BwSegment) {
    if !seg.is_null() {
        drop(Box::from_raw(seg));
    }
}
