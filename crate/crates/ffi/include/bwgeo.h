#ifndef BWGEO_H
#define BWGEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BwStatus {
  BW_STATUS_OK = 0,
  BW_STATUS_NULL_POINTER = 1,
  BW_STATUS_INVALID_INPUT = 2,
  BW_STATUS_NOT_PSD = 3,
  BW_STATUS_DIMENSION_MISMATCH = 4,
  BW_STATUS_NOT_UNIQUE = 5,
  BW_STATUS_PARAM_OUT_OF_RANGE = 6,
  BW_STATUS_CONVERGENCE_FAILURE = 7,
  BW_STATUS_PANIC = 99,
} BwStatus;

typedef enum BwMultiplicity {
  BW_MULTIPLICITY_ONE = 1,
  BW_MULTIPLICITY_TWO = 2,
  BW_MULTIPLICITY_INFINITE = 3,
} BwMultiplicity;

// Opaque dense matrix.
typedef struct BwMatrix BwMatrix;

// Opaque minimizing geodesic segment.
typedef struct BwSegment BwSegment;

typedef struct BwTolerances {
  double rank_rel;
  double sym_abs;
  double eig_cluster;
  double geo_tol;
} BwTolerances;

typedef struct BwGeodesicCount {
  size_t n;
  size_t k;
  size_t l;
  size_t r;
  enum BwMultiplicity in_stratum;
  enum BwMultiplicity in_cov;
} BwGeodesicCount;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default tolerances.
struct BwTolerances bw_tolerances_default(void);

// Static description of a status code. Never null.
const char *bw_status_message(enum BwStatus status);

// Message for the most recent failed call on this thread, or an empty
// string. Valid until the next call into this library on the same thread.
const char *bw_last_error_message(void);

// Creates a `rows x cols` matrix from `rows * cols` row-major values.
//
// # Safety
// `data` must point to `rows * cols` readable `double`s (it may be null
// when that product is 0) and `out` must be a valid pointer.
enum BwStatus bw_matrix_new(size_t rows, size_t cols, const double *data, struct BwMatrix **out);

// Releases a matrix. Null is ignored.
//
// # Safety
// `m` must be null or a handle returned by this library, not yet freed.
void bw_matrix_free(struct BwMatrix *m);

// Number of rows, 0 for null.
//
// # Safety
// `m` must be null or a live handle.
size_t bw_matrix_rows(const struct BwMatrix *m);

// Number of columns, 0 for null.
//
// # Safety
// `m` must be null or a live handle.
size_t bw_matrix_cols(const struct BwMatrix *m);

// Copies the entries in row-major order into `out`, which holds `len`
// values; `len` must equal rows * cols.
//
// # Safety
// `m` must be a live handle and `out` must point to `len` writable
// `double`s.
enum BwStatus bw_matrix_copy_data(const struct BwMatrix *m, double *out, size_t len);

// Bures-Wasserstein distance between two PSD matrices. `tol` may be null
// for the defaults.
//
// # Safety
// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
enum BwStatus bw_distance(const struct BwMatrix *a,
                          const struct BwMatrix *b,
                          const struct BwTolerances *tol,
                          double *out);

// Point at time `t` in `[0, 1]` on the canonical minimizing geodesic.
//
// # Safety
// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
enum BwStatus bw_interpolate(const struct BwMatrix *a,
                             const struct BwMatrix *b,
                             double t,
                             const struct BwTolerances *tol,
                             struct BwMatrix **out);

// Logarithm of `b` at `a` when it is unique. Fails with
// `NotUnique` when several minimizing tangents exist and with
// `DimensionMismatch` when the ranks differ.
//
// # Safety
// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
enum BwStatus bw_log_unique(const struct BwMatrix *a,
                            const struct BwMatrix *b,
                            const struct BwTolerances *tol,
                            struct BwMatrix **out);

// Number of minimizing geodesics between `a` and `b`.
//
// # Safety
// `a` and `b` must be live handles, `tol` null or valid, `out` valid.
enum BwStatus bw_count_geodesics(const struct BwMatrix *a,
                                 const struct BwMatrix *b,
                                 const struct BwTolerances *tol,
                                 struct BwGeodesicCount *out);

// Minimizing geodesic selected by the contraction `r0`, of shape
// `(rank a - r) x (rank b - r)` with `r = rank(ab)`. A null `r0` selects
// the zero parameter.
//
// # Safety
// `a` and `b` must be live handles, `r0` and `tol` null or valid, `out`
// valid.
enum BwStatus bw_minimizing_geodesic(const struct BwMatrix *a,
                                     const struct BwMatrix *b,
                                     const struct BwMatrix *r0,
                                     const struct BwTolerances *tol,
                                     struct BwSegment **out);

// Point of the segment at time `t` (any real `t`; the segment is
// minimizing on `[0, 1]`).
//
// # Safety
// `seg` must be a live handle and `out` valid.
enum BwStatus bw_segment_eval(const struct BwSegment *seg, double t, struct BwMatrix **out);

// Symmetric mixed term `M` of the segment `(1-t)^2 A + 2t(1-t) M + t^2 B`.
//
// # Safety
// `seg` must be a live handle and `out` valid.
enum BwStatus bw_segment_mixed(const struct BwSegment *seg, struct BwMatrix **out);

// Releases a segment. Null is ignored.
//
// # Safety
// `seg` must be null or a handle returned by this library, not yet freed.
void bw_segment_free(struct BwSegment *seg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BWGEO_H */
