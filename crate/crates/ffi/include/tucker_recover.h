#ifndef TUCKER_RECOVER_H
#define TUCKER_RECOVER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum TrStatus {
  TR_STATUS_OK = 0,
  TR_STATUS_NULL_POINTER = 1,
  TR_STATUS_INVALID_ARGUMENT = 2,
  TR_STATUS_SHAPE_MISMATCH = 3,
  TR_STATUS_RANK_EXCEEDS_DIMENSION = 4,
  TR_STATUS_DEGENERATE_STEP = 5,
  TR_STATUS_IO = 6,
  TR_STATUS_PANIC = 7,
} TrStatus;

// Solver selector for [`tr_solve`].
typedef enum TrMethod {
  TR_METHOD_SM_QRGD = 0,
  TR_METHOD_SEMPIHT = 1,
  TR_METHOD_TIHT_CIHT = 2,
  TR_METHOD_TIHT_NIHT = 3,
  TR_METHOD_RGD = 4,
} TrMethod;

// Final state of a solve.
typedef enum TrSolveStatus {
  TR_SOLVE_STATUS_CONVERGED = 0,
  TR_SOLVE_STATUS_MAX_ITERS = 1,
  TR_SOLVE_STATUS_DIVERGED = 2,
  TR_SOLVE_STATUS_STATIONARY = 3,
} TrSolveStatus;

// Opaque solver result.
typedef struct TrResult TrResult;

// Opaque entry-sampling operator.
typedef struct TrSampling TrSampling;

// Opaque dense tensor.
typedef struct TrTensor TrTensor;

// Options for [`tr_solve`]. Obtain defaults from [`tr_solve_options_default`].
typedef struct TrSolveOptions {
  size_t max_iters;
  double tol_rel_err;
  // A positive value selects a constant step; 0 selects the normalized step.
  double constant_step;
  size_t tangent_mode;
} TrSolveOptions;

typedef struct TrGammaReport {
  double gamma1;
  double gamma2;
  double threshold1;
  double threshold2;
  bool gamma1_contracts;
  bool gamma2_contracts;
} TrGammaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *tr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *tr_version(void);

// Creates a tensor from `d` dimensions and, if `data` is non-null,
// `prod(dims)` column-major values (mode 0 fastest); otherwise zeros.
//
// # Safety
// `dims` must point to `d` values and `data` (if non-null) to `prod(dims)`.
enum TrStatus tr_tensor_new(const size_t *dims,
                            size_t d,
                            const double *data,
                            struct TrTensor **out);

// A random tensor of multilinear rank `ranks`, built by truncating a
// Gaussian tensor; deterministic in `seed`.
//
// # Safety
// `dims` and `ranks` must each point to `d` values.
enum TrStatus tr_tensor_synth(const size_t *dims,
                              const size_t *ranks,
                              size_t d,
                              uint64_t seed,
                              struct TrTensor **out);

// # Safety
// `t` must be null or a handle from this library not yet freed.
void tr_tensor_free(struct TrTensor *t);

// Order of the tensor, or 0 for a null handle.
//
// # Safety
// `t` must be null or a live handle.
size_t tr_tensor_order(const struct TrTensor *t);

// Number of entries, or 0 for a null handle.
//
// # Safety
// `t` must be null or a live handle.
size_t tr_tensor_len(const struct TrTensor *t);

// Copies the dimensions into `dims`, which holds `cap` values.
//
// # Safety
// `t` must be a live handle and `dims` must have room for `cap` values.
enum TrStatus tr_tensor_dims(const struct TrTensor *t, size_t *dims, size_t cap);

// Copies the column-major entries into `data`, which holds `cap` values.
//
// # Safety
// `t` must be a live handle and `data` must have room for `cap` values.
enum TrStatus tr_tensor_data(const struct TrTensor *t, double *data, size_t cap);

// Frobenius distance between two tensors of equal shape.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum TrStatus tr_tensor_distance(const struct TrTensor *a, const struct TrTensor *b, double *out);

// Samples each entry independently with probability `rho`.
//
// # Safety
// `dims` must point to `d` values.
enum TrStatus tr_sampling_new(const size_t *dims,
                              size_t d,
                              double rho,
                              uint64_t seed,
                              struct TrSampling **out);

// # Safety
// `op` must be null or a live handle.
void tr_sampling_free(struct TrSampling *op);

// Number of observed entries, or 0 for a null handle.
//
// # Safety
// `op` must be null or a live handle.
size_t tr_sampling_len(const struct TrSampling *op);

// Writes the observed entries of `t` into `y`, which holds `cap` values.
//
// # Safety
// `op` and `t` must be live handles; `y` must have room for `cap` values.
enum TrStatus tr_sampling_apply(const struct TrSampling *op,
                                const struct TrTensor *t,
                                double *y,
                                size_t cap);

struct TrSolveOptions tr_solve_options_default(void);

// Recovers a rank-`ranks` tensor from the `m` samples `y` of `op`.
// `truth` may be null; when given, relative errors are measured against it.
//
// # Safety
// Handles must be live; `y` must point to `m` values and `ranks` to as many
// values as the operator's order.
enum TrStatus tr_solve(enum TrMethod method,
                       const struct TrSampling *op,
                       const double *y,
                       size_t m,
                       const size_t *ranks,
                       const struct TrSolveOptions *opts,
                       const struct TrTensor *truth,
                       struct TrResult **out);

// # Safety
// `r` must be null or a live handle.
void tr_result_free(struct TrResult *r);

// # Safety
// `r` must be a live handle.
enum TrSolveStatus tr_result_status(const struct TrResult *r);

// Iterations performed.
//
// # Safety
// `r` must be a live handle.
size_t tr_result_iterations(const struct TrResult *r);

// Relative error of the last iterate.
//
// # Safety
// `r` must be a live handle.
double tr_result_final_rel_err(const struct TrResult *r);

// The composed estimate as a new tensor handle.
//
// # Safety
// `r` must be a live handle and `out` writable.
enum TrStatus tr_result_estimate(const struct TrResult *r, struct TrTensor **out);

// Contraction constants of the convergence analysis.
//
// # Safety
// `out` must be writable.
enum TrStatus tr_gamma_constants(size_t d,
                                 size_t r1,
                                 double kappa1,
                                 double ric,
                                 struct TrGammaReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TUCKER_RECOVER_H */
