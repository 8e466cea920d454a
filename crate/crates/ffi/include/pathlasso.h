#ifndef PATHLASSO_H
#define PATHLASSO_H

/* Generated by cbindgen from pathlasso-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code returned by every fallible entry point.
typedef enum PlStatus {
  // The call succeeded.
  PL_STATUS_OK = 0,
  // A required pointer argument was null.
  PL_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  PL_STATUS_INVALID_UTF8 = 2,
  // The file could not be read or written.
  PL_STATUS_IO = 3,
  // The file could be read but not parsed as a mediation dataset.
  PL_STATUS_PARSE = 4,
  // An argument failed validation (shape, range, or data contents).
  PL_STATUS_INVALID_ARGUMENT = 5,
  // A numeric routine failed (singular system, non-finite intermediate).
  PL_STATUS_NUMERIC = 6,
  // The library panicked; treat the handle states as unchanged.
  PL_STATUS_PANIC = 7,
} PlStatus;

// An owned mediation dataset behind an opaque handle.
typedef struct PlDataset PlDataset;

// A completed single-configuration fit behind an opaque handle.
typedef struct PlFit PlFit;

// Solver controls, mirroring the core defaults when obtained from
// [`pl_solver_options_default`].
typedef struct PlSolverOptions {
  // Hard iteration cap.
  size_t max_iter;
  // Convergence threshold on the maximum primal residual.
  double tol_primal;
  // Convergence threshold on the relative objective change.
  double tol_change;
  // Augmented-Lagrangian parameter; fixed during a fit.
  double rho;
} PlSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the library version as a static NUL-terminated string.
const char *pl_version(void);

// Copies the most recent error message on this thread into `buf`.
//
// Returns the full message length in bytes (excluding the trailing NUL).
// When `buf` is non-null and `cap > 0`, writes at most `cap - 1` bytes plus
// a NUL terminator, truncating if needed — the snprintf contract. A return
// value of zero means no error has been recorded yet.
//
// # Safety
// `buf` must either be null or point to at least `cap` writable bytes.
size_t pl_last_error_message(char *buf, size_t cap);

// Reads a dataset from a CSV file laid out as `Z,M1..MK,R` with a header.
//
// On success stores a new handle in `*out`; free it with
// [`pl_dataset_free`].
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PlStatus pl_dataset_read_csv(const char *path, struct PlDataset **out);

// Builds a dataset from caller-provided arrays.
//
// `z` and `r` have `n` entries; `m` has `n * k` entries in row-major order
// (observation-major). The arrays are copied.
//
// # Safety
// The array pointers must be valid for the stated lengths and `out` must be
// a valid pointer.
enum PlStatus pl_dataset_new(size_t n,
                             size_t k,
                             const double *z,
                             const double *m,
                             const double *r,
                             struct PlDataset **out);

// Number of observations, or 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle from this library.
size_t pl_dataset_n(const struct PlDataset *dataset);

// Number of mediators, or 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle from this library.
size_t pl_dataset_k(const struct PlDataset *dataset);

// Frees a dataset handle. Null is a no-op.
//
// # Safety
// `dataset` must be null or a handle not freed before.
void pl_dataset_free(struct PlDataset *dataset);

// The solver defaults: `max_iter = 10000`, `tol_primal = 1e-6`,
// `tol_change = 1e-8`, `rho = 1`.
struct PlSolverOptions pl_solver_options_default(void);

// Fits one penalty configuration and stores a new handle in `*out`.
//
// The dataset is standardized internally; coefficients come back on the
// standardized scale. `lambda` weighs the pathway-product penalty, `phi`
// its convexity guard (must be ≥ 1/2), `omega` the plain lasso penalty.
// A null `options` uses [`pl_solver_options_default`]. Free the handle
// with [`pl_fit_free`].
//
// # Safety
// `dataset` must be a live handle, `options` null or valid, `out` valid.
enum PlStatus pl_fit(const struct PlDataset *dataset,
                     double lambda,
                     double phi,
                     double omega,
                     const struct PlSolverOptions *options,
                     struct PlFit **out);

// Frees a fit handle. Null is a no-op.
//
// # Safety
// `fit` must be null or a handle not freed before.
void pl_fit_free(struct PlFit *fit);

// Whether the solver met both tolerances within the iteration cap.
//
// # Safety
// `fit` must be null or a live handle.
bool pl_fit_converged(const struct PlFit *fit);

// Iterations performed, or 0 for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
size_t pl_fit_iterations(const struct PlFit *fit);

// Final objective value, or NaN for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
double pl_fit_objective(const struct PlFit *fit);

// The direct (treatment → outcome) effect `C`, or NaN for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
double pl_fit_direct_effect(const struct PlFit *fit);

// Mediator count of the fitted dataset, or 0 for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
size_t pl_fit_k(const struct PlFit *fit);

// Copies the treatment → mediator coefficients `A` into `buf` (length `K`).
//
// # Safety
// `fit` must be a live handle and `buf` valid for `len` doubles.
enum PlStatus pl_fit_a(const struct PlFit *fit, double *buf, size_t len);

// Copies the mediator → outcome coefficients `B` into `buf` (length `K`).
//
// # Safety
// `fit` must be a live handle and `buf` valid for `len` doubles.
enum PlStatus pl_fit_b(const struct PlFit *fit, double *buf, size_t len);

// Copies the per-pathway products `A_j B_j` into `buf` (length `K`).
//
// # Safety
// `fit` must be a live handle and `buf` valid for `len` doubles.
enum PlStatus pl_fit_ab(const struct PlFit *fit, double *buf, size_t len);

// Selects pathways with `|A_j B_j| > cutoff` and reports their indices.
//
// Always stores the selection size in `*count`. When `indices` is null the
// call only counts; otherwise the buffer must hold at least `*count`
// entries (`cap` of `K` is always enough) or the call fails with
// `InvalidArgument` and writes nothing.
//
// # Safety
// `fit` must be a live handle, `count` valid, and `indices` null or valid
// for `cap` entries.
enum PlStatus pl_fit_selected(const struct PlFit *fit,
                              double cutoff,
                              size_t *indices,
                              size_t cap,
                              size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHLASSO_H */
