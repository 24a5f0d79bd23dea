#ifndef POINCARE_LAB_H
#define POINCARE_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_INPUT = 2,
  PL_STATUS_NUMERICAL = 3,
  PL_STATUS_NO_CONVERGENCE = 4,
  PL_STATUS_SIZE_CAP = 5,
  PL_STATUS_CONFIG = 6,
  PL_STATUS_IO = 7,
  PL_STATUS_BUFFER_SIZE = 8,
  PL_STATUS_PANIC = 9,
} PlStatus;

typedef enum PlPotential {
  // `x^2 / 2`.
  PL_POTENTIAL_GAUSSIAN = 0,
  // `x^4 - 2 x^2`.
  PL_POTENTIAL_DOUBLE_WELL = 1,
  // `x^4`.
  PL_POTENTIAL_QUARTIC = 2,
  // `V = 0` on a bounded domain.
  PL_POTENTIAL_UNIFORM = 3,
  // `c_0 + c_1 x + ...` from the coefficient array.
  PL_POTENTIAL_POLYNOMIAL = 4,
} PlPotential;

typedef enum PlBackend {
  PL_BACKEND_QUANTILE = 0,
  PL_BACKEND_LP = 1,
  // Upper bracket of entropic transport.
  PL_BACKEND_SINKHORN = 2,
} PlBackend;

// Opaque model handle: a grid measure with its generator.
typedef struct PlModel PlModel;

// Verdict tallies of a suite run.
typedef struct PlCounts {
  size_t pass;
  size_t fail;
  size_t vacuous;
  size_t skipped;
  size_t errors;
  // No errors and every binding check passed.
  bool success;
} PlCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length in bytes (without the terminating NUL) of the last error message on this thread.
size_t pl_last_error_length(void);

// Copies the last error message, NUL terminated and truncated to `len` bytes.
//
// # Safety
// `buf` must be valid for `len` bytes of writes.
enum PlStatus pl_last_error_message(char *buf, size_t len);

// Builds a model on `n` nodes of `[lo, hi]`. Passing NaN for both bounds picks a
// symmetric domain whose truncated tail mass is negligible. `coeffs` is read only
// for the polynomial potential and may be null otherwise.
//
// # Safety
// `coeffs` must be valid for `ncoeffs` reads when used; `out` must be writable.
enum PlStatus pl_model_new(enum PlPotential potential,
                           const double *coeffs,
                           size_t ncoeffs,
                           double lo,
                           double hi,
                           size_t n,
                           struct PlModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from [`pl_model_new`] and not be used afterwards.
void pl_model_free(struct PlModel *model);

// Number of grid nodes.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum PlStatus pl_model_len(const struct PlModel *model, size_t *out);

// Grid nodes.
//
// # Safety
// `model` must be a live handle and `out` valid for `len` writes.
enum PlStatus pl_model_nodes(const struct PlModel *model, double *out, size_t len);

// Probability weights of the grid measure.
//
// # Safety
// `model` must be a live handle and `out` valid for `len` writes.
enum PlStatus pl_model_weights(const struct PlModel *model, double *out, size_t len);

// Poincaré constant `1 / gap` of the generator.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum PlStatus pl_poincare_constant(const struct PlModel *model, double *out);

// Normalized density ratio proportional to `exp(m x)`.
//
// # Safety
// `model` must be a live handle and `out` valid for `len` writes.
enum PlStatus pl_tilt_density(const struct PlModel *model, double m, double *out, size_t len);

// `W2(f mu, mu)` for a normalized density ratio `f`. `epsilon` is read only by
// the Sinkhorn backend.
//
// # Safety
// `model` must be a live handle, `f` valid for `len` reads and `out` writable.
enum PlStatus pl_w2(const struct PlModel *model,
                    const double *f,
                    size_t len,
                    enum PlBackend backend,
                    double epsilon,
                    double *out);

// `P_t f` for a normalized density ratio `f`.
//
// # Safety
// `model` must be a live handle, `f` valid for `len` reads and `out` for `len` writes.
enum PlStatus pl_evolve(const struct PlModel *model,
                        const double *f,
                        size_t len,
                        double t,
                        double *out);

// `Q_t h` for `h` sampled on `n` uniform nodes of `[lo, hi]`.
//
// # Safety
// `h` must be valid for `n` reads and `out` for `n` writes.
enum PlStatus pl_hopf_lax(double lo, double hi, size_t n, const double *h, double t, double *out);

// Runs the suites of a JSON config and writes the report and summary to
// `out_dir`, or to the directory named in the config when null. `jobs = 0`
// uses every core. Failing checks still return `Ok`; see `counts.success`.
//
// # Safety
// Paths must be NUL-terminated strings; `counts` must be writable.
enum PlStatus pl_run_suite(const char *config_path,
                           const char *out_dir,
                           size_t jobs,
                           struct PlCounts *counts);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POINCARE_LAB_H */
