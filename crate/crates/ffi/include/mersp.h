#ifndef MERSP_H
#define MERSP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MerspStatus {
  MERSP_STATUS_OK = 0,
  MERSP_STATUS_NULL_POINTER = 1,
  MERSP_STATUS_INVALID_ARGUMENT = 2,
  MERSP_STATUS_PARSE = 3,
  MERSP_STATUS_IO = 4,
  MERSP_STATUS_TOO_LARGE = 5,
  MERSP_STATUS_NOT_POSITIVE_DEFINITE = 6,
  MERSP_STATUS_DOMAIN_ERROR = 7,
  MERSP_STATUS_DEGENERATE_INSTANCE = 8,
  MERSP_STATUS_ILL_POSED = 9,
  MERSP_STATUS_INFEASIBLE = 10,
  MERSP_STATUS_NUMERICAL_FAILURE = 11,
  MERSP_STATUS_GENERATION_FAILED = 12,
  MERSP_STATUS_PANIC = 13,
} MerspStatus;

typedef enum MerspPsiMode {
  MERSP_PSI_MODE_ORIGINAL = 0,
  MERSP_PSI_MODE_COMPLEMENTARY = 1,
} MerspPsiMode;

typedef enum MerspOrientation {
  // Complementary when the covariance is positive definite.
  MERSP_ORIENTATION_AUTO = 0,
  MERSP_ORIENTATION_ORIGINAL = 1,
  MERSP_ORIENTATION_COMPLEMENTARY = 2,
} MerspOrientation;

typedef enum MerspStrategy {
  MERSP_STRATEGY_IDENTITY = 0,
  MERSP_STRATEGY_DIAGONAL = 1,
  MERSP_STRATEGY_TRACE = 2,
} MerspStrategy;

// Joint covariance of the observable and target variables.
typedef struct MerspCovariance MerspCovariance;

// A subset-selection instance `(C1, C2, s)` with its offset.
typedef struct MerspInstance MerspInstance;

// Solver settings for the NLP bounds.
typedef struct MerspNlpOptions {
  size_t gamma_grid;
  double gap_tol;
  size_t max_iter;
} MerspNlpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *mersp_last_error(void);

// Defaults: 50 γ values, gap tolerance 1e-6, 5000 iterations.
struct MerspNlpOptions mersp_nlp_options_default(void);

// Builds a covariance handle from a row-major `(n + t) × (n + t)` matrix
// whose last `t` rows and columns are the targets.
//
// # Safety
// `data` must point to `(n + t)²` readable doubles; `out` must be writable.
enum MerspStatus mersp_covariance_new(const double *data,
                                      size_t n,
                                      size_t t,
                                      struct MerspCovariance **out);

// Reads a covariance file in the command-line text format.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MerspStatus mersp_covariance_read(const char *path, struct MerspCovariance **out);

// # Safety
// `cov` must be null or a handle from this library not yet freed.
void mersp_covariance_free(struct MerspCovariance *cov);

// Whether condition (7) holds.
//
// # Safety
// `cov` must be a live handle; `out` must be writable.
enum MerspStatus mersp_covariance_condition7(const struct MerspCovariance *cov, bool *out);

// Optimal augmentation factor ψ* in the given orientation.
//
// # Safety
// `cov` must be a live handle; `out` must be writable.
enum MerspStatus mersp_covariance_psi_star(const struct MerspCovariance *cov,
                                           enum MerspPsiMode mode,
                                           double *out);

// Builds the size-`s` selection instance in the requested orientation.
//
// # Safety
// `cov` must be a live handle; `out` must be writable.
enum MerspStatus mersp_instance_new(const struct MerspCovariance *cov,
                                    size_t s,
                                    enum MerspOrientation orientation,
                                    struct MerspInstance **out);

// # Safety
// `inst` must be null or a handle from this library not yet freed.
void mersp_instance_free(struct MerspInstance *inst);

// The complementary instance `(C1⁻¹, C2⁻¹, n − s)`.
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum MerspStatus mersp_instance_complement(const struct MerspInstance *inst,
                                           struct MerspInstance **out);

// Number of candidate indices `n`.
//
// # Safety
// `inst` must be a live handle.
size_t mersp_instance_n(const struct MerspInstance *inst);

// Subset size `s`.
//
// # Safety
// `inst` must be a live handle.
size_t mersp_instance_s(const struct MerspInstance *inst);

// Objective of a subset given as `len` zero-based indices.
//
// # Safety
// `subset` must point to `len` readable indices; `out` must be writable.
enum MerspStatus mersp_instance_objective(const struct MerspInstance *inst,
                                          const size_t *subset,
                                          size_t len,
                                          double *out);

// Certified NLP upper bound. When `x_hat` is non-null it receives the
// relaxation maximizer (`n` doubles).
//
// # Safety
// `inst` must be a live handle; `value` must be writable; `x_hat` must be
// null or point to `n` writable doubles.
enum MerspStatus mersp_nlp_bound(const struct MerspInstance *inst,
                                 enum MerspStrategy strategy,
                                 bool augment,
                                 struct MerspNlpOptions options,
                                 double *value,
                                 double *x_hat);

// Best NLP bound over the three diagonal-scaling starts; the Identity
// strategy also optimizes the scaling. `psi_vec` may be null or receive `n`
// doubles.
//
// # Safety
// As for [`mersp_nlp_bound`].
enum MerspStatus mersp_scaled_bound(const struct MerspInstance *inst,
                                    enum MerspStrategy strategy,
                                    bool augment,
                                    struct MerspNlpOptions options,
                                    double *value,
                                    double *psi_vec);

// Spectral upper bound.
//
// # Safety
// `inst` must be a live handle; `value` must be writable.
enum MerspStatus mersp_spectral_bound(const struct MerspInstance *inst, double *value);

// Greedy plus local-search lower bound. `subset` may be null or receive `s`
// indices.
//
// # Safety
// `inst` must be a live handle; `value` must be writable; `subset` must be
// null or point to `s` writable slots.
enum MerspStatus mersp_lower_bound(const struct MerspInstance *inst, size_t *subset, double *value);

// Exact optimum by enumeration; fails with `TooLarge` beyond 10⁶ subsets.
//
// # Safety
// As for [`mersp_lower_bound`].
enum MerspStatus mersp_exact(const struct MerspInstance *inst, size_t *subset, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MERSP_H */
