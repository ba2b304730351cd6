#ifndef CITEFIT_H
#define CITEFIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_ARGUMENT = 2,
  CF_STATUS_DIVERGENCE = 3,
  CF_STATUS_TRUNCATION_FAILURE = 4,
  CF_STATUS_EMPTY_DATA = 5,
  CF_STATUS_INSUFFICIENT_DATA = 6,
  CF_STATUS_DEGENERATE_DATA = 7,
  CF_STATUS_ALIGNMENT = 8,
  CF_STATUS_MIXED_MEASURES = 9,
  CF_STATUS_PARSE = 10,
  CF_STATUS_IO = 11,
  CF_STATUS_PANIC = 12,
} CfStatus;

typedef enum CfModel {
  CF_MODEL_DLNORM = 0,
  CF_MODEL_HOOKED = 1,
  CF_MODEL_NORMAL_LOG = 2,
} CfModel;

typedef enum CfWinner {
  CF_WINNER_INDISTINGUISHABLE = 0,
  CF_WINNER_A = 1,
  CF_WINNER_B = 2,
} CfWinner;

/*
 Opaque set of citation counts.
 */
typedef struct CfDataset CfDataset;

/*
 Opaque fitted model.
 */
typedef struct CfFit CfFit;

typedef struct CfFitOptions {
  uint32_t offset;
  bool exclude_uncited;
  double rel_ll_tol;
  uint64_t max_iters;
} CfFitOptions;

typedef struct CfComparison {
  double statistic;
  double p_value;
  enum CfWinner winner;
  bool significant;
} CfComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Last error message on this thread, or NULL. Valid until the next call
 into this library from the same thread.
 */
const char *cf_last_error_message(void);

/*
 NUL-terminated library version.
 */
const char *cf_version(void);

struct CfFitOptions cf_fit_options_default(void);

/*
 Copies `len` raw citation counts into a new dataset.

 # Safety
 `counts` must point to `len` readable values; `out_ds` must be writable.
 */
enum CfStatus cf_dataset_new(const uint64_t *counts, size_t len, struct CfDataset **out_ds);

/*
 # Safety
 `ds` must come from [`cf_dataset_new`] and not be used afterwards. NULL is ignored.
 */
void cf_dataset_free(struct CfDataset *ds);

/*
 Number of counts in `ds`, or 0 for NULL.

 # Safety
 `ds` must be NULL or a live dataset handle.
 */
size_t cf_dataset_len(const struct CfDataset *ds);

/*
 Fits `model` to `ds`. `opts` may be NULL for defaults.

 # Safety
 Pointers must be NULL or valid; `out_fit` must be writable.
 */
enum CfStatus cf_fit(enum CfModel model,
                     const struct CfDataset *ds,
                     const struct CfFitOptions *opts,
                     struct CfFit **out_fit);

/*
 # Safety
 `f` must come from [`cf_fit`] and not be used afterwards. NULL is ignored.
 */
void cf_fit_free(struct CfFit *f);

/*
 Writes the two fitted parameters in model order: (mu, sigma), (alpha, b)
 or (mean, sd).

 # Safety
 `f` must be a live fit; `out_params` must have room for two values.
 */
enum CfStatus cf_fit_params(const struct CfFit *f, double *out_params);

/*
 # Safety
 `f` must be a live fit; `out_ll` must be writable.
 */
enum CfStatus cf_fit_log_likelihood(const struct CfFit *f, double *out_ll);

/*
 True when the optimizer met its tolerance before the iteration cap.

 # Safety
 `f` must be NULL or a live fit.
 */
bool cf_fit_converged(const struct CfFit *f);

/*
 Observations used by the fit, or 0 for NULL.

 # Safety
 `f` must be NULL or a live fit.
 */
size_t cf_fit_n(const struct CfFit *f);

/*
 Vuong comparison of two fits of the same data. Positive statistics favour `a`.

 # Safety
 `a` and `b` must be live fits; `out_cmp` must be writable.
 */
enum CfStatus cf_vuong(const struct CfFit *a,
                       const struct CfFit *b,
                       double level,
                       struct CfComparison *out_cmp);

/*
 Probability of a raw count under the default support (count + 1), or the
 density of `ln(count + 1)` for the normal-on-log model.

 # Safety
 `out_p` must be writable.
 */
enum CfStatus cf_probability(enum CfModel model,
                             double p0,
                             double p1,
                             uint64_t count,
                             double *out_p);

/*
 Total log-likelihood of raw counts under the default support.

 # Safety
 `counts` must point to `len` values; `out_ll` must be writable.
 */
enum CfStatus cf_log_likelihood(enum CfModel model,
                                double p0,
                                double p1,
                                const uint64_t *counts,
                                size_t len,
                                double *out_ll);

/*
 Per-observation log-likelihoods, in input order, into `out_ll[0..len]`.

 # Safety
 `counts` must point to `len` values and `out_ll` to room for `len`.
 */
enum CfStatus cf_pointwise_log_likelihood(enum CfModel model,
                                          double p0,
                                          double p1,
                                          const uint64_t *counts,
                                          size_t len,
                                          double *out_ll);

/*
 Spearman rank correlation with average ranks for ties.

 # Safety
 `x` and `y` must point to `len` values; `out_r` must be writable.
 */
enum CfStatus cf_spearman(const double *x, const double *y, size_t len, double *out_r);

/*
 Draws `n` raw counts (support value minus one) from a discrete model.

 # Safety
 `out_counts` must have room for `n` values.
 */
enum CfStatus cf_sample(enum CfModel model,
                        double p0,
                        double p1,
                        size_t n,
                        uint64_t seed,
                        uint64_t *out_counts);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CITEFIT_H */
