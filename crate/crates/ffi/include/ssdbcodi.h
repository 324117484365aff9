#ifndef SSDBCODI_H
#define SSDBCODI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SSDBCODI_STATUS_OK = 0,
  SSDBCODI_STATUS_NULL_POINTER = 1,
  SSDBCODI_STATUS_INVALID_ARGUMENT = 2,
  SSDBCODI_STATUS_IO = 3,
  SSDBCODI_STATUS_PARSE = 4,
  SSDBCODI_STATUS_PRECONDITION = 5,
  SSDBCODI_STATUS_INDEX_OUT_OF_RANGE = 6,
  SSDBCODI_STATUS_INTERNAL = 7,
} SsdbcodiStatus;

/**
 * Loaded or constructed dataset.
 */
typedef struct SsdbcodiDataset SsdbcodiDataset;

/**
 * User labels for one run.
 */
typedef struct SsdbcodiLabels SsdbcodiLabels;

/**
 * Output of [`ssdbcodi_run`].
 */
typedef struct SsdbcodiResult SsdbcodiResult;

/**
 * Run parameters. `k_reliable < 0` selects the automatic reliable-outlier count.
 */
typedef struct {
  double alpha;
  double beta;
  uintptr_t min_pts;
  int64_t k_reliable;
  uintptr_t knn_k;
} SsdbcodiParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none failed.
 * Valid until the next failing call on the same thread.
 */
const char *ssdbcodi_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ssdbcodi_version(void);

/**
 * Loads a CSV file. NULL `label_column`/`outlier_sentinel` select
 * "label" and "o".
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be writable.
 */
SsdbcodiStatus ssdbcodi_dataset_load_csv(const char *path,
                                         const char *label_column,
                                         const char *outlier_sentinel,
                                         SsdbcodiDataset **out);

/**
 * Builds a dataset from `n * dim` row-major values and `n` truth labels
 * (cluster id, or a negative value for an outlier).
 *
 * # Safety
 * `values` must hold `n * dim` doubles and `truth` `n` integers; `out` must be writable.
 */
SsdbcodiStatus ssdbcodi_dataset_new(const double *values,
                                    uintptr_t n,
                                    uintptr_t dim,
                                    const int64_t *truth,
                                    SsdbcodiDataset **out);

/**
 * Number of points; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
uintptr_t ssdbcodi_dataset_len(const SsdbcodiDataset *ds);

/**
 * Number of features; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
uintptr_t ssdbcodi_dataset_dim(const SsdbcodiDataset *ds);

/**
 * Number of ground-truth outliers; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
uintptr_t ssdbcodi_dataset_outlier_count(const SsdbcodiDataset *ds);

/**
 * Number of ground-truth clusters; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
uintptr_t ssdbcodi_dataset_cluster_count(const SsdbcodiDataset *ds);

/**
 * # Safety
 * `ds` must be NULL or a handle not yet freed.
 */
void ssdbcodi_dataset_free(SsdbcodiDataset *ds);

/**
 * Explicit labels: `normal_points[i]` carries cluster `normal_clusters[i]`;
 * `outlier_points` are labeled outliers. Indices refer to a dataset of `n` points.
 *
 * # Safety
 * Arrays must hold the stated number of elements; `out` must be writable.
 */
SsdbcodiStatus ssdbcodi_labels_new(uintptr_t n,
                                   const uintptr_t *normal_points,
                                   const uint32_t *normal_clusters,
                                   uintptr_t normal_len,
                                   const uintptr_t *outlier_points,
                                   uintptr_t outlier_len,
                                   SsdbcodiLabels **out);

/**
 * Labels `round(fraction * n)` points drawn with `seed` from the ground truth.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
SsdbcodiStatus ssdbcodi_labels_sample(const SsdbcodiDataset *ds,
                                      double fraction,
                                      uint64_t seed,
                                      SsdbcodiLabels **out);

/**
 * Number of labeled points; 0 for NULL.
 *
 * # Safety
 * `labels` must be NULL or a live labels handle.
 */
uintptr_t ssdbcodi_labels_len(const SsdbcodiLabels *labels);

/**
 * # Safety
 * `labels` must be NULL or a handle not yet freed.
 */
void ssdbcodi_labels_free(SsdbcodiLabels *labels);

/**
 * Library defaults: alpha 0.4, beta 0.3, MinPts 3, automatic k, 5 classifier neighbors.
 */
SsdbcodiParams ssdbcodi_params_default(void);

/**
 * Runs the full pipeline. NULL `params` uses the defaults.
 *
 * # Safety
 * Handles must be live; `params` NULL or valid; `out` writable.
 */
SsdbcodiStatus ssdbcodi_run(const SsdbcodiDataset *ds,
                            const SsdbcodiLabels *labels,
                            const SsdbcodiParams *params,
                            SsdbcodiResult **out);

/**
 * Number of points in the result; 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live result handle.
 */
uintptr_t ssdbcodi_result_len(const SsdbcodiResult *res);

/**
 * Predicted cluster of point `i`, or -1 when it is predicted an outlier.
 *
 * # Safety
 * `res` must be live; `out` writable.
 */
SsdbcodiStatus ssdbcodi_result_cluster(const SsdbcodiResult *res, uintptr_t i, int64_t *out);

/**
 * Outlier score of point `i`, in [0, 1].
 *
 * # Safety
 * `res` must be live; `out` writable.
 */
SsdbcodiStatus ssdbcodi_result_outlier_score(const SsdbcodiResult *res, uintptr_t i, double *out);

/**
 * Copies all outlier scores into `buf`, which must hold `len` >= point count doubles.
 *
 * # Safety
 * `res` must be live; `buf` must be writable for `len` doubles.
 */
SsdbcodiStatus ssdbcodi_result_copy_scores(const SsdbcodiResult *res, double *buf, uintptr_t len);

/**
 * Number of reliable outliers the classifier was trained on; 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live result handle.
 */
uintptr_t ssdbcodi_result_reliable_outliers(const SsdbcodiResult *res);

/**
 * # Safety
 * `res` must be NULL or a handle not yet freed.
 */
void ssdbcodi_result_free(SsdbcodiResult *res);

/**
 * ROC AUC of `scores` against `positive` flags (nonzero = outlier).
 *
 * # Safety
 * Both arrays must hold `n` elements; `out` writable.
 */
SsdbcodiStatus ssdbcodi_auc(const double *scores,
                            const uint8_t *positive,
                            uintptr_t n,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSDBCODI_H */
