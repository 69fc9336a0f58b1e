#ifndef APK_H
#define APK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ApkStatus {
  APK_STATUS_OK = 0,
  APK_STATUS_NULL_POINTER = 1,
  APK_STATUS_INVALID_ARGUMENT = 2,
  APK_STATUS_CAPACITY = 3,
  APK_STATUS_PARSE = 4,
  APK_STATUS_IO = 5,
  APK_STATUS_VALIDATION = 6,
  APK_STATUS_PANIC = 7,
} ApkStatus;

// Normalization codes accepted by the `norm` parameters.
typedef enum ApkNorm {
  // Divide by the cutoff `k`.
  APK_NORM_BY_K = 0,
  // Divide by `min(m, k)`, with `m` the relevant count.
  APK_NORM_BY_MIN = 1,
} ApkNorm;

// Baseline selection codes for `ApkBaseline::kind`.
typedef enum ApkBaselineKind {
  // WOR over `items` documents with each query's own relevant count.
  APK_BASELINE_KIND_AUTO_WOR = 0,
  // WR with `p` pooled from the observed top-k prevalence.
  APK_BASELINE_KIND_AUTO_WR = 1,
  // Fixed WOR(`items`, `relevant`) for every query.
  APK_BASELINE_KIND_WOR = 2,
  // Fixed WR(`p`) for every query.
  APK_BASELINE_KIND_WR = 3,
} ApkBaselineKind;

// Exact AP@k distribution.
typedef struct ApkDistribution ApkDistribution;

// Evaluation report.
typedef struct ApkReport ApkReport;

typedef struct ApkMoments {
  double mean;
  double variance;
} ApkMoments;

typedef struct ApkSampleMoments {
  double mean;
  double variance;
  double std_error;
  uint64_t n;
} ApkSampleMoments;

// Baseline choice for `apk_evaluate_files`; fields not used by `kind` are
// ignored.
typedef struct ApkBaseline {
  uint32_t kind;
  size_t items;
  size_t relevant;
  double p;
} ApkBaseline;

// Headline numbers of an evaluation. `z_score` is NaN when the baseline
// variance is zero.
typedef struct ApkReportSummary {
  double map_at_k;
  double baseline_mean;
  double baseline_variance_of_map;
  double z_score;
  size_t user_count;
  size_t k;
} ApkReportSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *apk_last_error_message(void);

// AP@k of one ranking given as `len` bytes, each 0 or 1.
//
// # Safety
// `relevance` must point to `len` bytes and `result` must be writable.
enum ApkStatus apk_ap_at_k(const uint8_t *relevance,
                           size_t len,
                           size_t k,
                           uint32_t norm_code,
                           double *result);

// MAP@k over `users` rankings stored back to back in `relevance`; ranking
// `u` has `lengths[u]` entries.
//
// # Safety
// `lengths` must point to `users` values and `relevance` to their sum in
// bytes; `result` must be writable.
enum ApkStatus apk_map_at_k(const uint8_t *relevance,
                            const size_t *lengths,
                            size_t users,
                            size_t k,
                            uint32_t norm_code,
                            double *result);

// Closed-form mean and variance of AP@k (normalized by `min(m,k)`) under
// WOR(`items`, `relevant`).
//
// # Safety
// `result` must be writable.
enum ApkStatus apk_baseline_wor(size_t items, size_t relevant, size_t k, struct ApkMoments *result);

// Closed-form mean and variance of AP@k (normalized by `k`) under WR(`p`).
//
// # Safety
// `result` must be writable.
enum ApkStatus apk_baseline_wr(double p, size_t k, struct ApkMoments *result);

// `H_k` and `H_k^(2)`.
//
// # Safety
// `h1` and `h2` must be writable.
enum ApkStatus apk_harmonic(size_t k, double *h1, double *h2);

// Seeded Monte Carlo moments under WOR. Identical inputs give identical
// results regardless of thread count.
//
// # Safety
// `result` must be writable.
enum ApkStatus apk_simulate_wor(size_t items,
                                size_t relevant,
                                size_t k,
                                uint32_t norm_code,
                                uint64_t samples,
                                uint64_t seed,
                                struct ApkSampleMoments *result);

// Seeded Monte Carlo moments under WR.
//
// # Safety
// `result` must be writable.
enum ApkStatus apk_simulate_wr(double p,
                               size_t k,
                               uint32_t norm_code,
                               uint64_t samples,
                               uint64_t seed,
                               struct ApkSampleMoments *result);

// Exact AP@k distribution under WOR. Release with
// `apk_distribution_free`.
//
// # Safety
// `result` must be writable.
enum ApkStatus apk_exact_wor(size_t items,
                             size_t relevant,
                             size_t k,
                             uint32_t norm_code,
                             struct ApkDistribution **result);

// Exact AP@k distribution under WR. Release with `apk_distribution_free`.
//
// # Safety
// `result` must be writable.
enum ApkStatus apk_exact_wr(double p,
                            size_t k,
                            uint32_t norm_code,
                            struct ApkDistribution **result);

// Number of support points; 0 for a null handle.
//
// # Safety
// `dist` must be null or a live handle.
size_t apk_distribution_len(const struct ApkDistribution *dist);

// Support point `index` in ascending order of value.
//
// # Safety
// `dist` must be a live handle; `value` and `probability` must be writable.
enum ApkStatus apk_distribution_get(const struct ApkDistribution *dist,
                                    size_t index,
                                    double *value,
                                    double *probability);

// Mean and variance of the distribution.
//
// # Safety
// `dist` must be a live handle and `result` writable.
enum ApkStatus apk_distribution_moments(const struct ApkDistribution *dist,
                                        struct ApkMoments *result);

// Releases a distribution; null is ignored.
//
// # Safety
// `dist` must be null or a handle not yet freed.
void apk_distribution_free(struct ApkDistribution *dist);

// Scores a six-column run file against a four-column qrels file at cutoff
// `k`, using the normalization that matches the chosen baseline. Release
// the report with `apk_report_free`.
//
// # Safety
// `run_path` and `qrels_path` must be NUL-terminated strings and `result`
// writable.
enum ApkStatus apk_evaluate_files(const char *run_path,
                                  const char *qrels_path,
                                  size_t k,
                                  struct ApkBaseline baseline_choice_in,
                                  struct ApkReport **result);

// # Safety
// `report` must be a live handle and `result` writable.
enum ApkStatus apk_report_summary(const struct ApkReport *report, struct ApkReportSummary *result);

// Full report, including per-query AP, as a JSON string. Release with
// `apk_string_free`.
//
// # Safety
// `report` must be a live handle and `result` writable.
enum ApkStatus apk_report_to_json(const struct ApkReport *report, char **result);

// Releases a report; null is ignored.
//
// # Safety
// `report` must be null or a handle not yet freed.
void apk_report_free(struct ApkReport *report);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void apk_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APK_H */
