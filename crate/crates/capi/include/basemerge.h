/* C interface of the basemerge time-series aggregation library. */

#ifndef BASEMERGE_H
#define BASEMERGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every `bm_*` call.
 */
typedef enum BmStatus {
  BM_STATUS_OK = 0,
  /**
   * a required pointer argument was null
   */
  BM_STATUS_NULL_ARGUMENT = 1,
  /**
   * a string argument was not valid UTF-8
   */
  BM_STATUS_INVALID_UTF8 = 2,
  BM_STATUS_IO = 3,
  BM_STATUS_PARSE = 4,
  BM_STATUS_VALIDATION = 5,
  /**
   * a time step (or merged block) has no feasible solution
   */
  BM_STATUS_INFEASIBLE = 6,
  BM_STATUS_UNBOUNDED = 7,
  BM_STATUS_SOLVER_FAILURE = 8,
  /**
   * exhaustive enumeration refused: too many bases
   */
  BM_STATUS_CAP_EXCEEDED = 9,
  BM_STATUS_UNDEFINED_METRIC = 10,
  BM_STATUS_CONTRACT_VIOLATION = 11,
  BM_STATUS_INDEX_OUT_OF_RANGE = 12,
  /**
   * the caller's buffer is too small; the required size is reported
   */
  BM_STATUS_BUFFER_TOO_SMALL = 13,
  /**
   * an internal panic was caught at the boundary
   */
  BM_STATUS_PANIC = 14,
} BmStatus;

/**
 * Merger-search strategies exposed through the C interface.
 */
typedef enum BmStrategy {
  BM_STRATEGY_EXHAUSTIVE = 0,
  BM_STRATEGY_GREEDY = 1,
  BM_STRATEGY_GREEDY_ADJACENT = 2,
} BmStrategy;

/**
 * Adjacency detection modes for the greedy-adjacent strategy.
 */
typedef enum BmAdjacency {
  BM_ADJACENCY_INPUT_SPACE = 0,
  BM_ADJACENCY_ACTIVE_SET = 1,
} BmAdjacency;

/**
 * Opaque handle over a solved and grouped horizon.
 */
typedef struct BmAnalysis BmAnalysis;

/**
 * Opaque network handle.
 */
typedef struct BmNetwork BmNetwork;

/**
 * Opaque time-series handle.
 */
typedef struct BmTimeseries BmTimeseries;

/**
 * Opaque strategy-trace handle.
 */
typedef struct BmTrace BmTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library, as a static string.
 */
const char *bm_version(void);

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing `bm_*` call on the same thread.
 */
const char *bm_last_error_message(void);

/**
 * Load a network description from a JSON file.
 *
 * # Safety
 * `path` must be a valid nul-terminated string; `out` must be writable.
 */
enum BmStatus bm_network_load(const char *path, struct BmNetwork **out);

/**
 * Load a time series from a CSV file.
 *
 * # Safety
 * `path` must be a valid nul-terminated string; `out` must be writable.
 */
enum BmStatus bm_timeseries_load(const char *path, struct BmTimeseries **out);

/**
 * Generate the built-in synthetic case study.
 *
 * # Safety
 * `out_net` and `out_ts` must be writable.
 */
enum BmStatus bm_case_study_generate(uint32_t weeks,
                                     uint64_t seed,
                                     struct BmNetwork **out_net,
                                     struct BmTimeseries **out_ts);

/**
 * Solve every time step, group bases, and audit exactness.
 *
 * # Safety
 * `net` and `ts` must be live handles; `out` must be writable.
 */
enum BmStatus bm_analyze(const struct BmNetwork *net,
                         const struct BmTimeseries *ts,
                         struct BmAnalysis **out);

/**
 * Number of time steps behind an analysis (0 for a null handle).
 */
size_t bm_analysis_horizon(const struct BmAnalysis *analysis);

/**
 * Number of bases found (0 for a null handle).
 */
size_t bm_analysis_basis_count(const struct BmAnalysis *analysis);

/**
 * Objective of the full per-time-step model.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_analysis_full_objective(const struct BmAnalysis *analysis, double *out);

/**
 * Objective of the aggregated (one block per basis) model.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_analysis_aggregated_objective(const struct BmAnalysis *analysis, double *out);

/**
 * Whether the exactness audit passed.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_analysis_exactness_pass(const struct BmAnalysis *analysis, bool *out);

/**
 * Weight (member count) of one basis, by zero-based index.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_analysis_basis_weight(const struct BmAnalysis *analysis,
                                       size_t index,
                                       uint64_t *out);

/**
 * Misclassification cost and host of merging two bases (zero-based), with
 * no re-solve.
 *
 * # Safety
 * `analysis` must be a live handle; `out_com` and `out_host` must be
 * writable.
 */
enum BmStatus bm_analysis_pairwise_com(const struct BmAnalysis *analysis,
                                       size_t basis_a,
                                       size_t basis_b,
                                       double *out_com,
                                       size_t *out_host);

/**
 * Run a merger-search strategy down to `target_k` clusters.
 * `exhaustive_cap` of 0 means the built-in default.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_run_strategy(const struct BmAnalysis *analysis,
                              enum BmStrategy strategy,
                              size_t target_k,
                              size_t exhaustive_cap,
                              enum BmAdjacency adjacency,
                              struct BmTrace **out);

/**
 * Number of recorded levels in a trace (0 for a null handle).
 */
size_t bm_trace_level_count(const struct BmTrace *trace);

/**
 * Cluster count, misclassification cost, and evaluated-merger count of one
 * trace level (zero-based, ordered from all-singletons downwards).
 *
 * # Safety
 * `trace` must be a live handle; out pointers must be writable.
 */
enum BmStatus bm_trace_level(const struct BmTrace *trace,
                             size_t index,
                             size_t *out_k,
                             double *out_com,
                             uint64_t *out_evaluated);

/**
 * Canonical text of one level's partition, e.g. `{1,2},{3}` (1-based ids).
 * Pass a null `buf` to query the required size through `written`.
 *
 * # Safety
 * `trace` must be a live handle; `buf`/`written` follow the buffer contract.
 */
enum BmStatus bm_trace_partition(const struct BmTrace *trace,
                                 size_t index,
                                 char *buf,
                                 size_t cap,
                                 size_t *written);

/**
 * Decimal string of the Bell number B_n.
 *
 * # Safety
 * `buf`/`written` follow the buffer contract.
 */
enum BmStatus bm_bell_number(uint32_t n, char *buf, size_t cap, size_t *written);

/**
 * Decimal string of the Stirling number of the second kind S(n, k).
 *
 * # Safety
 * `buf`/`written` follow the buffer contract.
 */
enum BmStatus bm_stirling2(uint32_t n, uint32_t k, char *buf, size_t cap, size_t *written);

/**
 * # Safety
 * `handle` must come from this interface and not be used afterwards.
 */
void bm_network_free(struct BmNetwork *handle);

/**
 * # Safety
 * `handle` must come from this interface and not be used afterwards.
 */
void bm_timeseries_free(struct BmTimeseries *handle);

/**
 * # Safety
 * `handle` must come from this interface and not be used afterwards.
 */
void bm_analysis_free(struct BmAnalysis *handle);

/**
 * # Safety
 * `handle` must come from this interface and not be used afterwards.
 */
void bm_trace_free(struct BmTrace *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BASEMERGE_H */
