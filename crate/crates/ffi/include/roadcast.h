/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ROADCAST_H
#define ROADCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Error values match the CLI exit codes.
 */
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_USAGE = 2,
  RC_STATUS_PARSE = 3,
  RC_STATUS_INFEASIBLE = 4,
  RC_STATUS_CAP_EXCEEDED = 5,
  RC_STATUS_IO = 6,
  RC_STATUS_NUMERIC = 7,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  RC_STATUS_INVALID_ARGUMENT = 8,
  /**
   * The caller's buffer is too small; the needed length was written.
   */
  RC_STATUS_BUFFER_TOO_SMALL = 9,
  /**
   * The library panicked; the handle involved should not be reused.
   */
  RC_STATUS_INTERNAL = 10,
} RcStatus;

/**
 * Per-path metric.
 */
typedef enum RcMetric {
  /**
   * Covered fraction of path length.
   */
  RC_METRIC_DISTANCE = 0,
  /**
   * Covered fraction of travel time under the mean scenario.
   */
  RC_METRIC_TIME = 1,
  /**
   * Average throughput under the mean scenario.
   */
  RC_METRIC_THROUGHPUT = 2,
} RcMetric;

/**
 * A parsed network with its candidate sites, coverage partition and paths.
 */
typedef struct RcInstance RcInstance;

/**
 * A planner result.
 */
typedef struct RcPlan RcPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *rc_last_error(void);

/**
 * Static name of a status, such as `"INFEASIBLE"`.
 */
const char *rc_status_name(enum RcStatus status);

const char *rc_version(void);

/**
 * Parses a network file and, if `paths` is not null, a paths file.
 *
 * # Safety
 * `network` and `paths` must be null or NUL-terminated strings; `out` must
 * be a valid pointer.
 */
enum RcStatus rc_instance_parse(const char *network, const char *paths, struct RcInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from [`rc_instance_parse`] not yet freed.
 */
void rc_instance_free(struct RcInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle.
 */
size_t rc_instance_site_count(const struct RcInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle.
 */
size_t rc_instance_path_count(const struct RcInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle.
 */
size_t rc_instance_subsegment_count(const struct RcInstance *inst);

/**
 * Index of the site labelled `label`, or `UINT32_MAX` when there is none.
 *
 * # Safety
 * `inst` must be a live handle and `label` a NUL-terminated string.
 */
uint32_t rc_instance_site_index(const struct RcInstance *inst, const char *label);

/**
 * Per-path metric values of a deployment, written to `out` (capacity `cap`).
 * `*len` receives the path count.
 *
 * # Safety
 * `sites` must hold `n_sites` indices; `out` must hold `cap` doubles.
 */
enum RcStatus rc_evaluate(const struct RcInstance *inst,
                          const uint32_t *sites,
                          size_t n_sites,
                          enum RcMetric metric,
                          double *out,
                          size_t cap,
                          size_t *len);

/**
 * Worst-case throughput over all paths and scenarios for a deployment, and
 * the path attaining it.
 *
 * # Safety
 * `sites` must hold `n_sites` indices; `value` and `path` must be valid.
 */
enum RcStatus rc_worst_case(const struct RcInstance *inst,
                            const uint32_t *sites,
                            size_t n_sites,
                            double *value,
                            uint32_t *path);

/**
 * Cheapest deployment found by greedy covering that reaches `lambda` on every path.
 *
 * # Safety
 * `inst` must be a live handle and `out` valid.
 */
enum RcStatus rc_plan_mincost(const struct RcInstance *inst,
                              enum RcMetric metric,
                              double lambda,
                              struct RcPlan **out);

/**
 * Best min-path value within `budget`, to a target resolution of `delta`.
 *
 * # Safety
 * `inst` must be a live handle and `out` valid.
 */
enum RcStatus rc_plan_maxopp(const struct RcInstance *inst,
                             enum RcMetric metric,
                             double budget,
                             double delta,
                             struct RcPlan **out);

/**
 * Deployment whose worst-case throughput reaches `lambda`, planned on the
 * mean-speed scenario with the target raised in steps of `tau`.
 *
 * # Safety
 * `inst` must be a live handle and `out` valid.
 */
enum RcStatus rc_plan_robust(const struct RcInstance *inst,
                             double lambda,
                             double tau,
                             struct RcPlan **out);

/**
 * # Safety
 * `plan` must be null or a handle from an `rc_plan_*` call not yet freed.
 */
void rc_plan_free(struct RcPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
double rc_plan_cost(const struct RcPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
double rc_plan_min_value(const struct RcPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
bool rc_plan_feasible(const struct RcPlan *plan);

/**
 * Selected site indices in pick order.
 *
 * # Safety
 * `plan` must be a live handle; `out` must hold `cap` values.
 */
enum RcStatus rc_plan_sites(const struct RcPlan *plan, uint32_t *out, size_t cap, size_t *len);

/**
 * Achieved per-path values.
 *
 * # Safety
 * `plan` must be a live handle; `out` must hold `cap` values.
 */
enum RcStatus rc_plan_values(const struct RcPlan *plan, double *out, size_t cap, size_t *len);

/**
 * The plan as JSON, or null on failure.
 *
 * # Safety
 * `plan` must be a live handle; the caller frees the string with [`rc_string_free`].
 */
char *rc_plan_to_json(const struct RcPlan *plan);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void rc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROADCAST_H */
