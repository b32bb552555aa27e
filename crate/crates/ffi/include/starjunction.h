#ifndef STARJUNCTION_H
#define STARJUNCTION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Columns with a fitted order.
 */
typedef enum SjColumn {
  SJ_COLUMN_MAX_L2 = 0,
  SJ_COLUMN_L2H1 = 1,
  SJ_COLUMN_NODE_GRAD = 2,
  SJ_COLUMN_MU = 3,
} SjColumn;

/**
 * Regime of a problem.
 */
typedef enum SjRegime {
  SJ_REGIME_A = 0,
  SJ_REGIME_B = 1,
  SJ_REGIME_C = 2,
  SJ_REGIME_UNSUPPORTED = 3,
} SjRegime;

/**
 * Status codes. The numeric values match the exit codes of the command-line tool
 * where they overlap.
 */
typedef enum SjStatus {
  SJ_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8, index out of range.
   */
  SJ_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The configuration or the requested parameters are not admissible.
   */
  SJ_STATUS_CONFIG = 2,
  /**
   * A solver failed (Newton, linear solver, i/o).
   */
  SJ_STATUS_SOLVER = 3,
  /**
   * Validation checks failed.
   */
  SJ_STATUS_VALIDATION_FAILED = 4,
  /**
   * A panic was caught at the boundary.
   */
  SJ_STATUS_PANIC = 5,
} SjStatus;

/**
 * Opaque configured problem.
 */
typedef struct SjProblem SjProblem;

/**
 * Opaque convergence report.
 */
typedef struct SjReport SjReport;

/**
 * Options of a convergence study.
 */
typedef struct SjStudyOptions {
  /**
   * 0 or 1.
   */
  int32_t order;
  /**
   * Voxels across the node half-side; 0 takes the configured value.
   */
  size_t resolution;
  /**
   * Nonzero: use the manufactured reference `U + c eps^p (t/T) / sqrt|Omega|`.
   */
  int32_t synthetic;
  double synthetic_c;
  double synthetic_p;
  /**
   * Nonzero: run the `eps` values on separate threads.
   */
  int32_t parallel;
} SjStudyOptions;

/**
 * One row of a convergence report. `ok` is 0 when the run for this `eps` failed;
 * the norms are then NaN.
 */
typedef struct SjErrorRow {
  double epsilon;
  double max_l2;
  double l2h1;
  double node_grad;
  double mu;
  int32_t ok;
} SjErrorRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *sj_last_error_message(void);

void sj_clear_error(void);

/**
 * Builds a problem from a JSON configuration string.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SjStatus sj_problem_from_json(const char *json, struct SjProblem **out);

/**
 * Builds a problem from a JSON configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SjStatus sj_problem_from_file(const char *path, struct SjProblem **out);

/**
 * The built-in default study problem.
 *
 * # Safety
 * `out` must be writable.
 */
enum SjStatus sj_problem_default(struct SjProblem **out);

/**
 * Sets the number of time steps of a problem.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum SjStatus sj_problem_set_time_steps(struct SjProblem *problem, size_t steps);

/**
 * Releases a problem; null is ignored.
 *
 * # Safety
 * `problem` must come from this library and not be used afterwards.
 */
void sj_problem_free(struct SjProblem *problem);

/**
 * Regime of a problem; [`SjRegime::Unsupported`] for a null handle.
 *
 * # Safety
 * `problem` must be a live handle or null.
 */
enum SjRegime sj_problem_regime(const struct SjProblem *problem);

/**
 * Rate `mu(eps)` of the problem's regime with its configured cutoff exponent.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum SjStatus sj_mu(const struct SjProblem *problem, double epsilon, double *out);

/**
 * Default study options: first order, configured resolution, real reference runs
 * in parallel.
 */
struct SjStudyOptions sj_study_options_default(void);

/**
 * Runs a convergence study over `n` strictly decreasing values of `eps`. When
 * `output_dir` is non-null the report files are written there.
 *
 * # Safety
 * `problem` must be a live handle, `eps` must point to `n` values, `output_dir`
 * must be null or NUL-terminated and `out` must be writable.
 */
enum SjStatus sj_convergence_run(const struct SjProblem *problem,
                                 const double *eps,
                                 size_t n,
                                 const struct SjStudyOptions *options,
                                 const char *output_dir,
                                 struct SjReport **out);

/**
 * Number of rows (one per `eps`, failed runs included); 0 for null.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
size_t sj_report_rows(const struct SjReport *report);

/**
 * Row `i` of the requested approximation's errors.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SjStatus sj_report_row(const struct SjReport *report, size_t i, struct SjErrorRow *out);

/**
 * Fitted log-log order of a column over the successful rows.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SjStatus sj_report_order(const struct SjReport *report, enum SjColumn column, double *out);

/**
 * The full report as a JSON string; release it with [`sj_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SjStatus sj_report_json(const struct SjReport *report, char **out);

/**
 * Releases a report; null is ignored.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void sj_report_free(struct SjReport *report);

/**
 * Runs the validation checks. Writes the JSON checklist to `json_out` when it is
 * non-null and returns [`SjStatus::ValidationFailed`] if any check failed.
 *
 * # Safety
 * `problem` must be a live handle; `json_out` must be null or writable.
 */
enum SjStatus sj_validate(const struct SjProblem *problem, uint64_t seed, char **json_out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sj_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STARJUNCTION_H */
