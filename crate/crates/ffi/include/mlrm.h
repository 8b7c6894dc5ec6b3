#ifndef MLRM_H
#define MLRM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MLRM_FORMAT_CSV = 0,
  MLRM_FORMAT_JSON = 1,
} MlrmFormat;

typedef enum {
  MLRM_STATUS_OK = 0,
  MLRM_STATUS_NULL_ARGUMENT = 1,
  MLRM_STATUS_INVALID_UTF8 = 2,
  MLRM_STATUS_IO = 3,
  MLRM_STATUS_PARSE = 4,
  MLRM_STATUS_VALIDATION = 5,
  MLRM_STATUS_SIMULATION = 6,
  MLRM_STATUS_OUT_OF_RANGE = 7,
  MLRM_STATUS_INTERNAL = 8,
} MlrmStatus;

typedef enum {
  MLRM_STRATEGY_EDF = 0,
  MLRM_STRATEGY_PROPORTIONAL = 1,
} MlrmStrategy;

typedef enum {
  MLRM_TRAJECTORY_LINEAR = 0,
  MLRM_TRAJECTORY_QUADRATIC = 1,
} MlrmTrajectory;

/**
 * The result of one simulation run.
 */
typedef struct MlrmRun MlrmRun;

/**
 * A parsed and validated scenario.
 */
typedef struct MlrmScenario MlrmScenario;

/**
 * One completed federation round as seen by the epoch estimator.
 */
typedef struct {
  uint32_t round;
  uint32_t epochs;
  /**
   * Cumulative epochs through this round.
   */
  uint32_t cumulative_epochs;
  double accuracy;
} MlrmRound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *mlrm_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mlrm_string_free(char *s);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
MlrmStatus mlrm_scenario_load(const char *path, MlrmScenario **out_scenario);

/**
 * Parses and validates a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
MlrmStatus mlrm_scenario_parse(const char *toml, MlrmScenario **out_scenario);

/**
 * Replaces the seed. The scenario is left unchanged on failure.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
MlrmStatus mlrm_scenario_set_seed(MlrmScenario *scenario, uint64_t seed);

/**
 * Replaces the policy id. The scenario is left unchanged on failure.
 *
 * # Safety
 * `scenario` must be a live handle and `policy` a NUL-terminated string.
 */
MlrmStatus mlrm_scenario_set_policy(MlrmScenario *scenario, const char *policy);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void mlrm_scenario_free(MlrmScenario *scenario);

/**
 * Runs a scenario to completion.
 *
 * # Safety
 * `scenario` must be a live handle; `out_run` must be writable.
 */
MlrmStatus mlrm_run(const MlrmScenario *scenario, MlrmRun **out_run);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void mlrm_run_free(MlrmRun *run);

/**
 * Summary of a run as a JSON object. Free the string with [`mlrm_string_free`].
 *
 * # Safety
 * `run` must be a live handle; `out_json` must be writable.
 */
MlrmStatus mlrm_run_summary_json(const MlrmRun *run, char **out_json);

/**
 * Writes `{stem}.{policy}.csv|json` and its summary into `dir`.
 *
 * # Safety
 * `run` must be a live handle; `dir` and `stem` NUL-terminated strings.
 */
MlrmStatus mlrm_run_export(const MlrmRun *run,
                           const char *dir,
                           const char *stem,
                           MlrmFormat format);

/**
 * Splits `capacity` cores among `len` demands. `grants` receives one value per demand.
 *
 * # Safety
 * `cores`, `deadlines` and `grants` must each hold `len` elements.
 */
MlrmStatus mlrm_resolve_contention(const double *cores,
                                   const double *deadlines,
                                   size_t len,
                                   double capacity,
                                   MlrmStrategy strategy,
                                   double *grants);

/**
 * Accuracy target for round `round` given the anchor `(anchor_round, anchor_accuracy)`.
 *
 * # Safety
 * `out_target` must be writable.
 */
MlrmStatus mlrm_target_accuracy(uint32_t round,
                                uint32_t rounds,
                                double ac_sla,
                                MlrmTrajectory trajectory,
                                uint32_t anchor_round,
                                double anchor_accuracy,
                                double *out_target);

/**
 * Epochs for the next round from the two most recent rounds, capped at `e_max`.
 *
 * # Safety
 * `older`, `last` must be readable and `out_epochs` writable.
 */
MlrmStatus mlrm_estimate_epochs(double target,
                                const MlrmRound *older,
                                const MlrmRound *last,
                                uint32_t e_max,
                                uint32_t *out_epochs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLRM_H */
