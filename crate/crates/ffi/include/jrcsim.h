#ifndef JRCSIM_H
#define JRCSIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JrcStatus {
  JRC_STATUS_OK = 0,
  JRC_STATUS_NULL_POINTER = 1,
  JRC_STATUS_INVALID_ARGUMENT = 2,
  JRC_STATUS_CONFIG = 3,
  JRC_STATUS_RUNTIME = 4,
  JRC_STATUS_IO = 5,
  JRC_STATUS_OUT_OF_RANGE = 6,
  JRC_STATUS_PANIC = 7,
} JrcStatus;

// Resolved run configuration.
typedef struct JrcConfig JrcConfig;

// Result of a ROC sweep.
typedef struct JrcRoc JrcRoc;

// Outcome of a single trial.
typedef struct JrcTrialResult {
  // 1 if the pipeline completed, 0 otherwise.
  uint8_t valid;
  // 1 if the echo really came from a physical target.
  uint8_t truth_real;
  // 1 if `score > gamma` at the configured detector threshold.
  uint8_t decided_real;
  double t_stat;
  // `t_stat / sigma2`, or `t_stat` when noiseless.
  double score;
  double sigma2;
  double r0_hat_h0;
  double v_hat_h0;
  double f_cfo_hat_h0;
  double residual_h0;
  double r0_hat_h1;
  double v_hat_h1;
  double residual_h1;
} JrcTrialResult;

typedef struct JrcCurveInfo {
  double snr_db;
  uint8_t genie;
  size_t n_points;
  size_t n_trials;
  size_t n_valid_h0;
  size_t n_valid_h1;
  size_t n_invalid;
} JrcCurveInfo;

typedef struct JrcRocPoint {
  double gamma;
  double p_fa;
  double p_d;
  double p_fa_lo;
  double p_fa_hi;
  double p_d_lo;
  double p_d_hi;
} JrcRocPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next
// failing call on the same thread.
const char *jrc_last_error_message(void);

// Library version, a static string.
const char *jrc_version(void);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum JrcStatus jrc_config_new_default(struct JrcConfig **out);

// Loads a TOML config or run manifest.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum JrcStatus jrc_config_load(const char *path, struct JrcConfig **out);

// Applies one `section.key=value` override. On failure the configuration
// is left unchanged.
//
// # Safety
// `cfg` must be a live handle and `assignment` a NUL-terminated string.
enum JrcStatus jrc_config_set(struct JrcConfig *cfg, const char *assignment);

// # Safety
// `cfg` must be NULL or a handle not yet freed.
void jrc_config_free(struct JrcConfig *cfg);

// Runs the configured single-trial scenario. With `genie != 0` the
// false-target fit uses the scenario's true CFO.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum JrcStatus jrc_run_trial(const struct JrcConfig *cfg,
                             uint8_t genie,
                             struct JrcTrialResult *out);

// Runs the configured ROC sweep on `workers` threads (0 = all cores).
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum JrcStatus jrc_roc_run(const struct JrcConfig *cfg, size_t workers, struct JrcRoc **out);

// Number of curves; 0 for NULL.
//
// # Safety
// `roc` must be NULL or a live handle.
size_t jrc_roc_curve_count(const struct JrcRoc *roc);

// # Safety
// `roc` must be a live handle and `out` a valid pointer.
enum JrcStatus jrc_roc_curve_info(const struct JrcRoc *roc, size_t curve, struct JrcCurveInfo *out);

// # Safety
// `roc` must be a live handle and `out` a valid pointer.
enum JrcStatus jrc_roc_point(const struct JrcRoc *roc,
                             size_t curve,
                             size_t index,
                             struct JrcRocPoint *out);

// Writes all curves in the ROC CSV schema.
//
// # Safety
// `roc` must be a live handle and `path` a NUL-terminated string.
enum JrcStatus jrc_roc_write_csv(const struct JrcRoc *roc, const char *path);

// # Safety
// `roc` must be NULL or a handle not yet freed.
void jrc_roc_free(struct JrcRoc *roc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JRCSIM_H */
