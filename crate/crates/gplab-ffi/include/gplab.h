/* C interface to the dark-soliton stability laboratory. */

#ifndef GPLAB_H
#define GPLAB_H

/* Generated by cbindgen from the gplab-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define GPL_OK 0

/**
 * A parameter or configuration was rejected.
 */
#define GPL_ERR_INVALID 2

/**
 * A guard tripped or an algorithm failed to converge.
 */
#define GPL_ERR_NUMERICAL 3

/**
 * Reading or writing run artifacts failed.
 */
#define GPL_ERR_IO 4

/**
 * An internal invariant was violated; the handle state is unspecified.
 */
#define GPL_ERR_PANIC 5

/**
 * Diagnostic columns of a run's modulation track.
 */
typedef enum GplTrackColumn {
  /**
   * Sample time.
   */
  GPL_TRACK_COLUMN_TIME = 0,
  /**
   * Fitted soliton center a(t).
   */
  GPL_TRACK_COLUMN_CENTER = 1,
  /**
   * Fitted soliton speed c(t).
   */
  GPL_TRACK_COLUMN_SPEED = 2,
  /**
   * Finite-difference rate a'(t).
   */
  GPL_TRACK_COLUMN_CENTER_RATE = 3,
  /**
   * Finite-difference rate c'(t).
   */
  GPL_TRACK_COLUMN_SPEED_RATE = 4,
  /**
   * Energy-space norm of the residual field.
   */
  GPL_TRACK_COLUMN_EPS_NORM_X = 5,
  /**
   * First orthogonality residual.
   */
  GPL_TRACK_COLUMN_RESIDUAL_ONE = 6,
  /**
   * Second orthogonality residual.
   */
  GPL_TRACK_COLUMN_RESIDUAL_TWO = 7,
} GplTrackColumn;

/**
 * Scale of the verification battery.
 */
typedef enum GplVerifyLevel {
  /**
   * Reduced grids and horizons; completes in seconds.
   */
  GPL_VERIFY_LEVEL_FAST = 0,
  /**
   * Acceptance-grade grids, horizons, and thresholds.
   */
  GPL_VERIFY_LEVEL_FULL = 1,
} GplVerifyLevel;

/**
 * Spatial grid on `[-half_length, half_length)`.
 */
typedef struct GplGrid GplGrid;

/**
 * An analysis result serialized as JSON.
 */
typedef struct GplReport GplReport;

/**
 * A completed simulation run with its tracked diagnostics.
 */
typedef struct GplRun GplRun;

/**
 * Travelling-wave profile with a fixed speed and center.
 */
typedef struct GplSoliton GplSoliton;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Describes the most recent failure on the calling thread. Returns the
 * required capacity (terminator included); copies a possibly truncated,
 * always NUL-terminated message when `buf` is non-null.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t gpl_last_error_message(char *buf, size_t cap);

/**
 * Speed of sound of the unit background; profiles exist for
 * `0 < |speed| < gpl_sound_speed()`.
 */
double gpl_sound_speed(void);

/**
 * Creates a uniform periodic grid with the given half-length and number
 * of points. Returns null on invalid parameters.
 */
struct GplGrid *gpl_grid_new(double half_length, size_t points);

/**
 * Releases a grid. Accepts null.
 *
 * # Safety
 * `grid` must be null or a handle from [`gpl_grid_new`] that has not
 * been freed.
 */
void gpl_grid_free(struct GplGrid *grid);

/**
 * Number of grid points; 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle from [`gpl_grid_new`].
 */
size_t gpl_grid_len(const struct GplGrid *grid);

/**
 * Copies the node coordinates into `out`, which must hold exactly
 * `gpl_grid_len` values.
 *
 * # Safety
 * `grid` must be null or a live handle; `out` must be null or point to
 * `len` writable doubles.
 */
int32_t gpl_grid_nodes(const struct GplGrid *grid, double *out, size_t len);

/**
 * Creates a travelling-wave profile. Returns null when the speed is not
 * in `(0, sqrt(2))` up to sign or the center is not finite.
 */
struct GplSoliton *gpl_soliton_new(double speed, double center);

/**
 * Releases a soliton. Accepts null.
 *
 * # Safety
 * `soliton` must be null or a handle from [`gpl_soliton_new`] that has
 * not been freed.
 */
void gpl_soliton_free(struct GplSoliton *soliton);

/**
 * Closed-form invariants of a profile: energy, momentum, and the
 * momentum's derivative in the speed. Null output pointers are skipped.
 *
 * # Safety
 * `soliton` must be null or a live handle; each output must be null or
 * point to a writable double.
 */
int32_t gpl_soliton_invariants(const struct GplSoliton *soliton,
                               double *energy,
                               double *momentum,
                               double *momentum_slope);

/**
 * Samples the profile's density dip and phase gradient on a grid. Both
 * buffers must hold exactly `gpl_grid_len` values.
 *
 * # Safety
 * `soliton` and `grid` must be null or live handles; `eta` and `v` must
 * be null or point to `len` writable doubles.
 */
int32_t gpl_soliton_profile(const struct GplSoliton *soliton,
                            const struct GplGrid *grid,
                            double *eta,
                            double *v,
                            size_t len);

/**
 * Bottom of the essential spectrum of the linearized operator at the
 * given speed.
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
int32_t gpl_essential_edge(double speed, double *out);

/**
 * Bottom of the essential spectrum of the reduced single-field operator
 * at the given speed.
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
int32_t gpl_reduced_edge(double speed, double *out);

/**
 * Constrained coercivity constant of the second variation at the given
 * speed, computed on a grid with the given half-length and points.
 *
 * # Safety
 * `lambda` must be null or point to a writable double.
 */
int32_t gpl_coercivity(double speed, double half_length, size_t points, double *lambda);

/**
 * Runs a simulation described by a JSON configuration (see the run
 * configuration schema) and returns a handle to its artifacts. When the
 * configuration names an output directory the artifact files are written
 * as well. Returns null on failure.
 *
 * # Safety
 * `config_json` must be null or a NUL-terminated string.
 */
struct GplRun *gpl_run_from_json(const char *config_json);

/**
 * Releases a run. Accepts null.
 *
 * # Safety
 * `run` must be null or a handle from [`gpl_run_from_json`] that has
 * not been freed.
 */
void gpl_run_free(struct GplRun *run);

/**
 * Serializes the run summary (resolved configuration, conservation
 * drifts, tracked norms, settling statistics, exit status) as JSON.
 * Two-call pattern; see the module documentation.
 *
 * # Safety
 * `run` must be null or a live handle; `buf` must be null or point to
 * `cap` writable bytes; `needed` must be null or writable.
 */
int32_t gpl_run_summary_json(const struct GplRun *run, char *buf, size_t cap, size_t *needed);

/**
 * Number of samples in the run's modulation track; 0 when tracking
 * failed or the handle is null.
 *
 * # Safety
 * `run` must be null or a live handle from [`gpl_run_from_json`].
 */
size_t gpl_run_track_len(const struct GplRun *run);

/**
 * Copies one diagnostic column of the modulation track into `out`,
 * which must hold exactly `gpl_run_track_len` values.
 *
 * # Safety
 * `run` must be null or a live handle; `out` must be null or point to
 * `len` writable doubles.
 */
int32_t gpl_run_track_column(const struct GplRun *run,
                             enum GplTrackColumn column,
                             double *out,
                             size_t len);

/**
 * Releases a report. Accepts null.
 *
 * # Safety
 * `report` must be null or a report handle that has not been freed.
 */
void gpl_report_free(struct GplReport *report);

/**
 * Copies a report's JSON text. Two-call pattern; see the module
 * documentation.
 *
 * # Safety
 * `report` must be null or a live handle; `buf` must be null or point
 * to `cap` writable bytes; `needed` must be null or writable.
 */
int32_t gpl_report_json(const struct GplReport *report, char *buf, size_t cap, size_t *needed);

/**
 * Runs an amplitude-scaling sweep around a JSON-configured run and
 * returns the fitted log-log slopes as a JSON report. Returns null on
 * failure.
 *
 * # Safety
 * `config_json` must be null or a NUL-terminated string; `amplitudes`
 * must be null or point to `count` readable doubles.
 */
struct GplReport *gpl_sweep_from_json(const char *config_json,
                                      const double *amplitudes,
                                      size_t count);

/**
 * Runs the verification battery at the given level and returns the
 * per-criterion verdicts as a JSON report. Failed criteria are data,
 * not errors; the report's `all_passed` field gives the overall verdict.
 */
struct GplReport *gpl_verify(enum GplVerifyLevel level);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPLAB_H */
