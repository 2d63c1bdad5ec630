#ifndef CGALR_H
#define CGALR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum CgalrStatus {
  CGALR_STATUS_OK = 0,
  CGALR_STATUS_NULL_POINTER = 1,
  CGALR_STATUS_INVALID_ARGUMENT = 2,
  CGALR_STATUS_INVALID_DATA = 3,
  CGALR_STATUS_INVALID_STATE = 4,
  CGALR_STATUS_STRUCTURAL = 5,
  CGALR_STATUS_UNDEFINED_RATIO = 6,
  CGALR_STATUS_PARSE = 7,
  CGALR_STATUS_IO = 8,
  CGALR_STATUS_PANIC = 9,
} CgalrStatus;

/**
 * Which diagram distance [`cgalr_diagram_distance`] computes.
 */
typedef enum CgalrDiagramDistance {
  /**
   * `param` is the order p.
   */
  CGALR_DIAGRAM_DISTANCE_WASSERSTEIN = 0,
  /**
   * `param` is ignored.
   */
  CGALR_DIAGRAM_DISTANCE_BOTTLENECK = 1,
  /**
   * `param` is the bandwidth sigma.
   */
  CGALR_DIAGRAM_DISTANCE_HEAT = 2,
  /**
   * `param` is the order p; 50 directions.
   */
  CGALR_DIAGRAM_DISTANCE_SLICED_WASSERSTEIN = 3,
} CgalrDiagramDistance;

/**
 * Opaque learning-rate controller.
 */
typedef struct CgalrController CgalrController;

/**
 * Opaque H1 persistence diagram.
 */
typedef struct CgalrDiagram CgalrDiagram;

/**
 * Opaque topological signal state.
 */
typedef struct CgalrSignal CgalrSignal;

/**
 * Controller hyperparameters, field-for-field with the Rust configuration.
 */
typedef struct CgalrControllerConfig {
  double eta_star;
  double t0;
  double alpha;
  double gamma_down;
  double gamma_up;
  double gamma_late;
  double psi_min;
  double psi_max;
  size_t k_warm;
  size_t n_trigger;
  size_t cooldown;
  double n_late_ratio;
  size_t epochs;
  size_t batches_per_epoch;
} CgalrControllerConfig;

/**
 * Outcome of one epoch boundary.
 */
typedef struct CgalrEpochDecision {
  size_t epoch;
  double u;
  double psi;
  size_t cooldown_left;
  size_t consecutive_over;
} CgalrEpochDecision;

/**
 * Median with its percentile-bootstrap interval.
 */
typedef struct CgalrMedianCi {
  double median;
  double ci_low;
  double ci_high;
} CgalrMedianCi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty if none. Valid until the next failing call.
 */
const char *cgalr_last_error_message(void);

/**
 * Fill `out` with the image-regime constants.
 *
 * # Safety
 * `out` must be null or point to writable memory for one config.
 */
enum CgalrStatus cgalr_controller_config_image(double eta_star,
                                               size_t batches_per_epoch,
                                               struct CgalrControllerConfig *out);

/**
 * # Safety
 * `config` must be null or valid; `out` must be null or writable.
 */
enum CgalrStatus cgalr_controller_new(const struct CgalrControllerConfig *config,
                                      struct CgalrController **out);

/**
 * # Safety
 * `handle` must be null or come from [`cgalr_controller_new`] and not be freed yet.
 */
void cgalr_controller_free(struct CgalrController *handle);

/**
 * Rate for the next batch; advances the global batch counter.
 *
 * # Safety
 * `handle` must be a live controller; `out` must be null or writable.
 */
enum CgalrStatus cgalr_controller_batch_rate(struct CgalrController *handle, double *out);

/**
 * Apply the decision for 1-based `epoch` given its z-score and threshold.
 *
 * # Safety
 * `handle` must be a live controller; `out` must be null or writable.
 */
enum CgalrStatus cgalr_controller_end_of_epoch(struct CgalrController *handle,
                                               size_t epoch,
                                               double z,
                                               double threshold,
                                               struct CgalrEpochDecision *out);

/**
 * Current multiplier.
 *
 * # Safety
 * `handle` must be a live controller; `out` must be null or writable.
 */
enum CgalrStatus cgalr_controller_psi(const struct CgalrController *handle, double *out);

/**
 * `window == 0` means every observation so far.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum CgalrStatus cgalr_signal_new(double lambda,
                                  double tau,
                                  size_t window,
                                  double k_mad,
                                  struct CgalrSignal **out);

/**
 * # Safety
 * `handle` must be null or come from [`cgalr_signal_new`] and not be freed yet.
 */
void cgalr_signal_free(struct CgalrSignal *handle);

/**
 * Record one epoch distance; writes its z-score and the threshold that goes with it.
 *
 * # Safety
 * `handle` must be a live signal; `z` and `threshold` must be null or writable.
 */
enum CgalrStatus cgalr_signal_observe(struct CgalrSignal *handle,
                                      double delta,
                                      double *z,
                                      double *threshold);

/**
 * Diagram from `n` `(births[i], deaths[i])` pairs.
 *
 * # Safety
 * `births` and `deaths` must hold `n` values each; `out` must be null or writable.
 */
enum CgalrStatus cgalr_diagram_from_pairs(const double *births,
                                          const double *deaths,
                                          size_t n,
                                          struct CgalrDiagram **out);

/**
 * H1 diagram of the Rips filtration of a row-major `p x p` dissimilarity matrix.
 *
 * # Safety
 * `dissimilarity` must hold `p * p` values; `out` must be null or writable.
 */
enum CgalrStatus cgalr_diagram_from_dissimilarity(const double *dissimilarity,
                                                  size_t p,
                                                  struct CgalrDiagram **out);

/**
 * # Safety
 * `handle` must be null or come from a `cgalr_diagram_*` constructor and not be freed yet.
 */
void cgalr_diagram_free(struct CgalrDiagram *handle);

/**
 * # Safety
 * `handle` must be a live diagram; `out` must be null or writable.
 */
enum CgalrStatus cgalr_diagram_len(const struct CgalrDiagram *handle, size_t *out);

/**
 * Point `index`; points are sorted by birth, then death.
 *
 * # Safety
 * `handle` must be a live diagram; `birth` and `death` must be null or writable.
 */
enum CgalrStatus cgalr_diagram_point(const struct CgalrDiagram *handle,
                                     size_t index,
                                     double *birth,
                                     double *death);

/**
 * # Safety
 * `a` and `b` must be live diagrams; `out` must be null or writable.
 */
enum CgalrStatus cgalr_diagram_distance(enum CgalrDiagramDistance kind,
                                        const struct CgalrDiagram *a,
                                        const struct CgalrDiagram *b,
                                        double param,
                                        double *out);

/**
 * TOP distance between two persistence vectors of non-tree edge weights.
 *
 * # Safety
 * `u` holds `nu` values, `v` holds `nv`; `out` must be null or writable.
 */
enum CgalrStatus cgalr_top_distance(const double *u,
                                    size_t nu,
                                    const double *v,
                                    size_t nv,
                                    double *out);

/**
 * Relative error difference of a baseline error against the controller's error.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum CgalrStatus cgalr_red(double err_baseline, double err_cgalr, double *out);

/**
 * # Safety
 * `values` must hold `n` values; `out` must be null or writable.
 */
enum CgalrStatus cgalr_bootstrap_median_ci(const double *values,
                                           size_t n,
                                           size_t resamples,
                                           double level,
                                           uint64_t seed,
                                           struct CgalrMedianCi *out);

/**
 * Null-terminated library version.
 */
const char *cgalr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CGALR_H */
