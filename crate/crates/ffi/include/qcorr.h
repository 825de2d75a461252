#ifndef QCORR_H
#define QCORR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define QCORR_SPECIES_PHOTON 0

#define QCORR_SPECIES_HALF 1

typedef enum QcorrStatus {
  QCORR_STATUS_OK = 0,
  QCORR_STATUS_NULL_POINTER = 1,
  QCORR_STATUS_DOMAIN = 2,
  QCORR_STATUS_INTEGRITY = 3,
  QCORR_STATUS_CONFIG = 4,
  QCORR_STATUS_NUMERICAL = 5,
  QCORR_STATUS_IO = 6,
  /**
   * The Hardy search found no admissible configuration.
   */
  QCORR_STATUS_NO_SOLUTION = 7,
  /**
   * The run has not been executed yet, or has no such setting.
   */
  QCORR_STATUS_INVALID_STATE = 8,
  QCORR_STATUS_PANIC = 9,
} QcorrStatus;

/**
 * Opaque Monte Carlo run.
 */
typedef struct QcorrRun QcorrRun;

/**
 * Joint outcome probabilities, `p_pm` = P(A = +1, B = −1).
 */
typedef struct QcorrJoint {
  double p_pp;
  double p_pm;
  double p_mp;
  double p_mm;
} QcorrJoint;

typedef struct QcorrHardy {
  /**
   * State `cos γ|HH⟩ + sin γ|VV⟩`.
   */
  double gamma;
  double a;
  double a_prime;
  double b;
  double b_prime;
  double p_star;
  /**
   * Largest of the three constrained probabilities.
   */
  double max_zero;
} QcorrHardy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `qcorr_*` call on the same thread.
 */
const char *qcorr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qcorr_version(void);

/**
 * `U = cos(s(θ₁ − θ₂) + s·φ₀)`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum QcorrStatus qcorr_correlation_u(uint32_t species_code,
                                     double phi0,
                                     double theta1,
                                     double theta2,
                                     double *out);

/**
 * Joint outcome distribution of the amplitude model.
 *
 * # Safety
 * `out` must be null or point to a writable `QcorrJoint`.
 */
enum QcorrStatus qcorr_joint_distribution(uint32_t species_code,
                                          double phi0,
                                          double theta1,
                                          double theta2,
                                          struct QcorrJoint *out);

/**
 * Born-rule joint distribution in the species' reference Bell state.
 *
 * # Safety
 * `out` must be null or point to a writable `QcorrJoint`.
 */
enum QcorrStatus qcorr_joint_probs_qm(uint32_t species_code,
                                      double theta1,
                                      double theta2,
                                      struct QcorrJoint *out);

/**
 * Analytic CHSH statistic of the amplitude model at the canonical pair
 * phase of the species.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum QcorrStatus qcorr_chsh_analytic(uint32_t species_code,
                                     double a,
                                     double a_prime,
                                     double b,
                                     double b_prime,
                                     double *out);

/**
 * Creates an empty run. Add settings, then execute.
 *
 * # Safety
 * `out` must be null or point to writable memory for one pointer.
 */
enum QcorrStatus qcorr_run_new(uint64_t seed,
                               uint64_t n_pairs,
                               uint32_t species_code,
                               double phi0,
                               struct QcorrRun **out);

/**
 * Appends a setting pair with relative `weight`.
 *
 * # Safety
 * `run` must be null or a live handle from `qcorr_run_new`.
 */
enum QcorrStatus qcorr_run_add_setting(struct QcorrRun *run,
                                       double theta1,
                                       double theta2,
                                       double weight);

/**
 * Nonzero `random` selects a seeded random schedule instead of the cyclic
 * default.
 *
 * # Safety
 * `run` must be null or a live handle from `qcorr_run_new`.
 */
enum QcorrStatus qcorr_run_set_random_schedule(struct QcorrRun *run, int32_t random);

/**
 * Simulates the run, splits it into station streams and matches them.
 *
 * # Safety
 * `run` must be null or a live handle from `qcorr_run_new`.
 */
enum QcorrStatus qcorr_run_execute(struct QcorrRun *run);

/**
 * Number of matched pairs from the last execution.
 *
 * # Safety
 * `run` must be null or a live handle; `out` must be null or writable.
 */
enum QcorrStatus qcorr_run_matched_count(const struct QcorrRun *run, uint64_t *out);

/**
 * Estimated correlation for one scheduled setting pair, matched exactly.
 *
 * # Safety
 * `run` must be null or a live handle; `out` must be null or writable.
 */
enum QcorrStatus qcorr_run_correlation(const struct QcorrRun *run,
                                       double theta1,
                                       double theta2,
                                       double *out);

/**
 * Releases a run. Null is ignored.
 *
 * # Safety
 * `run` must be null or a handle from `qcorr_run_new` not yet freed.
 */
void qcorr_run_free(struct QcorrRun *run);

/**
 * Hardy configuration search. Returns `QCORR_STATUS_NO_SOLUTION` when no
 * admissible configuration exists at this density.
 *
 * # Safety
 * `out` must be null or point to a writable `QcorrHardy`.
 */
enum QcorrStatus qcorr_hardy_search(uint32_t grid_density,
                                    double refine_tolerance,
                                    struct QcorrHardy *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCORR_H */
