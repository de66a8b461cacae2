#ifndef BELLNOISE_H
#define BELLNOISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum BnStatus {
  BN_STATUS_OK = 0,
  BN_STATUS_NULL_POINTER = 1,
  BN_STATUS_DOMAIN = 2,
  BN_STATUS_INVALID_CONFIG = 3,
  BN_STATUS_WINDOW_OVERFLOW = 4,
  BN_STATUS_UNSUPPORTED = 5,
  BN_STATUS_MASS_DEFICIT = 6,
  BN_STATUS_DEGENERATE_DENOMINATOR = 7,
  BN_STATUS_NON_MONOTONE = 8,
  BN_STATUS_CUTOFF_NOT_BRACKETED = 9,
  BN_STATUS_CUTOFF_MASS = 10,
  BN_STATUS_PANIC = 99,
} BnStatus;

/**
 * Joint distribution of integer outcome pairs.
 */
typedef struct BnDistribution BnDistribution;

/**
 * Four prepared distributions for one source and set of angles.
 */
typedef struct BnExperiment BnExperiment;

/**
 * Analyzer angles in radians.
 */
typedef struct BnSettings {
  double theta;
  double phi;
  double theta_prime;
  double phi_prime;
} BnSettings;

/**
 * `p_pp` is ordered `(θ,φ), (θ,φ′), (θ′,φ), (θ′,φ′)`; `p_a` is `P₊^A(θ′)`,
 * `p_b` is `P₊^B(φ)`.
 */
typedef struct BnChEvaluation {
  double sigma;
  double p_pp[4];
  double p_a;
  double p_b;
  double s;
} BnChEvaluation;

typedef struct BnSigmaCutoff {
  double sigma_c;
  double s_at_zero;
  bool violated;
} BnSigmaCutoff;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default pair-coherent settings `(0, −π/4, π/2, −3π/4)`.
 */
struct BnSettings bn_settings_pair_coherent_default(void);

/**
 * Pair-coherent source in the large-oscillator limit on the standard grid.
 * Noise passed to later calls is in quadrature units.
 *
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum BnStatus bn_experiment_new_quadrature(double r0,
                                           double tail_tol,
                                           struct BnSettings settings,
                                           double eta,
                                           struct BnExperiment **out);

/**
 * Pair-coherent source with finite oscillators `α = β = alpha` (at most 12).
 *
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum BnStatus bn_experiment_new_exact(double r0,
                                      double alpha,
                                      double tail_tol,
                                      struct BnSettings settings,
                                      struct BnExperiment **out);

/**
 * Spin-pair source with `n` photons per side.
 *
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum BnStatus bn_experiment_new_spin(uint32_t n,
                                     struct BnSettings settings,
                                     struct BnExperiment **out);

/**
 * # Safety
 * `exp` must be a live handle from a `bn_experiment_new_*` call and `out`
 * must point to writable storage.
 */
enum BnStatus bn_experiment_evaluate(const struct BnExperiment *exp,
                                     double sigma,
                                     struct BnChEvaluation *out);

/**
 * Largest noise width with `S > 1`; `tol` is relative to the noise scale
 * and must lie in `(0, 1e-3]`.
 *
 * # Safety
 * `exp` must be a live handle and `out` must point to writable storage.
 */
enum BnStatus bn_experiment_sigma_cutoff(const struct BnExperiment *exp,
                                         double tol,
                                         struct BnSigmaCutoff *out);

/**
 * # Safety
 * `exp` must be NULL or a handle not yet freed.
 */
void bn_experiment_free(struct BnExperiment *exp);

/**
 * Maximizes `S` over settings `(0, ψ, 2ψ, 3ψ)` for the spin-pair state.
 *
 * # Safety
 * `psi_out` and `out` must point to writable storage.
 */
enum BnStatus bn_spin_optimize_psi(uint32_t n,
                                   double sigma,
                                   double *psi_out,
                                   struct BnChEvaluation *out);

/**
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum BnStatus bn_distribution_exact(double r0,
                                    double alpha,
                                    double tail_tol,
                                    double theta,
                                    double phi,
                                    struct BnDistribution **out);

/**
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum BnStatus bn_distribution_spin(uint32_t n,
                                   double theta,
                                   double phi,
                                   struct BnDistribution **out);

/**
 * Outcome window `i_min..=i_max`, `j_min..=j_max`.
 *
 * # Safety
 * `dist` must be a live handle; the four outputs must be writable.
 */
enum BnStatus bn_distribution_window(const struct BnDistribution *dist,
                                     int64_t *i_min,
                                     int64_t *i_max,
                                     int64_t *j_min,
                                     int64_t *j_max);

/**
 * Probability of `(i, j)`; 0 outside the window or for a NULL handle.
 *
 * # Safety
 * `dist` must be NULL or a live handle.
 */
double bn_distribution_get(const struct BnDistribution *dist, int64_t i, int64_t j);

/**
 * # Safety
 * `dist` must be a live handle and the outputs writable.
 */
enum BnStatus bn_distribution_binarize(const struct BnDistribution *dist,
                                       double sigma,
                                       double *p_pp,
                                       double *p_a,
                                       double *p_b);

/**
 * # Safety
 * `dist` must be NULL or a handle not yet freed.
 */
void bn_distribution_free(struct BnDistribution *dist);

/**
 * Message for the most recent failure on this thread, empty after success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *bn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BELLNOISE_H */
