#ifndef QSOFTCOVER_H
#define QSOFTCOVER_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QscStatus {
  QSC_STATUS_OK = 0,
  QSC_STATUS_NULL_POINTER = 1,
  QSC_STATUS_MALFORMED_INPUT = 2,
  QSC_STATUS_DIMENSION_MISMATCH = 3,
  QSC_STATUS_PRECONDITION = 4,
  QSC_STATUS_SUPPORT = 5,
  QSC_STATUS_NUMERICAL = 6,
  QSC_STATUS_LOOKUP = 7,
  QSC_STATUS_RESOURCE = 8,
  QSC_STATUS_CONFIG = 9,
  QSC_STATUS_IO = 10,
  QSC_STATUS_PANIC = 11,
} QscStatus;

/**
 * Channel handle.
 */
typedef struct QscChannel QscChannel;

/**
 * Classical-quantum ensemble handle.
 */
typedef struct QscEnsemble QscEnsemble;

/**
 * Density operator handle.
 */
typedef struct QscState QscState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *qsc_last_error(void);

/**
 * # Safety
 * `re` (and `im` when non-null) point to `dim·dim` doubles; `out` is writable.
 */
enum QscStatus qsc_state_from_matrix(size_t dim,
                                     const double *re,
                                     const double *im,
                                     struct QscState **out);

/**
 * # Safety
 * `out` is writable.
 */
enum QscStatus qsc_state_random(size_t dim, size_t rank, uint64_t seed, struct QscState **out);

/**
 * # Safety
 * `state` is a live handle or null.
 */
size_t qsc_state_dim(const struct QscState *state);

/**
 * # Safety
 * `state` came from this library and is not used afterwards.
 */
void qsc_state_free(struct QscState *state);

/**
 * # Safety
 * `out` is writable.
 */
enum QscStatus qsc_channel_identity(size_t dim, struct QscChannel **out);

/**
 * # Safety
 * `out` is writable.
 */
enum QscStatus qsc_channel_depolarizing(size_t dim, double p, struct QscChannel **out);

/**
 * # Safety
 * `out` is writable.
 */
enum QscStatus qsc_channel_random(size_t d_in,
                                  size_t d_out,
                                  size_t n_kraus,
                                  uint64_t seed,
                                  struct QscChannel **out);

/**
 * Kraus operators stacked one after another, each `d_out × d_in` row-major.
 *
 * # Safety
 * `re` (and `im` when non-null) hold `n_kraus·d_out·d_in` doubles; `out` is writable.
 */
enum QscStatus qsc_channel_from_kraus(size_t d_in,
                                      size_t d_out,
                                      size_t n_kraus,
                                      const double *re,
                                      const double *im,
                                      struct QscChannel **out);

/**
 * # Safety
 * `channel` came from this library and is not used afterwards.
 */
void qsc_channel_free(struct QscChannel *channel);

/**
 * # Safety
 * `out` is writable.
 */
enum QscStatus qsc_ensemble_binary_orthogonal(struct QscEnsemble **out);

/**
 * # Safety
 * `out` is writable.
 */
enum QscStatus qsc_ensemble_random(size_t n_symbols,
                                   size_t dim,
                                   uint64_t seed,
                                   struct QscEnsemble **out);

/**
 * Ensemble of the classical channel `W` (row-major `n_x × n_y`) with input PMF `q`.
 *
 * # Safety
 * `w` holds `n_x·n_y` doubles, `q` holds `n_x`; `out` is writable.
 */
enum QscStatus qsc_ensemble_from_classical(size_t n_x,
                                           size_t n_y,
                                           const double *w,
                                           const double *q,
                                           struct QscEnsemble **out);

/**
 * # Safety
 * `ens` came from this library and is not used afterwards.
 */
void qsc_ensemble_free(struct QscEnsemble *ens);

/**
 * `D(σ‖ρ)` in bits; `+inf` when the support condition fails.
 *
 * # Safety
 * Handles are live; `out` is writable.
 */
enum QscStatus qsc_relative_entropy(const struct QscState *sigma,
                                    const struct QscState *rho,
                                    double *out);

/**
 * `H_min(A|B)` of a state on `A ⊗ B`.
 *
 * # Safety
 * `state` is live; `out` is writable.
 */
enum QscStatus qsc_h_min(const struct QscState *state, size_t d_a, size_t d_b, double *out);

/**
 * Collision quantity `Q̃₂` of the covering instance `(ρ_A, N)`.
 *
 * # Safety
 * Handles are live; `out` is writable.
 */
enum QscStatus qsc_qcover_q2(const struct QscState *rho_a,
                             const struct QscChannel *channel,
                             double *out);

/**
 * Monte Carlo estimate of the expected covering divergence with block size `theta`.
 *
 * # Safety
 * Handles are live; `mean`, `stderr` and `bound` are writable.
 */
enum QscStatus qsc_qcover_mc(const struct QscState *rho_a,
                             const struct QscChannel *channel,
                             size_t theta,
                             size_t trials,
                             uint64_t seed,
                             double *mean,
                             double *stderr,
                             double *bound);

/**
 * # Safety
 * `ens` is live; `out` is writable.
 */
enum QscStatus qsc_cq_q2(const struct QscEnsemble *ens, double *out);

/**
 * Exact expected divergence over i.i.d. codebooks of size `theta`.
 *
 * # Safety
 * `ens` is live; `out` is writable.
 */
enum QscStatus qsc_cq_exact(const struct QscEnsemble *ens, size_t theta, double *out);

/**
 * Monte Carlo decoupling estimate for `ρ_AE` on `d_a ⊗ d_e`.
 *
 * # Safety
 * Handles are live; `mean`, `stderr` and `bound` are writable.
 */
enum QscStatus qsc_decouple_mc(const struct QscState *rho_ae,
                               size_t d_a,
                               size_t d_e,
                               const struct QscChannel *channel,
                               size_t trials,
                               uint64_t seed,
                               double *mean,
                               double *stderr,
                               double *bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSOFTCOVER_H */
