#ifndef SARDIAG_H
#define SARDIAG_H

/* Generated from the sardiag-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SAR_OK 0

#define SAR_ERR_INVALID 1

#define SAR_ERR_NUMERICAL 2

/**
 * Outcomes, covariates, and weights bound together for one model.
 */
typedef struct SarDataset SarDataset;

/**
 * Posterior draws in the column order `rho, sigma, beta0, ...`.
 */
typedef struct SarDraws SarDraws;

/**
 * Row-stochastic spatial weight matrix.
 */
typedef struct SarWeights SarWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message from the most recent failing call on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sar_last_error(void);

/**
 * Library version as a static string.
 */
const char *sar_version(void);

/**
 * Build a row-stochastic weight matrix from `2 * pairs` 1-based node
 * indices read as undirected edges over `n` nodes.
 *
 * # Safety
 * `nodes` must point to `len` readable `uint64_t` values.
 */
struct SarWeights *sar_weights_build(const uint64_t *nodes, size_t len, size_t n);

/**
 * Wrap an existing row-stochastic matrix given in row-major order.
 *
 * # Safety
 * `values` must point to `n * n` readable doubles.
 */
struct SarWeights *sar_weights_from_dense(const double *values, size_t n);

/**
 * Number of nodes, or 0 for a null handle.
 */
size_t sar_weights_n(const struct SarWeights *w);

/**
 * # Safety
 * `w` must be a handle from this library, freed at most once.
 */
void sar_weights_free(struct SarWeights *w);

/**
 * Bundle `n` outcomes with a row-major `n x k` covariate matrix (pass null
 * with `k = 0` for an intercept-only model) and a weight matrix, which is
 * copied into the dataset.
 *
 * # Safety
 * `y` must point to `n` doubles, `x` to `n * k` doubles (or be null when
 * `k = 0`), and `w` must be a live weights handle.
 */
struct SarDataset *sar_dataset_new(const double *y,
                                   size_t n,
                                   const double *x,
                                   size_t k,
                                   const struct SarWeights *w);

/**
 * Number of observations, or 0 for a null handle.
 */
size_t sar_dataset_n(const struct SarDataset *d);

/**
 * Number of covariates (intercept not counted), or 0 for a null handle.
 */
size_t sar_dataset_k(const struct SarDataset *d);

/**
 * # Safety
 * `d` must be a handle from this library, freed at most once.
 */
void sar_dataset_free(struct SarDataset *d);

/**
 * Draw one outcome vector into `out_y` (length = number of nodes).
 * `beta` holds the intercept followed by `beta_len - 1` slopes, and `x`
 * is row-major with `beta_len - 1` columns (null when `beta_len = 1`).
 *
 * # Safety
 * Pointers must cover the stated lengths; `out_y` must be writable.
 */
int sar_simulate(const struct SarWeights *w,
                 const double *x,
                 double rho,
                 double sigma,
                 const double *beta,
                 size_t beta_len,
                 uint64_t seed,
                 double *out_y);

/**
 * Sample the posterior. `threads = 0` runs one worker per chain.
 *
 * # Safety
 * `data` must be a live dataset handle.
 */
struct SarDraws *sar_fit(const struct SarDataset *data,
                         uint32_t n_chains,
                         uint32_t n_iter,
                         uint64_t seed,
                         double prior_a,
                         double prior_b,
                         double prior_eta,
                         size_t threads);

/**
 * Wrap externally produced draws: `values` is row-major
 * `rows x cols` with columns `rho, sigma, beta0, ...` (`cols >= 3`), and
 * `chain_ids` assigns each row to a chain `0..n_chains` in grouped order.
 *
 * # Safety
 * `values` must cover `rows * cols` doubles and `chain_ids` `rows` ids.
 */
struct SarDraws *sar_draws_new(const double *values,
                               size_t rows,
                               size_t cols,
                               const uint32_t *chain_ids,
                               uint32_t n_chains);

/**
 * Number of draws, or 0 for a null handle.
 */
size_t sar_draws_rows(const struct SarDraws *d);

/**
 * Number of parameter columns (`k + 3`), or 0 for a null handle.
 */
size_t sar_draws_cols(const struct SarDraws *d);

/**
 * Number of chains, or 0 for a null handle.
 */
uint32_t sar_draws_n_chains(const struct SarDraws *d);

/**
 * Copy the draw matrix row-major into `out` (`rows * cols` doubles).
 *
 * # Safety
 * `out` must be writable for `rows * cols` doubles.
 */
int sar_draws_values(const struct SarDraws *d, double *out);

/**
 * Copy per-draw chain ids into `out` (`rows` values).
 *
 * # Safety
 * `out` must be writable for `rows` values.
 */
int sar_draws_chain_ids(const struct SarDraws *d, uint32_t *out);

/**
 * Copy per-chain acceptance rates into `out` (`n_chains` doubles). Draws
 * reassembled through `sar_draws_new` have no rates; nothing is written
 * for them.
 *
 * # Safety
 * `out` must be writable for `n_chains` doubles.
 */
int sar_draws_acceptance(const struct SarDraws *d, double *out);

/**
 * # Safety
 * `d` must be a handle from this library, freed at most once.
 */
void sar_draws_free(struct SarDraws *d);

/**
 * Posterior summary, one row per parameter in draw-column order. Each row
 * of `out` holds `mean, q2.5, median, q97.5, ess, rhat`, so `out` must
 * hold `cols * 6` doubles.
 *
 * # Safety
 * `out` must be writable for `sar_draws_cols(d) * 6` doubles.
 */
int sar_summary(const struct SarDraws *d, double *out);

/**
 * WAIC of a fitted model; `out` receives `waic, se, p_waic, lppd`.
 *
 * # Safety
 * `data` and `d` must be live handles; `out` must hold 4 doubles.
 */
int sar_waic(const struct SarDataset *data, const struct SarDraws *d, double *out);

/**
 * Leave-one-out score of a fitted model; `out` receives `loo, se`.
 *
 * # Safety
 * `data` and `d` must be live handles; `out` must hold 2 doubles.
 */
int sar_loo(const struct SarDataset *data, const struct SarDraws *d, double *out);

/**
 * Imputed outcome surface; `method` is 1 for the posterior mean, 2 for the
 * median. `out` receives `n` doubles.
 *
 * # Safety
 * `data` and `d` must be live handles; `out` must hold `n` doubles.
 */
int sar_impute_yhat(const struct SarDataset *data,
                    const struct SarDraws *d,
                    uint8_t method,
                    double *out);

/**
 * Kullback-Leibler influence of each observation, comparing the posterior
 * under the observed data with the posterior where that outcome is
 * replaced by `yhat`. `output_type` 1 gives per-observation divergences,
 * 2 the share of draws on which each observation is the most divergent.
 * `out` receives `n` doubles either way.
 *
 * # Safety
 * Handles must be live; `yhat` must hold `n` doubles and `out` must be
 * writable for `n` doubles.
 */
int sar_kl(const struct SarDataset *data,
           const struct SarDraws *d,
           const double *yhat,
           uint8_t output_type,
           double *out);

/**
 * Itakura-Saito influence of each observation. `dist` picks the auxiliary
 * family fitted to the draws: 1 exponential, 2 gamma, 3 normal, 4
 * multivariate normal. Prior hyperparameters must match the fit that
 * produced the draws. See `sar_kl` for `output_type` and buffer sizes.
 *
 * # Safety
 * As for `sar_kl`.
 */
int sar_is(const struct SarDataset *data,
           const struct SarDraws *d,
           const double *yhat,
           double prior_a,
           double prior_b,
           double prior_eta,
           uint8_t dist,
           uint8_t output_type,
           double *out);

/**
 * Bregman influence of each observation for a generator order `alpha`
 * outside `{0, 1}` (`alpha = 2` is the squared-distance case). If
 * `clamped` is non-null it receives the count of density evaluations
 * clamped at the smallest positive double. See `sar_is` for the other
 * arguments.
 *
 * # Safety
 * As for `sar_kl`; `clamped` may be null.
 */
int sar_bregman(const struct SarDataset *data,
                const struct SarDraws *d,
                const double *yhat,
                double prior_a,
                double prior_b,
                double prior_eta,
                uint8_t dist,
                double alpha,
                uint8_t output_type,
                double *out,
                uint64_t *clamped);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SARDIAG_H */
