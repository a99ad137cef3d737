#ifndef QVLC_H
#define QVLC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum QvlcStatus {
  QVLC_STATUS_OK = 0,
  QVLC_STATUS_INVALID_INPUT = 1,
  QVLC_STATUS_SIZE_MISMATCH = 2,
  QVLC_STATUS_BUDGET_EXCEEDED = 3,
  QVLC_STATUS_NOT_PSD = 4,
  QVLC_STATUS_NOT_HERMITIAN = 5,
  QVLC_STATUS_NUMERICAL = 6,
  QVLC_STATUS_NULL_POINTER = 7,
  QVLC_STATUS_PANIC = 8,
} QvlcStatus;

/**
 * A universal variable-length code for fixed `(n, d, δ)`.
 */
typedef struct QvlcCode QvlcCode;

/**
 * A validated density matrix.
 */
typedef struct QvlcDensity QvlcDensity;

/**
 * A finite ensemble of density matrices.
 */
typedef struct QvlcSource QvlcSource;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *qvlc_last_error(void);

/**
 * Natural logs of `dim 𝒰_λ` (for `SU(d)`) and `dim 𝒱_λ`.
 *
 * # Safety
 * `parts` points to `len` values; the out-pointers are writable.
 */
enum QvlcStatus qvlc_ln_dims(const size_t *parts,
                             size_t len,
                             size_t d,
                             double *ln_dim_u,
                             double *ln_dim_v);

/**
 * `Tr P_λ ρ^{⊗n}` for `ρ` with eigenvalues `spec[0..d]`, `n = Σ parts`.
 *
 * # Safety
 * `parts` points to `len` values, `spec` to `d` values; `prob` is writable.
 */
enum QvlcStatus qvlc_block_prob_iid(const size_t *parts,
                                    size_t len,
                                    const double *spec,
                                    size_t d,
                                    double *prob);

/**
 * Builds a density matrix from row-major real and imaginary parts.
 * `im` may be null for a real matrix.
 *
 * # Safety
 * `re` (and `im` when non-null) point to `d*d` values; `density` is writable.
 */
enum QvlcStatus qvlc_density_new(size_t d,
                                 const double *re,
                                 const double *im,
                                 struct QvlcDensity **density);

/**
 * # Safety
 * `density` is null or a handle from [`qvlc_density_new`] not yet freed.
 */
void qvlc_density_free(struct QvlcDensity *density);

/**
 * `F(ρ,σ) = Tr|√ρ√σ|`.
 *
 * # Safety
 * Both handles are live; `fidelity` is writable.
 */
enum QvlcStatus qvlc_fidelity(const struct QvlcDensity *rho,
                              const struct QvlcDensity *sigma,
                              double *fidelity);

/**
 * A source of `count` atoms; the densities are copied.
 *
 * # Safety
 * `weights` and `atoms` point to `count` values, each atom a live handle;
 * `source` is writable.
 */
enum QvlcStatus qvlc_source_new(const double *weights,
                                const struct QvlcDensity *const *atoms,
                                size_t count,
                                struct QvlcSource **source);

/**
 * Basis states `|i⟩` with weights `weights[0..d]`.
 *
 * # Safety
 * `weights` points to `d` values; `source` is writable.
 */
enum QvlcStatus qvlc_source_classical(const double *weights, size_t d, struct QvlcSource **source);

/**
 * # Safety
 * `source` is null or a handle not yet freed.
 */
void qvlc_source_free(struct QvlcSource *source);

/**
 * Optimal overflow exponent over all spectra at `rate`.
 *
 * # Safety
 * `spec` points to `d` values; `exponent` is writable.
 */
enum QvlcStatus qvlc_overflow_exponent(double rate, const double *spec, size_t d, double *exponent);

/**
 * Finite-n upper bound on the average error of the `(n, d, δ)` code.
 *
 * # Safety
 * `bound` is writable.
 */
enum QvlcStatus qvlc_error_bound(size_t n, size_t d, double delta, double c3, double *bound);

/**
 * Finite-n lower bound on `−(1/n) ln P(overflow)`.
 *
 * # Safety
 * `spec` points to `d` values; `bound` is writable.
 */
enum QvlcStatus qvlc_overflow_bound(size_t n,
                                    double delta,
                                    double rate,
                                    const double *spec,
                                    size_t d,
                                    double *bound);

/**
 * # Safety
 * `code` is writable.
 */
enum QvlcStatus qvlc_code_new(size_t n, size_t d, double delta, struct QvlcCode **code);

/**
 * # Safety
 * `code` is null or a handle not yet freed.
 */
void qvlc_code_free(struct QvlcCode *code);

/**
 * Number of outcomes `|Ω|`.
 *
 * # Safety
 * `code` is live; `count` is writable.
 */
enum QvlcStatus qvlc_code_outcome_count(const struct QvlcCode *code, size_t *count);

/**
 * `ln P(ℓ/n ≥ rate)` for an i.i.d. source with spectrum `spec`.
 *
 * # Safety
 * `code` is live, `spec` points to `d` values; `ln_prob` is writable.
 */
enum QvlcStatus qvlc_code_ln_overflow(const struct QvlcCode *code,
                                      const double *spec,
                                      size_t d,
                                      double rate,
                                      double *ln_prob);

/**
 * Average error of the code on `source`. Exact when the number of atom
 * compositions is small, else Monte Carlo with `samples` draws from
 * `seed`; `std_error` (nullable) receives the standard error, or 0 when
 * exact.
 *
 * # Safety
 * Handles are live; `error` is writable; `std_error` is null or writable.
 */
enum QvlcStatus qvlc_code_average_error(const struct QvlcCode *code,
                                        const struct QvlcSource *source,
                                        size_t samples,
                                        uint64_t seed,
                                        double *error,
                                        double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QVLC_H */
