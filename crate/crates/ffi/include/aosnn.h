#ifndef AOSNN_H
#define AOSNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AosnnStatus {
  AOSNN_STATUS_OK = 0,
  AOSNN_STATUS_NULL_POINTER = 1,
  AOSNN_STATUS_INVALID_ARGUMENT = 2,
  AOSNN_STATUS_DOMAIN = 3,
  AOSNN_STATUS_CONFIG = 4,
  AOSNN_STATUS_COMPUTATION = 5,
  AOSNN_STATUS_IO = 6,
  AOSNN_STATUS_PANIC = 7,
} AosnnStatus;

/**
 * Parsed and validated run configuration.
 */
typedef struct AosnnConfig AosnnConfig;

/**
 * Truncated DtN operator on `n_quad` equispaced points of a circle.
 */
typedef struct AosnnDtn AosnnDtn;

/**
 * Result of a training run.
 */
typedef struct AosnnSolution AosnnSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, or 0 if there is none.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t aosnn_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *aosnn_version(void);

/**
 * Bessel function `J_n(x)`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_bessel_j(uint32_t n, double x, double *out);

/**
 * Bessel function `Y_n(x)`, `x > 0`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_bessel_y(uint32_t n, double x, double *out);

/**
 * Hankel function `H_n^(1)(x)`.
 *
 * # Safety
 * `out_re` and `out_im` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_hankel1(int32_t n, double x, double *out_re, double *out_im);

/**
 * Derivative of `H_n^(1)` at `x`.
 *
 * # Safety
 * `out_re` and `out_im` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_hankel1_deriv(int32_t n, double x, double *out_re, double *out_im);

/**
 * DtN symbol `z H_n^(1)'(z) / H_n^(1)(z)`.
 *
 * # Safety
 * `out_re` and `out_im` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_dtn_symbol(int32_t n, double z, double *out_re, double *out_im);

/**
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_dtn_new(double kappa,
                               double radius,
                               size_t order,
                               size_t n_quad,
                               struct AosnnDtn **out);

/**
 * Applies the operator to a trace given as separate real and imaginary
 * arrays of length `n`.
 *
 * # Safety
 * `op` must come from `aosnn_dtn_new`; the arrays must hold `n` doubles.
 */
enum AosnnStatus aosnn_dtn_apply(const struct AosnnDtn *op,
                                 const double *trace_re,
                                 const double *trace_im,
                                 size_t n,
                                 double *out_re,
                                 double *out_im);

/**
 * # Safety
 * `op` must be NULL or come from `aosnn_dtn_new`, and not be used afterwards.
 */
void aosnn_dtn_free(struct AosnnDtn *op);

/**
 * Parses a TOML run configuration.
 *
 * # Safety
 * `text` must be NULL or a NUL-terminated string; `out` must be NULL or
 * valid for writes.
 */
enum AosnnStatus aosnn_config_parse(const char *text, struct AosnnConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or come from `aosnn_config_parse`, and not be used afterwards.
 */
void aosnn_config_free(struct AosnnConfig *cfg);

/**
 * Trains the configured method. Nothing is written to disk.
 *
 * # Safety
 * `cfg` must come from `aosnn_config_parse`; `out` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_run(const struct AosnnConfig *cfg, struct AosnnSolution **out);

/**
 * Loads a checkpoint file written by a run.
 *
 * # Safety
 * `path` must be NULL or a NUL-terminated string; `out` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_solution_load(const char *path, struct AosnnSolution **out);

/**
 * Writes the solution as a checkpoint file.
 *
 * # Safety
 * `sol` must come from this library; `path` must be a NUL-terminated string.
 */
enum AosnnStatus aosnn_solution_save(const struct AosnnSolution *sol, const char *path);

/**
 * Number of recorded stages (0 for loaded checkpoints).
 *
 * # Safety
 * `sol` must come from this library; `out` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_solution_stage_count(const struct AosnnSolution *sol, size_t *out);

/**
 * Epochs and relative l2 error of stage `stage`.
 *
 * # Safety
 * `sol` must come from this library; the outputs must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_solution_stage(const struct AosnnSolution *sol,
                                      size_t stage,
                                      size_t *epochs,
                                      double *relative_l2);

/**
 * Evaluates the solution at `n` points given as interleaved `x, y` pairs.
 *
 * # Safety
 * `sol` must come from this library; `xy` must hold `2n` doubles and the
 * outputs `n` doubles each.
 */
enum AosnnStatus aosnn_solution_evaluate(const struct AosnnSolution *sol,
                                         const double *xy,
                                         size_t n,
                                         double *out_re,
                                         double *out_im);

/**
 * # Safety
 * `sol` must be NULL or come from this library, and not be used afterwards.
 */
void aosnn_solution_free(struct AosnnSolution *sol);

/**
 * Runs the built-in self-checks; `passed` receives 1 or 0.
 *
 * # Safety
 * `passed` must be NULL or valid for writes.
 */
enum AosnnStatus aosnn_verify(int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AOSNN_H */
