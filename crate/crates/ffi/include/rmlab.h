#ifndef RMLAB_H
#define RMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RmlabStatus {
  RMLAB_STATUS_OK = 0,
  RMLAB_STATUS_INVALID_PARAMETER = 1,
  RMLAB_STATUS_BUDGET_EXCEEDED = 2,
  RMLAB_STATUS_DEGENERATE = 3,
  RMLAB_STATUS_MODEL_ERROR = 4,
  RMLAB_STATUS_VALIDATION_FAILED = 5,
  RMLAB_STATUS_INTERNAL = 6,
  RMLAB_STATUS_IO = 7,
  RMLAB_STATUS_PARSE = 8,
  RMLAB_STATUS_NULL_POINTER = 9,
  RMLAB_STATUS_PANIC = 10,
} RmlabStatus;

/**
 * Selects the distribution of the weight vector `b`.
 */
typedef enum RmlabModelKind {
  /**
   * Independent Bernoulli(p_num/p_den).
   */
  RMLAB_MODEL_KIND_IID = 0,
  /**
   * Uniform on vectors with exactly `m` ones.
   */
  RMLAB_MODEL_KIND_SLICE = 1,
  /**
   * Bernoulli(p) conditioned on the sum lying within `gamma·n` of `p·n`.
   */
  RMLAB_MODEL_KIND_SLICE_WINDOW = 2,
} RmlabModelKind;

typedef enum RmlabFormat {
  RMLAB_FORMAT_CSV = 0,
  RMLAB_FORMAT_TEXT = 1,
} RmlabFormat;

/**
 * The atoms of `Σ bᵢxᵢ`.
 */
typedef struct RmlabAtoms RmlabAtoms;

/**
 * A parsed experiment configuration.
 */
typedef struct RmlabConfig RmlabConfig;

/**
 * A 0/1 matrix.
 */
typedef struct RmlabMatrix RmlabMatrix;

/**
 * The result of running a configuration.
 */
typedef struct RmlabReport RmlabReport;

typedef struct RmlabWeightModel {
  enum RmlabModelKind kind;
  uint64_t p_num;
  uint64_t p_den;
  size_t m;
  double gamma;
} RmlabWeightModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *rmlab_last_error(void);

/**
 * Library version as a static string.
 */
const char *rmlab_version(void);

void rmlab_string_free(char *s);

/**
 * Builds a matrix from `n_rows * n_cols` row-major entries, each 0 or 1.
 */
enum RmlabStatus rmlab_matrix_new(size_t n_rows,
                                  size_t n_cols,
                                  const uint8_t *entries,
                                  struct RmlabMatrix **out);

void rmlab_matrix_free(struct RmlabMatrix *m);

enum RmlabStatus rmlab_matrix_rank(const struct RmlabMatrix *m, size_t *out);

/**
 * Exact singularity test of a square matrix.
 */
enum RmlabStatus rmlab_is_singular(const struct RmlabMatrix *m, bool *out);

/**
 * `q_n(p)` from the exhaustive singularity polynomial, as a double.
 */
enum RmlabStatus rmlab_singularity_probability(size_t n,
                                               uint64_t p_num,
                                               uint64_t p_den,
                                               double *out);

/**
 * Probability that an n×n Bernoulli(p) matrix has a zero row or column.
 */
enum RmlabStatus rmlab_zero_line_probability(size_t n, uint64_t p_num, uint64_t p_den, double *out);

/**
 * Enumerates the atoms of `Σ bᵢxᵢ`, refusing when more than `budget` weight vectors
 * would be visited.
 */
enum RmlabStatus rmlab_atoms_build(const double *x,
                                   size_t len,
                                   const struct RmlabWeightModel *model,
                                   double budget,
                                   struct RmlabAtoms **out);

void rmlab_atoms_free(struct RmlabAtoms *a);

size_t rmlab_atoms_len(const struct RmlabAtoms *a);

/**
 * `L(Σ bᵢxᵢ, r)`.
 */
enum RmlabStatus rmlab_levy_exact(const struct RmlabAtoms *a, double r, double *out);

/**
 * The threshold `T(x, L)` for the law the atoms were built from.
 */
enum RmlabStatus rmlab_threshold(const struct RmlabAtoms *a, double l, double *out);

/**
 * Parses a TOML configuration from a nul-terminated UTF-8 string.
 */
enum RmlabStatus rmlab_config_from_toml(const char *text, struct RmlabConfig **out);

void rmlab_config_free(struct RmlabConfig *c);

/**
 * Runs the configured experiment on `workers` threads (0 = one per core).
 */
enum RmlabStatus rmlab_run(const struct RmlabConfig *config,
                           size_t workers,
                           struct RmlabReport **out);

/**
 * Renders a report; release the string with [`rmlab_string_free`].
 */
enum RmlabStatus rmlab_report_render(const struct RmlabReport *report,
                                     enum RmlabFormat format,
                                     char **out);

void rmlab_report_free(struct RmlabReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMLAB_H */
