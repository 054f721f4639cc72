/* C interface of liftlab: contractive interpolants for relaxed commutant lifting data. */

#ifndef LIFTLAB_H
#define LIFTLAB_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible entry point.
 */
typedef enum LiftlabStatus {
  LIFTLAB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LIFTLAB_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  LIFTLAB_STATUS_INVALID_UTF8 = 2,
  /**
   * JSON parsing or schema validation failed.
   */
  LIFTLAB_STATUS_PARSE = 3,
  /**
   * A numerical precondition failed (not a contraction, omega not
   * isometric, ...).
   */
  LIFTLAB_STATUS_NUMERIC = 4,
  /**
   * The operation ran but the checked property does not hold.
   */
  LIFTLAB_STATUS_CHECK_FAILED = 5,
} LiftlabStatus;

/**
 * Kinds accepted by [`liftlab_dataset_generate`].
 */
typedef enum LiftlabCorpusKind {
  LIFTLAB_CORPUS_KIND_CLASSICAL = 0,
  LIFTLAB_CORPUS_KIND_RANDOM = 1,
  LIFTLAB_CORPUS_KIND_ZERO = 2,
} LiftlabCorpusKind;

/**
 * Opaque lifting data set handle.
 */
typedef struct LiftlabDataset LiftlabDataset;

/**
 * Opaque interpolant handle.
 */
typedef struct LiftlabInterpolant LiftlabInterpolant;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library, as a static string.
 */
const char *liftlab_version(void);

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *liftlab_last_error_message(void);

/**
 * Releases a string returned by this library.
 */
void liftlab_string_free(char *s);

/**
 * Parses a data set from its JSON form.
 */
enum LiftlabStatus liftlab_dataset_from_json(const char *json, struct LiftlabDataset **out);

/**
 * Serializes a data set to its JSON form.
 */
enum LiftlabStatus liftlab_dataset_to_json(const struct LiftlabDataset *ds, char **out);

/**
 * Generates a seeded data set. Classical generation uses `h` as the common
 * dimension and ignores `h0`/`hp`.
 */
enum LiftlabStatus liftlab_dataset_generate(enum LiftlabCorpusKind kind,
                                            size_t h0,
                                            size_t h,
                                            size_t hp,
                                            uint64_t seed,
                                            struct LiftlabDataset **out);

/**
 * Checks the defining constraints. `out_pass` receives the verdict; when
 * `out_report_json` is non-null it receives the full report.
 */
enum LiftlabStatus liftlab_dataset_validate(const struct LiftlabDataset *ds,
                                            double check_tol,
                                            bool *out_pass,
                                            char **out_report_json);

/**
 * Central solution at truncation `n`.
 */
enum LiftlabStatus liftlab_solve_central(const struct LiftlabDataset *ds,
                                         size_t n,
                                         double rank_tol,
                                         double check_tol,
                                         struct LiftlabInterpolant **out);

/**
 * Interpolant for a seeded random contractive free block.
 */
enum LiftlabStatus liftlab_solve_seeded(const struct LiftlabDataset *ds,
                                        uint64_t seed,
                                        size_t state_dim,
                                        size_t n,
                                        double rank_tol,
                                        double check_tol,
                                        struct LiftlabInterpolant **out);

/**
 * Checks the interpolation constraints of an interpolant.
 */
enum LiftlabStatus liftlab_interpolant_verify(const struct LiftlabInterpolant *ip,
                                              double rank_tol,
                                              double check_tol,
                                              bool *out_pass,
                                              char **out_report_json);

/**
 * Serializes an interpolant to its JSON form.
 */
enum LiftlabStatus liftlab_interpolant_to_json(const struct LiftlabInterpolant *ip, char **out);

/**
 * Parses an interpolant against its data set (the stored hash must match).
 */
enum LiftlabStatus liftlab_interpolant_from_json(const struct LiftlabDataset *ds,
                                                 const char *json,
                                                 struct LiftlabInterpolant **out);

/**
 * Truncation horizon N of an interpolant.
 */
enum LiftlabStatus liftlab_interpolant_truncation(const struct LiftlabInterpolant *ip, size_t *out);

/**
 * Copies the `n`-th symbol coefficient into `data` as interleaved
 * `(re, im)` pairs in row-major order. Call with `data == NULL` to query
 * `rows`/`cols` first; `capacity` counts f64 slots (`2 * rows * cols`
 * needed).
 */
enum LiftlabStatus liftlab_interpolant_gamma(const struct LiftlabInterpolant *ip,
                                             size_t n,
                                             size_t *out_rows,
                                             size_t *out_cols,
                                             double *data,
                                             size_t capacity);

/**
 * Uniqueness/properness report for a data set, with optional defect data of
 * an interpolant, as one JSON document.
 */
enum LiftlabStatus liftlab_analyze_json(const struct LiftlabDataset *ds,
                                        const struct LiftlabInterpolant *ip,
                                        double rank_tol,
                                        double check_tol,
                                        char **out);

/**
 * Releases a data set handle.
 */
void liftlab_dataset_free(struct LiftlabDataset *ds);

/**
 * Releases an interpolant handle.
 */
void liftlab_interpolant_free(struct LiftlabInterpolant *ip);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIFTLAB_H */
