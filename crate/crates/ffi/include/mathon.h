#ifndef MATHON_H
#define MATHON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bytes per line in the flat encoding: a 2×6 basis, row-major, entries 0..3.
 */
#define MATHON_LINE_BYTES 12

/**
 * Bytes per Gram matrix: 6×6, row-major.
 */
#define MATHON_GRAM_BYTES 36

typedef enum MathonFormKind {
  /**
   * Gram matrix of an alternating form.
   */
  MATHON_FORM_KIND_ALTERNATING = 0,
  /**
   * Symmetric matrix of a quadratic form.
   */
  MATHON_FORM_KIND_QUADRATIC = 1,
} MathonFormKind;

typedef enum MathonQuadric {
  MATHON_QUADRIC_HYPERBOLIC = 0,
  MATHON_QUADRIC_ELLIPTIC = 1,
  MATHON_QUADRIC_DEGENERATE = 2,
} MathonQuadric;

typedef enum MathonStatus {
  MATHON_STATUS_OK = 0,
  MATHON_STATUS_NULL_POINTER = 1,
  MATHON_STATUS_INVALID_ARGUMENT = 2,
  MATHON_STATUS_OUT_OF_RANGE = 3,
  MATHON_STATUS_VERIFICATION_FAILED = 4,
  MATHON_STATUS_NOT_FOUND = 5,
  MATHON_STATUS_INTERNAL = 6,
} MathonStatus;

/**
 * A list of lines of PG(5,3).
 */
typedef struct MathonLineSet MathonLineSet;

/**
 * A completed construction for one seed.
 */
typedef struct MathonPipeline MathonPipeline;

typedef struct MathonPerpReport {
  size_t line_count;
  /**
   * 0 when the bound is not integral.
   */
  uint64_t bound;
  bool all_nonsingular;
  bool pairwise_opposite;
  bool pairwise_disjoint;
  bool is_partial_perp_system;
  bool is_maximal;
  size_t failing_pairs;
} MathonPerpReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *mathon_last_error(void);

/**
 * Run the construction for `seed_index` in `0..24`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MathonStatus mathon_pipeline_run(uint32_t seed_index, struct MathonPipeline **out);

/**
 * # Safety
 * `p` must be null or a handle from [`mathon_pipeline_run`] not yet freed.
 */
void mathon_pipeline_free(struct MathonPipeline *p);

/**
 * Copy one stage (`"F4"`, `"L"`, `"F5"`, `"F6"`, `"F15"` or `"M21"`) into a
 * new line set handle.
 *
 * # Safety
 * `p` must be a live pipeline handle, `name` a NUL-terminated string and
 * `out` writable.
 */
enum MathonStatus mathon_pipeline_stage(const struct MathonPipeline *p,
                                        const char *name,
                                        struct MathonLineSet **out);

/**
 * Write the Gram matrix of the construction's alternating form into
 * `out[0..36]`.
 *
 * # Safety
 * `p` must be a live pipeline handle and `out` point to 36 writable bytes.
 */
enum MathonStatus mathon_pipeline_gram(const struct MathonPipeline *p, uint8_t *out);

/**
 * # Safety
 * `s` must be a live line set handle.
 */
size_t mathon_lineset_len(const struct MathonLineSet *s);

/**
 * Write the canonical basis of line `index` into `out[0..12]`.
 *
 * # Safety
 * `s` must be a live line set handle and `out` point to 12 writable bytes.
 */
enum MathonStatus mathon_lineset_line(const struct MathonLineSet *s, size_t index, uint8_t *out);

/**
 * Build a line set from `count` consecutive 2×6 bases (12 bytes each).
 * Bases are canonicalized; rank-deficient bases and duplicates are rejected.
 *
 * # Safety
 * `data` must point to `12 * count` readable bytes and `out` be writable.
 */
enum MathonStatus mathon_lineset_from_bytes(const uint8_t *data,
                                            size_t count,
                                            struct MathonLineSet **out);

/**
 * # Safety
 * `s` must be null or a line set handle not yet freed.
 */
void mathon_lineset_free(struct MathonLineSet *s);

/**
 * Check every perp-system condition for the lines under the polarity of a
 * 6×6 matrix. The report is filled even when the lines fail the check.
 *
 * # Safety
 * `s` must be a live line set, `matrix` point to 36 readable bytes and `out`
 * be writable.
 */
enum MathonStatus mathon_verify_perp_system(const struct MathonLineSet *s,
                                            const uint8_t *matrix,
                                            enum MathonFormKind kind,
                                            struct MathonPerpReport *out);

/**
 * Classify the quadric of a symmetric 6×6 matrix by counting singular points.
 *
 * # Safety
 * `sym` must point to 36 readable bytes; `kind` and `points` be writable.
 */
enum MathonStatus mathon_classify_quadric(const uint8_t *sym,
                                          enum MathonQuadric *kind,
                                          uint64_t *points);

/**
 * Run every pipeline check and return the JSON report as a new string, to be
 * released with [`mathon_string_free`]. Returns `VerificationFailed` (with
 * the report still written) when any check fails.
 *
 * # Safety
 * `out` must be writable.
 */
enum MathonStatus mathon_report_json(uint32_t seed_index, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void mathon_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATHON_H */
