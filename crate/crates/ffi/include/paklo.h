#ifndef PAKLO_H
#define PAKLO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PAKLO_MODE_COVER 0

#define PAKLO_MODE_PACK 1

typedef enum PakloStatus {
  PAKLO_STATUS_OK = 0,
  PAKLO_STATUS_NULL_POINTER = 1,
  PAKLO_STATUS_INVALID_ARGUMENT = 2,
  PAKLO_STATUS_PARSE = 3,
  PAKLO_STATUS_SOLVER = 4,
  PAKLO_STATUS_BUFFER_TOO_SMALL = 5,
  PAKLO_STATUS_PANIC = 6,
} PakloStatus;

/**
 * Opaque problem instance.
 */
typedef struct PakloInstance PakloInstance;

/**
 * Opaque solve result.
 */
typedef struct PakloReport PakloReport;

/**
 * Message describing the last failure on this thread, or NULL. The pointer
 * stays valid until the next paklo call on this thread.
 */
const char *paklo_last_error(void);

/**
 * Parses a Matrix Market coordinate document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer to
 * writable storage for one handle.
 */
enum PakloStatus paklo_instance_from_mtx(const char *text, int mode, struct PakloInstance **out);

/**
 * Builds an instance from `nnz` zero-based `(row, col, value)` triplets.
 *
 * # Safety
 * `rows`, `cols` and `vals` must each point to `nnz` readable elements;
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum PakloStatus paklo_instance_from_triplets(size_t m,
                                              size_t n,
                                              size_t nnz,
                                              const size_t *rows,
                                              const size_t *cols,
                                              const double *vals,
                                              int mode,
                                              struct PakloInstance **out);

/**
 * # Safety
 * `inst` must be a live handle; `m` and `n` must be valid for writes.
 */
enum PakloStatus paklo_instance_dims(const struct PakloInstance *inst, size_t *m, size_t *n);

/**
 * # Safety
 * `inst` must be NULL or a handle from a paklo constructor not yet freed.
 */
void paklo_instance_free(struct PakloInstance *inst);

/**
 * Runs the full solve pipeline with `0 < eps < 0.5`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be valid for one write.
 */
enum PakloStatus paklo_solve(const struct PakloInstance *inst,
                             double eps,
                             uint64_t seed,
                             struct PakloReport **out);

/**
 * `1ᵀx` of the reported solution.
 *
 * # Safety
 * `report` must be a live handle; `out` must be valid for one write.
 */
enum PakloStatus paklo_report_objective(const struct PakloReport *report, double *out);

/**
 * `min_j (Ax)_j − 1` for covering, `1 − max_j (Ay)_j` for packing.
 *
 * # Safety
 * `report` must be a live handle; `out` must be valid for one write.
 */
enum PakloStatus paklo_report_residual(const struct PakloReport *report, double *out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be valid for one write.
 */
enum PakloStatus paklo_report_iterations(const struct PakloReport *report, uint64_t *out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be valid for one write.
 */
enum PakloStatus paklo_report_solution_len(const struct PakloReport *report, size_t *out);

/**
 * Copies the solution into `buf`, which must hold at least
 * `paklo_report_solution_len` values.
 *
 * # Safety
 * `report` must be a live handle; `buf` must be valid for `len` writes.
 */
enum PakloStatus paklo_report_copy_solution(const struct PakloReport *report,
                                            double *buf,
                                            size_t len);

/**
 * # Safety
 * `report` must be NULL or a handle from [`paklo_solve`] not yet freed.
 */
void paklo_report_free(struct PakloReport *report);

#endif  /* PAKLO_H */
