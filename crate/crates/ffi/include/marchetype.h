/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MARCHETYPE_H
#define MARCHETYPE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_NULL_POINTER = 1,
  MT_STATUS_INVALID_INPUT = 2,
  MT_STATUS_DIMENSION_MISMATCH = 3,
  MT_STATUS_PARSE = 4,
  MT_STATUS_GUARD = 5,
  MT_STATUS_NUMERICAL = 6,
  MT_STATUS_INFEASIBLE = 7,
  MT_STATUS_PANIC = 8,
} MtStatus;

typedef enum MtCompileMode {
  MT_COMPILE_MODE_INDIVIDUAL = 0,
  MT_COMPILE_MODE_SEGMENT = 1,
  MT_COMPILE_MODE_INTERDEPENDENT = 2,
} MtCompileMode;

// Outcome of a PDHG solve.
typedef enum MtSolveStatus {
  MT_SOLVE_STATUS_OPTIMAL = 0,
  MT_SOLVE_STATUS_ITERATION_LIMIT = 1,
  MT_SOLVE_STATUS_NUMERICAL_FAILURE = 2,
} MtSolveStatus;

// Opaque LP handle.
typedef struct MtLp MtLp;

// Opaque solve report handle.
typedef struct MtReport MtReport;

// Solver options. Start from `mt_solver_config_default`.
typedef struct MtSolverConfig {
  double tolerance;
  uint64_t max_iterations;
  bool restart;
  bool rescale;
  // Adaptive steps and primal weight; `false` gives fixed steps from the average.
  bool adaptive;
} MtSolverConfig;

typedef struct MtConstraintCounts {
  uint64_t volume1;
  uint64_t volume2;
  uint64_t similarity1;
  uint64_t similarity2;
  uint64_t targeting;
  uint64_t total;
} MtConstraintCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *mt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mt_version(void);

// Reads an LP from its JSON triplet file contents.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum MtStatus mt_lp_from_json(const char *json, struct MtLp **out);

// Builds `min objective·x s.t. Ax ≤ rhs, 0 ≤ x ≤ 1` from `nnz` triplets.
//
// # Safety
// Array arguments must hold the stated number of elements; `out` must be writable.
enum MtStatus mt_lp_from_triplets(size_t n_rows,
                                  size_t n_cols,
                                  const size_t *rows,
                                  const size_t *cols,
                                  const double *values,
                                  size_t nnz,
                                  const double *objective,
                                  const double *rhs,
                                  struct MtLp **out);

// Compiles a targeting instance and constraint menu (both JSON) into an LP.
// `pair_profits_json` is read only in interdependent mode.
//
// # Safety
// String arguments must be NUL-terminated or null where allowed; `out` must be writable.
enum MtStatus mt_compile(const char *instance_json,
                         const char *menu_json,
                         enum MtCompileMode mode,
                         const char *pair_profits_json,
                         struct MtLp **out);

// # Safety
// `lp` must be null or a live handle.
size_t mt_lp_n_rows(const struct MtLp *lp);

// # Safety
// `lp` must be null or a live handle.
size_t mt_lp_n_cols(const struct MtLp *lp);

// # Safety
// `lp` must be null or a handle not yet freed.
void mt_lp_free(struct MtLp *lp);

struct MtSolverConfig mt_solver_config_default(void);

// Solves with restarted PDHG. A report is produced whenever the call returns
// `MT_STATUS_OK`, even if the solve stopped at the iteration limit.
//
// # Safety
// `lp` must be a live handle, `config` null (defaults) or valid, `out` writable.
enum MtStatus mt_solve(const struct MtLp *lp,
                       const struct MtSolverConfig *config,
                       struct MtReport **out);

// # Safety
// `report` must be a live handle.
enum MtSolveStatus mt_report_status(const struct MtReport *report);

// Primal objective; NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double mt_report_objective(const struct MtReport *report);

// # Safety
// `report` must be null or a live handle.
uint64_t mt_report_iterations(const struct MtReport *report);

// # Safety
// `report` must be null or a live handle.
uint64_t mt_report_restarts(const struct MtReport *report);

// Relative primal residual, dual residual and duality gap. Any output may be null.
//
// # Safety
// `report` must be a live handle; non-null outputs must be writable.
enum MtStatus mt_report_residuals(const struct MtReport *report,
                                  double *primal,
                                  double *dual,
                                  double *gap);

// # Safety
// `report` must be null or a live handle.
size_t mt_report_primal_len(const struct MtReport *report);

// # Safety
// `report` must be null or a live handle.
size_t mt_report_dual_len(const struct MtReport *report);

// Copies the primal solution into `out`, which must hold exactly `len` values.
//
// # Safety
// `report` must be a live handle and `out` writable for `len` doubles.
enum MtStatus mt_report_copy_primal(const struct MtReport *report, double *out, size_t len);

// Copies the dual solution into `out`, which must hold exactly `len` values.
//
// # Safety
// `report` must be a live handle and `out` writable for `len` doubles.
enum MtStatus mt_report_copy_dual(const struct MtReport *report, double *out, size_t len);

// # Safety
// `report` must be null or a handle not yet freed.
void mt_report_free(struct MtReport *report);

// Solves exactly with the dense simplex. `x` must hold `len == n_cols` values or be
// null with `len == 0`. Returns `MT_STATUS_GUARD` when the LP is too large.
//
// # Safety
// `lp` must be a live handle; `x` writable for `len` doubles; `objective` writable or null.
enum MtStatus mt_oracle_solve(const struct MtLp *lp, double *x, size_t len, double *objective);

// Closed-form row counts for `k` segments, `j` actions and `i` customers.
// `default_menu` selects one-sided Volume II and unordered pairs; otherwise every
// family is two-sided over ordered pairs.
//
// # Safety
// `out` must be writable.
enum MtStatus mt_constraint_count(uint64_t k,
                                  uint64_t j,
                                  uint64_t i,
                                  bool default_menu,
                                  struct MtConstraintCounts *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARCHETYPE_H */
