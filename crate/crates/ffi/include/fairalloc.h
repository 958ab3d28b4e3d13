#ifndef FAIRALLOC_H
#define FAIRALLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum FaStatus {
  FA_STATUS_OK = 0,
  /**
   * The probe at the requested target aborted.
   */
  FA_STATUS_ABORTED = 1,
  FA_STATUS_NULL_ARGUMENT = 2,
  FA_STATUS_INVALID_UTF8 = 3,
  FA_STATUS_PARSE_ERROR = 4,
  FA_STATUS_INVALID_INPUT = 5,
  FA_STATUS_INVALID_PARAMS = 6,
  FA_STATUS_SIZE_GUARD = 7,
  /**
   * Internal consistency check failed.
   */
  FA_STATUS_DEFECT = 8,
  FA_STATUS_PANIC = 9,
} FaStatus;

/**
 * Opaque instance handle.
 */
typedef struct FaInstance FaInstance;

/**
 * Opaque result of a solve.
 */
typedef struct FaReport FaReport;

/**
 * Solver options. Obtain defaults from [`fa_options_default`].
 */
typedef struct FaOptions {
  /**
   * Approximation factor `beta_num / beta_den`.
   */
  uint64_t beta_num;
  uint64_t beta_den;
  /**
   * Concurrent binary-search probes; 0 is treated as 1.
   */
  uint32_t jobs;
  /**
   * Run the invariant checks at every iterative-step boundary.
   */
  bool check_invariants;
} FaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default options: beta = 13, one job, no invariant checks.
 */
struct FaOptions fa_options_default(void);

/**
 * Message describing the last error on this thread. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *fa_last_error_message(void);

/**
 * Parses an instance in the text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FaStatus fa_instance_parse(const char *text, struct FaInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from [`fa_instance_parse`] not yet freed.
 */
void fa_instance_free(struct FaInstance *inst);

/**
 * # Safety
 * `inst` must be a live instance handle.
 */
size_t fa_instance_num_players(const struct FaInstance *inst);

/**
 * # Safety
 * `inst` must be a live instance handle.
 */
size_t fa_instance_num_resources(const struct FaInstance *inst);

/**
 * Binary search over the target value. `opts` may be null for defaults.
 *
 * # Safety
 * `inst` must be a live instance handle, `opts` null or valid, and `out` a
 * valid pointer.
 */
enum FaStatus fa_solve(const struct FaInstance *inst,
                       const struct FaOptions *opts,
                       struct FaReport **out);

/**
 * Single probe at target `tau`. Returns [`FaStatus::Aborted`] when the
 * probe aborts; `*out` is then null.
 *
 * # Safety
 * As for [`fa_solve`].
 */
enum FaStatus fa_solve_for_tau(const struct FaInstance *inst,
                               uint64_t tau,
                               const struct FaOptions *opts,
                               struct FaReport **out);

/**
 * # Safety
 * `report` must be null or a handle returned by a solve call, not yet freed.
 */
void fa_report_free(struct FaReport *report);

/**
 * Largest target value with a successful probe.
 *
 * # Safety
 * `report` must be a live report handle.
 */
uint64_t fa_report_tau_star(const struct FaReport *report);

/**
 * Certified bundle value `tau_star / beta` as a reduced fraction.
 *
 * # Safety
 * `report` must be a live report handle; `num` and `den` valid pointers.
 */
enum FaStatus fa_report_guaranteed(const struct FaReport *report, uint64_t *num, uint64_t *den);

/**
 * Smallest bundle value in the allocation.
 *
 * # Safety
 * `report` must be a live report handle.
 */
uint64_t fa_report_min_value(const struct FaReport *report);

/**
 * # Safety
 * `report` must be a live report handle.
 */
size_t fa_report_num_probes(const struct FaReport *report);

/**
 * # Safety
 * `report` must be a live report handle.
 */
size_t fa_report_invariant_failures(const struct FaReport *report);

/**
 * Number of resources assigned to `player` (0 for an unknown player).
 *
 * # Safety
 * `report` must be a live report handle.
 */
size_t fa_report_bundle_len(const struct FaReport *report, size_t player);

/**
 * Copies up to `cap` resource ids of `player`'s bundle into `buf` and
 * returns the full bundle length.
 *
 * # Safety
 * `report` must be a live report handle and `buf` valid for `cap` writes.
 */
size_t fa_report_bundle(const struct FaReport *report, size_t player, size_t *buf, size_t cap);

/**
 * Allocation in the text format. Free the result with [`fa_string_free`].
 *
 * # Safety
 * `report` must be a live report handle.
 */
char *fa_report_allocation_text(const struct FaReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void fa_string_free(char *s);

/**
 * Checks an allocation (text format) against `num / den`. `*ok` is set to
 * whether every player reaches the threshold; structural problems with the
 * allocation also yield `false`.
 *
 * # Safety
 * `inst` must be a live instance handle, `alloc_text` a NUL-terminated
 * string and `ok` a valid pointer.
 */
enum FaStatus fa_verify(const struct FaInstance *inst,
                        const char *alloc_text,
                        uint64_t num,
                        uint64_t den,
                        bool *ok);

/**
 * Optimal value by exhaustive search; [`FaStatus::SizeGuard`] beyond 6
 * players or 14 resources.
 *
 * # Safety
 * `inst` must be a live instance handle and `out` a valid pointer.
 */
enum FaStatus fa_brute_force_opt(const struct FaInstance *inst, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRALLOC_H */
