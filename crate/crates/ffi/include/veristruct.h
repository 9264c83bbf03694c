#ifndef VERISTRUCT_H
#define VERISTRUCT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_INVALID_UTF8 = 2,
  VS_STATUS_PARSE_FAILED = 3,
  VS_STATUS_INVALID_ARGUMENT = 4,
  VS_STATUS_PANIC = 5,
} VsStatus;

typedef enum VsVerdict {
  VS_VERDICT_SUPPORTED = 0,
  VS_VERDICT_REFUTED = 1,
} VsVerdict;

/**
 * Opaque parsed chain.
 */
typedef struct VsChain VsChain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *vs_last_error(void);

/**
 * Parses a chain. `lenient` accepts list markers and bold keywords.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum VsStatus vs_chain_parse(const char *text, bool lenient, struct VsChain **out);

/**
 * # Safety
 * `chain` must come from [`vs_chain_parse`] and not be freed yet, or be null.
 */
void vs_chain_free(struct VsChain *chain);

/**
 * Number of subclaim blocks; 0 for a null handle.
 *
 * # Safety
 * `chain` must be a live handle or null.
 */
size_t vs_chain_block_count(const struct VsChain *chain);

/**
 * Status of block `index` (0-based).
 *
 * # Safety
 * `chain` must be a live handle and `out` a valid pointer.
 */
enum VsStatus vs_chain_block_status(const struct VsChain *chain, size_t index, enum VsVerdict *out);

/**
 * Chain verdict: Refuted if any block is Refuted.
 *
 * # Safety
 * `chain` must be a live handle and `out` a valid pointer.
 */
enum VsStatus vs_chain_judge(const struct VsChain *chain, enum VsVerdict *out);

/**
 * Canonical text of the chain, or null for a null handle.
 *
 * # Safety
 * `chain` must be a live handle or null.
 */
char *vs_chain_serialize(const struct VsChain *chain);

/**
 * Audits `text` against `evidence_count` evidence pieces under the default
 * policy. Writes the pass flag and, if `out_json` is non-null, the report
 * as a JSON string.
 *
 * # Safety
 * `text` must be NUL-terminated, `out_passed` valid, `out_json` valid or null.
 */
enum VsStatus vs_audit(const char *text, size_t evidence_count, bool *out_passed, char **out_json);

/**
 * # Safety
 * `s` must come from this library and not be freed yet, or be null.
 */
void vs_string_free(char *s);

/**
 * Macro-averaged F1 over the two verdicts. Labels are 0 (Supported) or 1
 * (Refuted).
 *
 * # Safety
 * `gold` and `pred` must point to `n` readable `int32_t`s; `out` valid.
 */
enum VsStatus vs_macro_f1(const int32_t *gold, const int32_t *pred, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VERISTRUCT_H */
