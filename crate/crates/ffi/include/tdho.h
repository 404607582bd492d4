#ifndef TDHO_H
#define TDHO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TdhoStatus {
  TDHO_STATUS_OK = 0,
  TDHO_STATUS_NULL_POINTER = 1,
  TDHO_STATUS_INVALID_UTF8 = 2,
  TDHO_STATUS_CONFIG = 3,
  TDHO_STATUS_INVALID_PARAMETER = 4,
  TDHO_STATUS_DOMAIN = 5,
  TDHO_STATUS_GRID_TOO_SMALL = 6,
  TDHO_STATUS_NUMERICAL = 7,
  TDHO_STATUS_IO = 8,
  TDHO_STATUS_PANIC = 9,
} TdhoStatus;

/**
 * A loaded, validated scenario.
 */
typedef struct TdhoScenario TdhoScenario;

/**
 * One eigenstate of a scenario.
 */
typedef struct TdhoState TdhoState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage; do not free.
 */
const char *tdho_version(void);

/**
 * Copy of the last error message on this thread, or null if none.
 * Free with `tdho_string_free`.
 */
char *tdho_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void tdho_string_free(char *s);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TdhoStatus tdho_scenario_from_json(const char *json, struct TdhoScenario **out);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TdhoStatus tdho_scenario_load(const char *path, struct TdhoScenario **out);

/**
 * # Safety
 * `sc` must be null or a handle from this library, freed once.
 */
void tdho_scenario_free(struct TdhoScenario *sc);

/**
 * Runs the check suite (`fast` non-zero selects the reduced suite). The JSON
 * report goes to `report_json` (free with `tdho_string_free`) and
 * `all_pass` is set to 1 or 0.
 *
 * # Safety
 * `sc` must be a live handle; both out pointers must be writable.
 */
enum TdhoStatus tdho_verify(const struct TdhoScenario *sc,
                            int fast,
                            char **report_json,
                            int *all_pass);

/**
 * Builds eigenstate `n` of the scenario.
 *
 * # Safety
 * `sc` must be a live handle; `out` must be writable.
 */
enum TdhoStatus tdho_state_new(const struct TdhoScenario *sc, size_t n, struct TdhoState **out);

/**
 * # Safety
 * `st` must be null or a handle from this library, freed once.
 */
void tdho_state_free(struct TdhoState *st);

/**
 * Evaluates ψ(x_i, t) for `len` points.
 *
 * # Safety
 * `xs`, `re` and `im` must each point to `len` doubles.
 */
enum TdhoStatus tdho_state_eval(const struct TdhoState *st,
                                double t,
                                const double *xs,
                                size_t len,
                                double *re,
                                double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDHO_H */
