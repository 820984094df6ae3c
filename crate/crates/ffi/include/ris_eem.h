#ifndef RIS_EEM_H
#define RIS_EEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum RisStatus {
  RIS_STATUS_OK = 0,
  RIS_STATUS_NULL_POINTER = 1,
  RIS_STATUS_INVALID_CONFIG = 2,
  RIS_STATUS_DIMENSION = 3,
  RIS_STATUS_NUMERICAL = 4,
  RIS_STATUS_NON_CONVERGENCE = 5,
  RIS_STATUS_INVALID_ARGUMENT = 6,
  RIS_STATUS_PANIC = 7,
} RisStatus;

/**
 * Channel draw handle.
 */
typedef struct RisChannels RisChannels;

/**
 * System configuration handle.
 */
typedef struct RisConfig RisConfig;

/**
 * Optimization result handle.
 */
typedef struct RisReport RisReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ris_last_error_message(void);

/**
 * Default deployment.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum RisStatus ris_config_default(struct RisConfig **out);

/**
 * Configuration from a JSON document with unit-suffixed keys.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RisStatus ris_config_from_json(const char *json, struct RisConfig **out);

/**
 * Per-BS transmit budget in dBm.
 *
 * # Safety
 * `config` must come from a constructor above and not be freed.
 */
enum RisStatus ris_config_set_pt_dbm(struct RisConfig *config, double dbm);

/**
 * # Safety
 * `config` must be null or an unfreed handle.
 */
void ris_config_free(struct RisConfig *config);

/**
 * Channel draw for `seed`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum RisStatus ris_channels_generate(const struct RisConfig *config,
                                     uint64_t seed,
                                     struct RisChannels **out);

/**
 * # Safety
 * `channels` must be null or an unfreed handle.
 */
void ris_channels_free(struct RisChannels *channels);

/**
 * Alternating optimization from the random phase state drawn for `seed`.
 *
 * # Safety
 * `config` and `channels` must be live handles; `out` must be writable.
 */
enum RisStatus ris_eem_run(const struct RisConfig *config,
                           const struct RisChannels *channels,
                           uint64_t seed,
                           struct RisReport **out);

/**
 * # Safety
 * `report` must be null or an unfreed handle.
 */
void ris_report_free(struct RisReport *report);

/**
 * Final energy efficiency in bits/J.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum RisStatus ris_report_eta(const struct RisReport *report, double *out);

/**
 * Final sum rate in bits/s/Hz.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum RisStatus ris_report_sum_rate(const struct RisReport *report, double *out);

/**
 * Number of outer iterations.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum RisStatus ris_report_iterations(const struct RisReport *report, size_t *out);

/**
 * Copy up to `capacity` trace values into `buf` and store the full trace
 * length in `len`. Passing a null `buf` with zero capacity queries the length.
 *
 * # Safety
 * `buf` must hold `capacity` doubles unless `capacity` is zero; `len` must be writable.
 */
enum RisStatus ris_report_copy_trace(const struct RisReport *report,
                                     double *buf,
                                     size_t capacity,
                                     size_t *len);

/**
 * Report as a JSON string, released with [`ris_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum RisStatus ris_report_to_json(const struct RisReport *report, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void ris_string_free(char *s);

/**
 * Final `eta` of one scheme (`proposed_ris`, `das`, `no_ris`,
 * `conventional_cellfree`) on the channel draw for `seed`.
 *
 * # Safety
 * `config` must be a live handle, `scheme` NUL-terminated, `out` writable.
 */
enum RisStatus ris_benchmark_eta(const struct RisConfig *config,
                                 const char *scheme,
                                 uint64_t seed,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_EEM_H */
