/* C interface to the meshmac simulator. Generated by cbindgen; do not edit. */

#ifndef MESHMAC_H
#define MESHMAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result classes, aligned with the CLI exit codes.
typedef enum MeshmacStatus {
  // The call succeeded.
  MESHMAC_STATUS_OK = 0,
  // An internal invariant was violated (a bug, not a usage error).
  MESHMAC_STATUS_INVARIANT = 1,
  // The configuration or an I/O operation was rejected.
  MESHMAC_STATUS_CONFIG = 2,
  // The topology is unusable: disconnected, unroutable, or uncolorable.
  MESHMAC_STATUS_TOPOLOGY = 3,
  // A pointer or string argument was null or malformed.
  MESHMAC_STATUS_ARGUMENT = 4,
} MeshmacStatus;

// Opaque scenario configuration handle.
typedef struct MeshmacConfig MeshmacConfig;

// Opaque result record handle.
typedef struct MeshmacRecord MeshmacRecord;

// Plain result of the negotiation-contention probe.
typedef struct MeshmacProbe {
  // Contending sender-receiver pairs.
  uint32_t pairs;
  // Beacon intervals measured.
  uint32_t intervals;
  // Reservations that never completed.
  uint32_t missing_reservations;
  // Mean time from beacon to reservation, across flows, seconds.
  double mean_contention_s;
  // Mean time from beacon to the interval's last reservation, seconds.
  double mean_makespan_s;
} MeshmacProbe;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last failure message of the calling thread.
//
// The pointer stays valid until the next failing call on the same thread;
// it is never null and points at an empty string when nothing failed yet.
const char *meshmac_last_error(void);

// Library version as a static string.
const char *meshmac_version(void);

// The fixed CSV header matching [`meshmac_record_csv_row`]; static storage.
const char *meshmac_csv_header(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must have come from a meshmac function documented to transfer string
// ownership, and must not be used afterwards. Null is ignored.
void meshmac_string_free(char *s);

// Creates a configuration with library defaults. Never fails.
struct MeshmacConfig *meshmac_config_new(void);

// Loads a configuration file (`key = value` lines).
//
// Returns null and sets the thread error on failure.
//
// # Safety
// `path` must be a valid null-terminated string.
struct MeshmacConfig *meshmac_config_load(const char *path);

// Applies one `key = value` assignment, exactly as a config file line would.
//
// # Safety
// `cfg` must be a live configuration handle; `key` and `value` must be
// valid null-terminated strings.
enum MeshmacStatus meshmac_config_set(struct MeshmacConfig *cfg,
                                      const char *key,
                                      const char *value);

// Sets the master seed.
//
// # Safety
// `cfg` must be a live configuration handle.
enum MeshmacStatus meshmac_config_seed(struct MeshmacConfig *cfg, uint64_t seed);

// Releases a configuration handle. Null is ignored.
//
// # Safety
// `cfg` must have come from this library and must not be used afterwards.
void meshmac_config_free(struct MeshmacConfig *cfg);

// Runs the configured scenario to completion.
//
// Returns null and sets the thread error on failure; when `status` is
// non-null it receives the result class either way. The same configuration
// and seed always produce the same record.
//
// # Safety
// `cfg` must be a live configuration handle; `status` must be null or
// point at writable storage for one `MeshmacStatus`.
struct MeshmacRecord *meshmac_run(const struct MeshmacConfig *cfg, enum MeshmacStatus *status);

// Offered load in bits per second. NaN when `rec` is null.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_offered_bps(const struct MeshmacRecord *rec);

// Delivered payload throughput in bits per second. NaN when `rec` is null.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_throughput_bps(const struct MeshmacRecord *rec);

// Packet loss rate in `[0, 1]`. NaN when `rec` is null.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_loss_rate(const struct MeshmacRecord *rec);

// Jain fairness of per-channel delivered payload. NaN when `rec` is null.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_fairness(const struct MeshmacRecord *rec);

// Total radio energy in joules. NaN when `rec` is null.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_energy_j(const struct MeshmacRecord *rec);

// Mean end-to-end delay in seconds; NaN when nothing was delivered.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_delay_s(const struct MeshmacRecord *rec);

// Final negotiation-window length in seconds; NaN when never reported.
//
// # Safety
// `rec` must be a live record handle.
double meshmac_record_cna_final_s(const struct MeshmacRecord *rec);

// Generated packet count (zero when `rec` is null).
//
// # Safety
// `rec` must be a live record handle.
uint64_t meshmac_record_generated(const struct MeshmacRecord *rec);

// Delivered packet count (zero when `rec` is null).
//
// # Safety
// `rec` must be a live record handle.
uint64_t meshmac_record_delivered(const struct MeshmacRecord *rec);

// Dropped packet count (zero when `rec` is null).
//
// # Safety
// `rec` must be a live record handle.
uint64_t meshmac_record_dropped(const struct MeshmacRecord *rec);

// Renders the record as one CSV row matching [`meshmac_csv_header`].
//
// Returns an owned string — release it with [`meshmac_string_free`] — or
// null when `rec` is null.
//
// # Safety
// `rec` must be a live record handle.
char *meshmac_record_csv_row(const struct MeshmacRecord *rec);

// Releases a record handle. Null is ignored.
//
// # Safety
// `rec` must have come from [`meshmac_run`] and must not be used afterwards.
void meshmac_record_free(struct MeshmacRecord *rec);

// Measures negotiation contention for `pairs` same-domain pairs.
//
// # Safety
// `out` must point at writable storage for one `MeshmacProbe`.
enum MeshmacStatus meshmac_contention_probe(uint32_t pairs,
                                            uint16_t channels,
                                            uint64_t seed,
                                            struct MeshmacProbe *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MESHMAC_H */
