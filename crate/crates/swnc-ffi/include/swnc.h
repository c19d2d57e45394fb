#ifndef SWNC_H
#define SWNC_H

/* Generated by cbindgen from the swnc-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every `swnc_*` call.
 */
typedef enum SwncStatus {
  /**
   * Success.
   */
  SWNC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SWNC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter was outside its domain.
   */
  SWNC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * File input/output failed.
   */
  SWNC_STATUS_IO = 3,
  /**
   * A document (trace, config) failed to parse.
   */
  SWNC_STATUS_PARSE = 4,
  /**
   * The simulation could not produce a result.
   */
  SWNC_STATUS_SIM = 5,
  /**
   * The delay bound is infeasible for these parameters.
   */
  SWNC_STATUS_INFEASIBLE = 6,
} SwncStatus;

/**
 * Opaque channel profile handle.
 */
typedef struct SwncProfile SwncProfile;

/**
 * Aggregate metrics of one simulated cell, as written to reports.
 */
typedef struct SwncMetrics {
  double throughput_mean;
  double mean_delay_slots;
  double max_delay_slots;
} SwncMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread, or null when the
 * last call succeeded. The pointer stays valid until the next failing
 * `swnc_*` call on the same thread.
 */
const char *swnc_last_error(void);

/**
 * Stationary distribution and mean erasure rate of a Gilbert-Elliott
 * channel. Any out-pointer may be null to skip that value.
 *
 * # Safety
 * Non-null out-pointers must be valid for writes.
 */
enum SwncStatus swnc_ge_stationary(double s,
                                   double q,
                                   double eps_good,
                                   double eps_bad,
                                   double *pi_g,
                                   double *pi_b,
                                   double *eps_mean);

/**
 * Retransmission scaling term of the GE channel.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SwncStatus swnc_ge_scaling(double s, double *out);

/**
 * Confidence-scaled erasure rate `eps_mean + alpha * sqrt(nu) / rtt`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SwncStatus swnc_eps_max_alpha(double eps_mean,
                                   double nu,
                                   uint32_t rtt_slots,
                                   double alpha,
                                   double *out);

/**
 * Upper bound on the in-order delivery delay, in slots. `nu_or_negative`
 * below zero selects the closed-form GE variance for `eps_mean`.
 * Returns `SWNC_STATUS_INFEASIBLE` when no operating point satisfies
 * the retransmission condition.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SwncStatus swnc_delay_upper_bound(double eps_mean,
                                       double nu_or_negative,
                                       uint32_t rtt_slots,
                                       double alpha,
                                       double th,
                                       double dof_rate,
                                       double s,
                                       double *out);

/**
 * Synthesize a Gilbert-Elliott profile. The handle must be released
 * with [`swnc_profile_free`].
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SwncStatus swnc_profile_from_ge(double s,
                                     double q,
                                     double eps_good,
                                     double eps_bad,
                                     uint64_t n_slots,
                                     uint32_t rtt_us,
                                     uint32_t slot_us,
                                     uint64_t seed,
                                     struct SwncProfile **out);

/**
 * Load a recorded trace (`slot,rtt_us,lost` CSV).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
enum SwncStatus swnc_profile_load(const char *path, struct SwncProfile **out);

/**
 * Write a profile in the trace format.
 *
 * # Safety
 * `profile` must come from this library; `path` must be a valid string.
 */
enum SwncStatus swnc_profile_save(const struct SwncProfile *profile, const char *path);

/**
 * Number of slots in the profile.
 *
 * # Safety
 * `profile` must come from this library.
 */
uint64_t swnc_profile_len(const struct SwncProfile *profile);

/**
 * Fit burst-erasure GE parameters to a profile. Out-pointers may be
 * null to skip values.
 *
 * # Safety
 * `profile` must come from this library.
 */
enum SwncStatus swnc_profile_fit(const struct SwncProfile *profile,
                                 double *s,
                                 double *q,
                                 double *eps_mean);

/**
 * Release a profile handle. Null is a no-op.
 *
 * # Safety
 * `profile` must come from this library and not be freed twice.
 */
void swnc_profile_free(struct SwncProfile *profile);

/**
 * Run the full sweep described by a TOML configuration document (the
 * same format the `swnc simulate` command reads) and return the
 * summary CSV as a newly allocated string. Release it with
 * [`swnc_string_free`].
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string.
 */
enum SwncStatus swnc_simulate_toml(const char *config_toml, char **summary_out);

/**
 * Run one scheme over a profile handle and return aggregate metrics.
 * `scheme` is one of "arq", "rrlnc", "fsw-rlnc", "asw-rlnc".
 *
 * # Safety
 * `profile` must come from this library; `scheme` must be a valid
 * NUL-terminated string.
 */
enum SwncStatus swnc_run_datapoint(const struct SwncProfile *profile,
                                   const char *scheme,
                                   uint32_t n_packets,
                                   uint64_t packet_bytes,
                                   uint32_t experiences,
                                   uint64_t seed,
                                   struct SwncMetrics *out);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `text` must come from this library and not be freed twice.
 */
void swnc_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWNC_H */
