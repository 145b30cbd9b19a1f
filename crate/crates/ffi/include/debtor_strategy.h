#ifndef DEBTOR_STRATEGY_H
#define DEBTOR_STRATEGY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DS_ARM_COUNT 25

#define DS_LABEL_LEN 5

#define DS_CHANNEL_EMAIL 0

#define DS_CHANNEL_LETTER 1

#define DS_REWARD_REACTION 0

#define DS_REWARD_PAYMENT 1

/**
 * Result of every call.
 */
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DS_STATUS_NULL_POINTER = 1,
  /**
   * Invalid configuration: bad prior or reward mode, empty eligible set, bad snapshot.
   */
  DS_STATUS_CONFIG = 2,
  /**
   * Malformed input: bad typology label, arm index or channel, zero table marginal.
   */
  DS_STATUS_INPUT = 3,
  /**
   * Internal invariant violated.
   */
  DS_STATUS_INTERNAL = 4,
  /**
   * A panic was caught at the boundary; the handle should be discarded.
   */
  DS_STATUS_PANIC = 5,
} DsStatus;

/**
 * Opaque policy handle.
 */
typedef struct DsPolicy DsPolicy;

/**
 * Pearson chi-square result.
 */
typedef struct DsChiSquare {
  double statistic;
  uint64_t df;
  uint64_t n;
  double p_value;
  /**
   * Nonzero when some expected count is below five.
   */
  uint8_t low_expected;
} DsChiSquare;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ds_last_error(void);

/**
 * Library version, static storage.
 */
const char *ds_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 */
void ds_string_free(char *s);

/**
 * Create a policy with a Beta(prior_alpha, prior_beta) prior on every arm.
 * The random stream is derived from `seed` the same way the simulator does.
 */
enum DsStatus ds_policy_new(double epsilon,
                            double prior_alpha,
                            double prior_beta,
                            uint32_t reward,
                            uint64_t seed,
                            struct DsPolicy **out);

/**
 * Release a policy. Null is ignored.
 */
void ds_policy_free(struct DsPolicy *policy);

/**
 * Choose an arm for a debtor of `typology` on `channel`. `eligible` may be
 * null (all arms of the channel) or point to `n_eligible` arm indices.
 */
enum DsStatus ds_policy_select(struct DsPolicy *policy,
                               const char *typology,
                               uint32_t channel,
                               const uint32_t *eligible,
                               size_t n_eligible,
                               uint32_t *out_arm);

/**
 * Record the outcome of one message.
 */
enum DsStatus ds_policy_update(struct DsPolicy *policy,
                               const char *typology,
                               uint32_t arm,
                               bool reacted,
                               bool paid);

/**
 * Beta posterior parameters of one arm.
 */
enum DsStatus ds_policy_posterior(const struct DsPolicy *policy,
                                  const char *typology,
                                  uint32_t arm,
                                  double *out_alpha,
                                  double *out_beta);

/**
 * Serialize the policy and its random stream. Restoring the JSON with
 * [`ds_policy_from_json`] continues the same sequence of selections.
 */
enum DsStatus ds_policy_to_json(const struct DsPolicy *policy, char **out_json);

enum DsStatus ds_policy_from_json(const char *json, struct DsPolicy **out);

/**
 * Name of an arm: "cooperative@12:00" for email, the bare tonality for letters.
 */
enum DsStatus ds_arm_name(uint32_t arm, char **out_name);

/**
 * Inverse of [`ds_arm_name`].
 */
enum DsStatus ds_arm_parse(const char *name, uint32_t *out_arm);

/**
 * Label four normalized scores (willingness, ability, organization,
 * rationality). A score of exactly 0.5 counts as high. `out_label` must
 * hold at least `DS_LABEL_LEN` bytes and receives a NUL-terminated label.
 */
enum DsStatus ds_classify(const double *scores, char *out_label);

/**
 * Pearson chi-square test of independence (no continuity correction) on
 * a row-major `rows` x `cols` table of counts.
 */
enum DsStatus ds_chi_square(const uint64_t *counts,
                            size_t rows,
                            size_t cols,
                            struct DsChiSquare *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEBTOR_STRATEGY_H */
