#ifndef HELPERCAP_H
#define HELPERCAP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_INVALID_ARGUMENT = 3,
  HC_STATUS_PARSE = 4,
  HC_STATUS_IO = 5,
  HC_STATUS_INVALID_CHANNEL = 6,
  HC_STATUS_DIMENSION_MISMATCH = 7,
  HC_STATUS_NUMERICAL_FAILURE = 8,
  HC_STATUS_TOO_LARGE = 9,
  HC_STATUS_NOT_MOD_ADDITIVE = 10,
  HC_STATUS_RH_TOO_SMALL = 11,
  HC_STATUS_PANIC = 12,
} HcStatus;

typedef enum HcMethod {
  HC_METHOD_ENVELOPE = 0,
  HC_METHOD_RATE_SPLIT = 1,
  HC_METHOD_BRUTE_FORCE = 2,
} HcMethod;

// A capacity result with its optimizing policy.
typedef struct HcCapacity HcCapacity;

// A validated channel.
typedef struct HcChannel HcChannel;

// Simulation parameters. `q_u_given_s` is flat `(s, u)` with `u_size`
// columns, `phi` has `u_size` entries.
typedef struct HcSimConfig {
  size_t n;
  double rate_r;
  double rate_rh;
  double r0;
  const double *q_u_given_s;
  const size_t *phi;
  size_t u_size;
  double epsilon;
  double epsilon_decoder;
  size_t trials;
  uint64_t seed;
  bool share_codebook;
  bool ensemble;
} HcSimConfig;

typedef struct HcSimReport {
  size_t trials;
  size_t helper_failures;
  size_t decode_errors;
  double error_rate;
  double ci_lo;
  double ci_hi;
  double effective_rate;
} HcSimReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library.
const char *hc_last_error_message(void);

// Loads a channel file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum HcStatus hc_channel_load(const char *path, struct HcChannel **out);

// Builds a channel from `q_s[s_size]` and `w` flat in `(x, s, y)` order.
//
// # Safety
// The arrays must hold the stated number of elements; `out` must be valid.
enum HcStatus hc_channel_new(size_t x_size,
                             size_t s_size,
                             size_t y_size,
                             const double *q_s,
                             const double *w,
                             struct HcChannel **out);

// # Safety
// `ch` must come from `hc_channel_load`/`hc_channel_new` and not be used
// afterwards. Null is ignored.
void hc_channel_free(struct HcChannel *ch);

// H(S) in bits.
//
// # Safety
// Pointers must be valid.
enum HcStatus hc_channel_state_entropy(const struct HcChannel *ch, double *out);

// C(rh) by the chosen method with default options and the given seed.
// Brute force uses 7 lattice levels and |U| = 3.
//
// # Safety
// Pointers must be valid.
enum HcStatus hc_capacity(const struct HcChannel *ch,
                          double rh,
                          enum HcMethod method,
                          uint64_t seed,
                          struct HcCapacity **out);

// Capacity in bits per channel use; NaN for a null handle.
//
// # Safety
// `cap` must be a live handle or null.
double hc_capacity_value(const struct HcCapacity *cap);

// Helper rate left for direct message bits; NaN for a null handle.
//
// # Safety
// `cap` must be a live handle or null.
double hc_capacity_r0(const struct HcCapacity *cap);

// # Safety
// `cap` must come from `hc_capacity` and not be used afterwards.
void hc_capacity_free(struct HcCapacity *cap);

// max over Q(x|s) of I(X;Y|S).
//
// # Safety
// Pointers must be valid.
enum HcStatus hc_oblivious_baseline(const struct HcChannel *ch, double *out);

// # Safety
// Pointers must be valid.
enum HcStatus hc_is_useless(const struct HcChannel *ch, bool *out);

// Closed-form capacity of a modulo-additive channel; `NotModAdditive`
// otherwise.
//
// # Safety
// Pointers must be valid.
enum HcStatus hc_mod_additive_capacity(const struct HcChannel *ch, double rh, double *out);

// Runs the coding-scheme simulation.
//
// # Safety
// `cfg` arrays must hold `s_size * u_size` and `u_size` elements.
enum HcStatus hc_simulate(const struct HcChannel *ch,
                          const struct HcSimConfig *cfg,
                          struct HcSimReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HELPERCAP_H */
