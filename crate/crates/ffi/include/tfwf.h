/* C interface of the time-frequency waterfilling toolkit. */

#ifndef TFWF_H
#define TFWF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every C-ABI call.
typedef enum TfwfStatus {
  TFWF_OK = 0,
  TFWF_NULL_POINTER = 1,
  TFWF_INVALID_ARGUMENT = 2,
  TFWF_DOMAIN_ERROR = 3,
  TFWF_RUNTIME_ERROR = 4,
} TfwfStatus;

// Opaque reverse-waterfilling allocation.
typedef struct TfwfReverseWaterfill TfwfReverseWaterfill;

// Opaque waterfilling allocation.
typedef struct TfwfWaterfill TfwfWaterfill;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Principal Lambert branch: `out = W_0(x)` for `x >= -1/e`.
enum TfwfStatus tfwf_lambert_w0(double x, double *out);

// Lower Lambert branch: `out = W_{-1}(x)` for `x` in `[-1/e, 0)`.
enum TfwfStatus tfwf_lambert_wm1(double x, double *out);

// Orthonormal dilated Hermite function of the given order at `t`.
enum TfwfStatus tfwf_hermite_eval(double gamma, uint32_t order, double t, double *out);

// Squared singular value `lambda_k` of the Gaussian-symbol channel at
// spreading factor `r`.
enum TfwfStatus tfwf_heat_eigenvalue(double r, uint32_t k, double *out);

// Closed-form channel capacity in nats per transmission.
enum TfwfStatus tfwf_heat_capacity_nats(double snr, double r, double *out);

// Closed-form rate-distortion value in nats per realization.
enum TfwfStatus tfwf_heat_rate_nats(double sdr, double r, double *out);

// Ellipse-of-concentration semi-axes: approximate `(a, b)` and exact
// `(a_x, b_x)`.
enum TfwfStatus tfwf_heat_eoc(double gamma,
                              double r,
                              double *a,
                              double *b,
                              double *a_exact,
                              double *b_exact);

// Waterfilling on ascending noise variances; returns an owned handle or
// null (with `status` set).
//
// # Safety
// `noise_vars` must point to `len` readable doubles; `status` must be a
// valid pointer.
struct TfwfWaterfill *tfwf_waterfill_new(const double *noise_vars,
                                         uintptr_t len,
                                         double s_total,
                                         enum TfwfStatus *status);

// # Safety
// `handle` must come from [`tfwf_waterfill_new`] and not be freed twice.
void tfwf_waterfill_free(struct TfwfWaterfill *handle);

// # Safety
// `handle` must be a live waterfill handle.
enum TfwfStatus tfwf_waterfill_water_level(const struct TfwfWaterfill *handle, double *out);

// Number of active subchannels.
//
// # Safety
// `handle` must be a live waterfill handle.
enum TfwfStatus tfwf_waterfill_active(const struct TfwfWaterfill *handle, uintptr_t *out);

// # Safety
// `handle` must be a live waterfill handle.
enum TfwfStatus tfwf_waterfill_capacity_nats(const struct TfwfWaterfill *handle, double *out);

// Energy allocated to subchannel `k`.
//
// # Safety
// `handle` must be a live waterfill handle.
enum TfwfStatus tfwf_waterfill_power(const struct TfwfWaterfill *handle, uintptr_t k, double *out);

// Reverse waterfilling on descending signal variances.
//
// # Safety
// `signal_vars` must point to `len` readable doubles; `status` must be a
// valid pointer.
struct TfwfReverseWaterfill *tfwf_reverse_waterfill_new(const double *signal_vars,
                                                        uintptr_t len,
                                                        double distortion,
                                                        enum TfwfStatus *status);

// # Safety
// `handle` must come from [`tfwf_reverse_waterfill_new`] and not be freed
// twice.
void tfwf_reverse_waterfill_free(struct TfwfReverseWaterfill *handle);

// # Safety
// `handle` must be a live reverse-waterfill handle.
enum TfwfStatus tfwf_reverse_waterfill_water_table(const struct TfwfReverseWaterfill *handle,
                                                   double *out);

// Number of components coded above the water table.
//
// # Safety
// `handle` must be a live reverse-waterfill handle.
enum TfwfStatus tfwf_reverse_waterfill_preserved(const struct TfwfReverseWaterfill *handle,
                                                 uintptr_t *out);

// # Safety
// `handle` must be a live reverse-waterfill handle.
enum TfwfStatus tfwf_reverse_waterfill_rate_nats(const struct TfwfReverseWaterfill *handle,
                                                 double *out);

// Distortion assigned to component `k`.
//
// # Safety
// `handle` must be a live reverse-waterfill handle.
enum TfwfStatus tfwf_reverse_waterfill_distortion(const struct TfwfReverseWaterfill *handle,
                                                  uintptr_t k,
                                                  double *out);

// Capacity of the Gaussian-symbol channel by waterfilling in the
// time-frequency plane. `out_level` may be null.
enum TfwfStatus tfwf_tf_capacity_gaussian(double gamma,
                                          double r,
                                          double s_total,
                                          double theta2,
                                          double *out_nats,
                                          double *out_level);

// Rate-distortion value of the matched nonstationary source by reverse
// waterfilling in the time-frequency plane. `out_level` may be null.
enum TfwfStatus tfwf_tf_rate_gaussian(double gamma,
                                      double r,
                                      double distortion,
                                      double sigma2,
                                      double *out_nats,
                                      double *out_level);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TFWF_H */
