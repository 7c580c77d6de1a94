#ifndef ASST_H
#define ASST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AsstStatus {
  ASST_STATUS_OK = 0,
  ASST_STATUS_NULL_POINTER = 1,
  ASST_STATUS_INVALID_ARGUMENT = 2,
  ASST_STATUS_BUFFER_TOO_SMALL = 3,
  ASST_STATUS_UNSEPARABLE = 4,
  ASST_STATUS_PARSE = 5,
  ASST_STATUS_IO = 6,
  ASST_STATUS_COMPUTATION = 7,
  ASST_STATUS_PANIC = 8,
} AsstStatus;

/*
 A sampled signal.
 */
typedef struct AsstSignal AsstSignal;

/*
 A synchrosqueezed time-frequency plane.
 */
typedef struct AsstTimeFreq AsstTimeFreq;

typedef struct AsstEstimationOptions {
  double mu;
  double tau0;
  size_t n_voices;
  double sigma_min;
  double sigma_max;
  double sigma_step;
  double ell;
  size_t zeta;
  double gamma3;
  /*
   Length of the uniform smoothing filter.
   */
  size_t smooth_len;
} AsstEstimationOptions;

typedef struct AsstSstOptions {
  double mu;
  double tau0;
  size_t n_voices;
  /*
   1 or 2.
   */
  uint32_t order;
  /*
   Nonzero for the adaptive phase rule, zero for the conventional one.
   */
  uint32_t adaptive;
  double gamma_rel;
  /*
   0 selects N/2 bins.
   */
  size_t freq_bins;
} AsstSstOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *asst_last_error(void);

struct AsstEstimationOptions asst_estimation_options_default(void);

struct AsstSstOptions asst_sst_options_default(void);

/*
 # Safety
 `samples` must point to `n` doubles; `out` must be a valid pointer.
 */
enum AsstStatus asst_signal_from_real(const double *samples,
                                      size_t n,
                                      double sample_rate,
                                      struct AsstSignal **out);

/*
 # Safety
 `re` and `im` must point to `n` doubles each; `out` must be valid.
 */
enum AsstStatus asst_signal_from_complex(const double *re,
                                         const double *im,
                                         size_t n,
                                         double sample_rate,
                                         struct AsstSignal **out);

/*
 Built-in signals: 0 for the two-chirp signal, 1 for the three-component
 signal, sampled on `[0, 1)`.

 # Safety
 `out` must be a valid pointer.
 */
enum AsstStatus asst_signal_builtin(uint32_t which, size_t n, struct AsstSignal **out);

/*
 Reads a signal CSV. A `sample_rate` of 0 takes the rate from the
 file's `# sample_rate=` header.

 # Safety
 `path` must be a NUL-terminated string; `out` must be valid.
 */
enum AsstStatus asst_signal_load_csv(const char *path, double sample_rate, struct AsstSignal **out);

/*
 # Safety
 `signal` must be NULL or a handle from this library.
 */
size_t asst_signal_len(const struct AsstSignal *signal);

/*
 # Safety
 `signal` must be NULL or a handle from this library, not freed before.
 */
void asst_signal_free(struct AsstSignal *signal);

/*
 Estimated width track, one value per sample, written to `sigma_out`.

 # Safety
 `signal` and `options` must be valid; `sigma_out` must hold `len` doubles.
 */
enum AsstStatus asst_estimate_sigma(const struct AsstSignal *signal,
                                    const struct AsstEstimationOptions *options,
                                    double *sigma_out,
                                    size_t len);

/*
 Synchrosqueezes `signal` with the per-sample width track `sigma`.

 # Safety
 `signal` and `options` must be valid, `sigma` must hold `len` doubles and
 `out` must be a valid pointer.
 */
enum AsstStatus asst_sst(const struct AsstSignal *signal,
                         const double *sigma,
                         size_t len,
                         const struct AsstSstOptions *options,
                         struct AsstTimeFreq **out);

/*
 # Safety
 `tf` must be NULL or a handle from this library.
 */
size_t asst_tf_bins(const struct AsstTimeFreq *tf);

/*
 # Safety
 `tf` must be NULL or a handle from this library.
 */
size_t asst_tf_times(const struct AsstTimeFreq *tf);

/*
 Width of one frequency bin in Hz; bin `k` covers `[k w, (k+1) w)`.

 # Safety
 `tf` must be NULL or a handle from this library.
 */
double asst_tf_bin_width(const struct AsstTimeFreq *tf);

/*
 Copies the plane into `re` and `im` (`bins * times` each, row-major).

 # Safety
 `tf` must be valid; `re` and `im` must hold `len` doubles each.
 */
enum AsstStatus asst_tf_data(const struct AsstTimeFreq *tf, double *re, double *im, size_t len);

/*
 # Safety
 `tf` must be NULL or a handle from this library, not freed before.
 */
void asst_tf_free(struct AsstTimeFreq *tf);

/*
 Extracts up to `n_components` ridges and recovers a component around
 each, integrating `band` bins either side. Component `k` occupies
 `[k * times, (k+1) * times)` of `re`, `im` and `ridge_hz`, ordered by
 mean frequency. `found` receives the number of ridges found.

 # Safety
 `tf` must be valid; the three arrays must hold `len` doubles each and
 `found` must be a valid pointer.
 */
enum AsstStatus asst_separate(const struct AsstTimeFreq *tf,
                              size_t n_components,
                              size_t band,
                              uint32_t real_mode,
                              double *re,
                              double *im,
                              double *ridge_hz,
                              size_t len,
                              size_t *found);

/*
 Smallest window width separating `k` linear chirps with IFs
 `c[i] + r[i] t` (ordered by increasing frequency) at time `b`.

 # Safety
 `c` and `r` must hold `k` doubles; `sigma_out` must be valid.
 */
enum AsstStatus asst_sigma2(const double *c,
                            const double *r,
                            size_t k,
                            double b,
                            double mu,
                            double tau0,
                            double *sigma_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASST_H */
