#ifndef CR_NOISE_LAB_H
#define CR_NOISE_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/*
 Result code of every fallible call.
 */
typedef enum CrStatus {
  CR_STATUS_OK = 0,
  /*
   A required pointer was null.
   */
  CR_STATUS_NULL_POINTER = 1,
  /*
   A parameter is outside its admissible range.
   */
  CR_STATUS_INVALID_PARAMETER = 2,
  /*
   The stiffness matrix is not positive definite.
   */
  CR_STATUS_NOT_POSITIVE_DEFINITE = 3,
  /*
   Undamped system evaluated exactly at a resonance.
   */
  CR_STATUS_UNDAMPED_RESONANCE = 4,
  /*
   Time step above the stability bound.
   */
  CR_STATUS_TIME_STEP_TOO_LARGE = 5,
  /*
   The integration diverged or produced non-finite values.
   */
  CR_STATUS_NON_FINITE = 6,
  /*
   Series or analysis window too short.
   */
  CR_STATUS_TOO_SHORT = 7,
  /*
   Band outside the spectrum grid.
   */
  CR_STATUS_OUT_OF_RANGE = 8,
  /*
   Output voltage is zero.
   */
  CR_STATUS_NO_CARRIER = 9,
  /*
   No transduction factor was supplied.
   */
  CR_STATUS_MISSING_TRANSDUCTION = 10,
  /*
   A Rust panic was caught at the boundary.
   */
  CR_STATUS_INTERNAL = 11,
} CrStatus;

typedef enum CrModeLabel {
  CR_MODE_LABEL_IN_PHASE = 0,
  CR_MODE_LABEL_OUT_OF_PHASE = 1,
  CR_MODE_LABEL_DEGENERATE = 2,
} CrModeLabel;

typedef enum CrNoiseTarget {
  CR_NOISE_TARGET_NONE = 0,
  CR_NOISE_TARGET_RESONATOR1 = 1,
  CR_NOISE_TARGET_RESONATOR2 = 2,
  CR_NOISE_TARGET_BOTH = 3,
} CrNoiseTarget;

/*
 Opaque one-sided PSD.
 */
typedef struct CrSpectrum CrSpectrum;

/*
 Opaque coupled-pair model.
 */
typedef struct CrSystem CrSystem;

/*
 Opaque recorded trajectory.
 */
typedef struct CrTimeSeries CrTimeSeries;

/*
 Physical parameters, SI units.
 */
typedef struct CrSystemParams {
  double m1;
  double m2;
  double km1;
  double km2;
  double kc;
  double c1;
  double c2;
  double cc;
} CrSystemParams;

typedef struct CrMode {
  /*
   [Hz]
   */
  double frequency;
  /*
   [rad/s]
   */
  double omega;
  /*
   Unit-norm shape `(x1, x2)`.
   */
  double shape[2];
  enum CrModeLabel label;
  double modal_q;
} CrMode;

typedef struct CrModes {
  /*
   Ascending frequency.
   */
  struct CrMode modes[2];
  /*
   `f2 - f1` [Hz]
   */
  double split;
} CrModes;

typedef struct CrComplex {
  double re;
  double im;
} CrComplex;

typedef struct CrReadout {
  /*
   Feedback resistor [ohm]
   */
  double r_f;
  /*
   Amplifier current noise density [A/sqrt(Hz)]
   */
  double i_n;
  /*
   Amplifier voltage noise density [V/sqrt(Hz)]
   */
  double v_n;
  /*
   Noise-equivalent bandwidth factor
   */
  double neb_factor;
} CrReadout;

typedef struct CrElectronicBudget {
  double i_rf;
  double i_vn;
  double i_in;
  /*
   RSS of the per-sqrt(Hz) densities.
   */
  double total_density_convention;
  /*
   RSS of the three integrated rows.
   */
  double total_integrated;
} CrElectronicBudget;

typedef struct CrMinDetectable {
  /*
   `resolution / sensitivity`
   */
  double absolute;
  /*
   `resolution / sqrt(B) / sensitivity`
   */
  double density;
} CrMinDetectable;

/*
 Forcing of a run. A zero `harmonic_amplitude` disables the harmonic drive.
 */
typedef struct CrForcing {
  /*
   Peak force [N]
   */
  double harmonic_amplitude;
  /*
   [Hz]
   */
  double harmonic_frequency;
  /*
   [rad]
   */
  double harmonic_phase;
  /*
   1 or 2
   */
  uint32_t harmonic_target;
  enum CrNoiseTarget noise_target;
  /*
   One-sided force PSD [N^2/Hz]
   */
  double noise_psd;
  uint64_t seed;
} CrForcing;

typedef struct CrPlan {
  /*
   Integration step [s]; zero or negative selects 1/(50*f2).
   */
  double dt;
  /*
   [s]
   */
  double duration;
  /*
   Record every n-th step (>= 1).
   */
  size_t decimation;
  /*
   `(x1, v1, x2, v2)`
   */
  double initial_state[4];
} CrPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next call into this library on the same thread.
 */
const char *cr_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cr_version(void);

/*
 Builds a system from `params`.

 # Safety
 `params` must point to a valid `CrSystemParams`; `out` must be writable.
 */
enum CrStatus cr_system_new(const struct CrSystemParams *params, struct CrSystem **out);

/*
 The reference design (kc = -393.5 N/m, Q = 2547).

 # Safety
 `out` must be writable.
 */
enum CrStatus cr_system_reference(struct CrSystem **out);

/*
 Releases a system. Null is ignored.

 # Safety
 `sys` must come from this library and not be used afterwards.
 */
void cr_system_free(struct CrSystem *sys);

/*
 Parameters of an existing system.

 # Safety
 `sys` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_system_params(const struct CrSystem *sys, struct CrSystemParams *out);

/*
 # Safety
 `sys` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_system_modes(const struct CrSystem *sys, struct CrModes *out);

/*
 Receptance `h[j][k]` at `frequency` [Hz], written row-major into `out[4]`.

 # Safety
 `sys` must be a live handle; `out` must have room for 4 values.
 */
enum CrStatus cr_system_receptance(const struct CrSystem *sys,
                                   double frequency,
                                   struct CrComplex *out);

/*
 One-sided thermal force PSD `4*kB*T*c` [N^2/Hz].

 # Safety
 `out` must be writable.
 */
enum CrStatus cr_thermal_force_psd(double damping, double temperature, double *out);

/*
 Default readout (1 Mohm, 20 fA/sqrt(Hz), 70 nV/sqrt(Hz), 1.57).
 */
struct CrReadout cr_readout_default(void);

/*
 # Safety
 `readout` must point to a valid `CrReadout`; `out` must be writable.
 */
enum CrStatus cr_electronic_budget(const struct CrReadout *readout,
                                   double r_x,
                                   double temperature,
                                   double bandwidth,
                                   struct CrElectronicBudget *out);

/*
 RSS of uncorrelated mechanical and electronic noise currents.

 # Safety
 `out` must be writable.
 */
enum CrStatus cr_total_system_noise(double i_mech, double i_elec, double *out);

/*
 `v_noise / v_out`.

 # Safety
 `out` must be writable.
 */
enum CrStatus cr_amplitude_resolution(double v_noise, double v_out, double *out);

/*
 RSS of the two resonators' amplitude resolutions.

 # Safety
 `out` must be writable.
 */
enum CrStatus cr_ar_resolution(double res_r1, double res_r2, double *out);

/*
 # Safety
 `out` must be writable.
 */
enum CrStatus cr_min_detectable_stiffness(double resolution_value,
                                          double sensitivity,
                                          double bandwidth,
                                          struct CrMinDetectable *out);

/*
 Integrates the system under `forcing` and returns the recorded series.

 # Safety
 `sys` must be a live handle; `forcing` and `plan` must be valid; `out`
 must be writable.
 */
enum CrStatus cr_simulate(const struct CrSystem *sys,
                          const struct CrForcing *forcing,
                          const struct CrPlan *plan,
                          struct CrTimeSeries **out);

/*
 Number of recorded samples, 0 for null.

 # Safety
 `ts` must be null or a live handle.
 */
size_t cr_timeseries_len(const struct CrTimeSeries *ts);

/*
 Spacing of recorded samples [s], 0 for null.

 # Safety
 `ts` must be null or a live handle.
 */
double cr_timeseries_dt(const struct CrTimeSeries *ts);

/*
 Displacement samples of resonator 1 or 2, borrowed from the handle
 (`cr_timeseries_len` values). Null on a bad argument.

 # Safety
 `ts` must be null or a live handle; the data dies with the handle.
 */
const double *cr_timeseries_data(const struct CrTimeSeries *ts, uint32_t resonator_index);

/*
 # Safety
 `ts` must come from this library and not be used afterwards.
 */
void cr_timeseries_free(struct CrTimeSeries *ts);

/*
 Welch PSD of `n` samples at spacing `dt`. A zero `segment_length`
 selects the largest power of two not above `n/8`.

 # Safety
 `x` must point to `n` readable values; `out` must be writable.
 */
enum CrStatus cr_welch_psd(const double *x,
                           size_t n,
                           double dt,
                           size_t segment_length,
                           double overlap,
                           struct CrSpectrum **out);

/*
 Number of frequency bins, 0 for null.

 # Safety
 `s` must be null or a live handle.
 */
size_t cr_spectrum_len(const struct CrSpectrum *s);

/*
 Bin spacing [Hz], 0 for null.

 # Safety
 `s` must be null or a live handle.
 */
double cr_spectrum_df(const struct CrSpectrum *s);

/*
 PSD values borrowed from the handle; bin `k` is at `k*df`.

 # Safety
 `s` must be null or a live handle; the data dies with the handle.
 */
const double *cr_spectrum_values(const struct CrSpectrum *s);

/*
 `sum(values)*df` over the windowed, overlap-averaged mean square.

 # Safety
 `s` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_spectrum_parseval_ratio(const struct CrSpectrum *s, double *out);

/*
 Mean-square power in `[f_center - B/2, f_center + B/2]`.

 # Safety
 `s` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_spectrum_band_power(const struct CrSpectrum *s,
                                     double f_center,
                                     double bandwidth,
                                     double *out);

/*
 # Safety
 `s` must come from this library and not be used afterwards.
 */
void cr_spectrum_free(struct CrSpectrum *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CR_NOISE_LAB_H */
