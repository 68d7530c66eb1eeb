/* C interface to the qso operator-dynamics library. */

#ifndef QSO_FFI_H
#define QSO_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every FFI call.
typedef enum QsoStatus {
  QSO_STATUS_OK = 0,
  QSO_STATUS_NULL_POINTER = 1,
  QSO_STATUS_INVALID_ARGUMENT = 2,
  QSO_STATUS_NOT_CONVERGED = 3,
} QsoStatus;

// Opaque atomic measure handle.
typedef struct QsoAtomic QsoAtomic;

// Opaque continuous base measure handle.
typedef struct QsoCdf QsoCdf;

// Opaque particle ensemble handle.
typedef struct QsoEnsemble QsoEnsemble;

// Opaque kernel parameter handle.
typedef struct QsoParams QsoParams;

// Certificate constants, flattened for C.
typedef struct QsoCertificate {
  double p;
  uint32_t n;
  double beta_n;
  double domain_end;
  double bound;
  bool valid;
} QsoCertificate;

// Convergence run summary, flattened for C. `converged_at` is negative
// when the run did not reach tolerance. For the identity parameter
// `is_identity` is set and `limit` is meaningless.
typedef struct QsoConvergence {
  double limit;
  bool is_identity;
  int64_t converged_at;
  double final_distance;
  uint64_t steps_recorded;
} QsoConvergence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates kernel parameters for p in `[0,1]`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum QsoStatus qso_params_new(double p, struct QsoParams **out);

// # Safety
// `h` must come from [`qso_params_new`] and not already be freed.
void qso_params_free(struct QsoParams *h);

// Reads back (p, q).
//
// # Safety
// `h`, `p_out`, `q_out` must be valid.
enum QsoStatus qso_params_get(const struct QsoParams *h, double *p_out, double *q_out);

// The CDF interval map x(x + 2q(1-x)).
//
// # Safety
// `h` and `out` must be valid.
enum QsoStatus qso_g_map(const struct QsoParams *h, double x, double *out);

// The density factor 2px + 2q(1-x).
//
// # Safety
// `h` and `out` must be valid.
enum QsoStatus qso_f_factor(const struct QsoParams *h, double x, double *out);

// Builds an atomic measure from parallel position/weight arrays.
//
// # Safety
// `atoms` and `weights` must point to `len` readable doubles; `out` must
// be valid.
enum QsoStatus qso_atomic_new(const double *atoms,
                              const double *weights,
                              size_t len,
                              struct QsoAtomic **out);

// # Safety
// `h` must come from an atomic constructor and not already be freed.
void qso_atomic_free(struct QsoAtomic *h);

// Number of atoms.
//
// # Safety
// `h` and `out` must be valid.
enum QsoStatus qso_atomic_len(const struct QsoAtomic *h, size_t *out);

// Copies atoms and weights into caller buffers of capacity `len`.
//
// # Safety
// `atoms_out` and `weights_out` must hold `len` writable doubles.
enum QsoStatus qso_atomic_copy(const struct QsoAtomic *h,
                               double *atoms_out,
                               double *weights_out,
                               size_t len);

// One operator step.
//
// # Safety
// All handles must be valid; `out` must be a handle slot.
enum QsoStatus qso_atomic_apply(const struct QsoParams *params,
                                const struct QsoAtomic *measure,
                                struct QsoAtomic **out);

// `steps` operator steps; returns the final measure.
//
// # Safety
// All handles must be valid; `out` must be a handle slot.
enum QsoStatus qso_atomic_iterate(const struct QsoParams *params,
                                  const struct QsoAtomic *measure,
                                  uint32_t steps,
                                  struct QsoAtomic **out);

// The predicted trajectory limit (Dirac at an extreme atom; the measure
// itself at p = 1/2).
//
// # Safety
// All handles must be valid; `out` must be a handle slot.
enum QsoStatus qso_atomic_predict_limit(const struct QsoParams *params,
                                        const struct QsoAtomic *measure,
                                        struct QsoAtomic **out);

// The uniform base measure (CDF x).
//
// # Safety
// `out` must be a handle slot.
enum QsoStatus qso_cdf_uniform(struct QsoCdf **out);

// The power base measure (CDF x^k, k >= 1).
//
// # Safety
// `out` must be a handle slot.
enum QsoStatus qso_cdf_power(double k, struct QsoCdf **out);

// A piecewise-linear CDF through `len` (x, g) nodes from (0,0) to (1,1).
//
// # Safety
// `xs` and `gs` must point to `len` readable doubles; `out` must be valid.
enum QsoStatus qso_cdf_grid(const double *xs, const double *gs, size_t len, struct QsoCdf **out);

// # Safety
// `h` must come from a CDF constructor and not already be freed.
void qso_cdf_free(struct QsoCdf *h);

// Base CDF value g(x).
//
// # Safety
// `h` and `out` must be valid.
enum QsoStatus qso_cdf_eval(const struct QsoCdf *h, double x, double *out);

// Orbit CDF iterate g_n(x) (n >= 1).
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_orbit_cdf_at(const struct QsoParams *params,
                                const struct QsoCdf *base,
                                uint32_t n,
                                double x,
                                double *out);

// Orbit density f_n(x) and its natural logarithm (n >= 1).
//
// # Safety
// Handles and both out-pointers must be valid.
enum QsoStatus qso_orbit_density_at(const struct QsoParams *params,
                                    const struct QsoCdf *base,
                                    uint32_t n,
                                    double x,
                                    double *value_out,
                                    double *log_value_out);

// One-step interval image `V([a,b])`.
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_pushforward_interval(const struct QsoParams *params,
                                        const struct QsoCdf *base,
                                        double a,
                                        double b,
                                        double *out);

// Adaptive quadrature of the orbit density against the base measure
// over `[a,b]` to absolute tolerance `tol`.
//
// # Safety
// Handles and out-pointers must be valid.
enum QsoStatus qso_integrate_density(const struct QsoParams *params,
                                     const struct QsoCdf *base,
                                     uint32_t n,
                                     double a,
                                     double b,
                                     double tol,
                                     double *value_out,
                                     double *abs_error_out);

// Certificate constants at (p, n). Invalid certificates are returned with
// `valid = false`, not as errors; p = 1/2 or n < 2 is `InvalidArgument`.
//
// # Safety
// `params` and `out` must be valid.
enum QsoStatus qso_certificate(const struct QsoParams *params,
                               uint32_t n,
                               struct QsoCertificate *out);

// Smallest n with a valid certificate.
//
// # Safety
// `params` and `out` must be valid.
enum QsoStatus qso_min_valid_n(const struct QsoParams *params, uint32_t *out);

// Runs a continuous initial measure to its predicted Dirac limit under
// the W1 stopping rule.
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_converge_cdf(const struct QsoParams *params,
                                const struct QsoCdf *base,
                                double tol,
                                uint32_t max_steps,
                                struct QsoConvergence *out);

// Runs an atomic initial measure to its predicted Dirac limit.
// `use_tail_mass` selects the tail-mass metric instead of W1.
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_converge_atomic(const struct QsoParams *params,
                                   const struct QsoAtomic *measure,
                                   double tol,
                                   uint32_t max_steps,
                                   bool use_tail_mass,
                                   struct QsoConvergence *out);

// Residual |V delta_a({a}) - 1|; zero for every fixed point.
//
// # Safety
// `params` and `out` must be valid.
enum QsoStatus qso_fixed_point_check(const struct QsoParams *params, double a, double *out);

// Samples an ensemble of `count` particles from a continuous base.
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_ensemble_from_cdf(const struct QsoCdf *base,
                                     size_t count,
                                     unsigned long long seed,
                                     struct QsoEnsemble **out);

// Samples an ensemble of `count` particles from an atomic measure.
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_ensemble_from_atomic(const struct QsoAtomic *measure,
                                        size_t count,
                                        unsigned long long seed,
                                        struct QsoEnsemble **out);

// # Safety
// `h` must come from an ensemble constructor and not already be freed.
void qso_ensemble_free(struct QsoEnsemble *h);

// Advances the ensemble one generation in place.
//
// # Safety
// Handles must be valid; `ensemble` must not be aliased concurrently.
enum QsoStatus qso_ensemble_step(const struct QsoParams *params,
                                 struct QsoEnsemble *ensemble,
                                 size_t threads);

// Particle count.
//
// # Safety
// `h` and `out` must be valid.
enum QsoStatus qso_ensemble_len(const struct QsoEnsemble *h, size_t *out);

// Generation counter.
//
// # Safety
// `h` and `out` must be valid.
enum QsoStatus qso_ensemble_generation(const struct QsoEnsemble *h, uint32_t *out);

// Copies the (sorted) particle positions into a caller buffer of capacity
// `len`.
//
// # Safety
// `points_out` must hold `len` writable doubles.
enum QsoStatus qso_ensemble_copy(const struct QsoEnsemble *h, double *points_out, size_t len);

// Kolmogorov distance between the ensemble and the analytic CDF of the
// same particle process after `ensemble.generation()` steps (the
// mirrored-parameter orbit).
//
// # Safety
// Handles and `out` must be valid.
enum QsoStatus qso_ensemble_kolmogorov_vs_analytic(const struct QsoParams *params,
                                                   const struct QsoCdf *base,
                                                   const struct QsoEnsemble *ensemble,
                                                   double *out);

// Crate version as a static C string.
const char *qso_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSO_FFI_H */
