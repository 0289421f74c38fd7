#ifndef STICKY_COUPLING_H
#define STICKY_COUPLING_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScKitFunction {
  SC_KIT_FUNCTION_PHI = 0,
  SC_KIT_FUNCTION_BIG_PHI = 1,
  SC_KIT_FUNCTION_G = 2,
  SC_KIT_FUNCTION_F = 3,
} ScKitFunction;

typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_POINTER = 1,
  SC_STATUS_INVALID_INPUT = 2,
  SC_STATUS_INFEASIBLE = 3,
  SC_STATUS_NUMERICAL = 4,
  SC_STATUS_PANIC = 5,
} ScStatus;

// Curvature profile `κ`.
typedef struct ScKappa ScKappa;

// Tabulated Lyapunov construction for a drift `M + κ(r)r`.
typedef struct ScKit ScKit;

// Sticky invariant measure for a drift `M + κ(r)r`.
typedef struct ScMeasure ScMeasure;

typedef struct ScKitConstants {
  double r0;
  double r1;
  double c;
  double epsilon;
  double phi_r0;
} ScKitConstants;

typedef struct ScAlphaBound {
  double alpha_bound;
  double tail_mass_bound;
  // 1 when `M <= K R`.
  int32_t small_m_branch;
} ScAlphaBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread (empty if none). The
// pointer stays valid until the next failing call on the same thread.
const char *sc_last_error(void);

// Library version as a static NUL-terminated string.
const char *sc_version(void);

// Piecewise-linear `κ` through `(r[i], v[i])`, constant `tail_value` from
// `tail_start` on. `n` may be 0 for a constant profile.
//
// # Safety
// `r` and `v` must point to `n` readable doubles (or be null when `n == 0`);
// `out` must be writable.
enum ScStatus sc_kappa_new(const double *r,
                           const double *v,
                           uintptr_t n,
                           double tail_value,
                           double tail_start,
                           struct ScKappa **out);

// Step profile `L·1(r<R) − K·1(r≥R)`.
//
// # Safety
// `out` must be writable.
enum ScStatus sc_kappa_step(double l, double k, double r, struct ScKappa **out);

// # Safety
// `p` must come from an `sc_kappa_*` constructor and not be freed twice.
void sc_kappa_free(struct ScKappa *p);

// # Safety
// `kappa` must be a live handle; `out` must be writable.
enum ScStatus sc_kit_new(double m, const struct ScKappa *kappa, struct ScKit **out);

// # Safety
// `kit` must be a live handle; `out` must be writable.
enum ScStatus sc_kit_constants(const struct ScKit *kit, struct ScKitConstants *out);

// Evaluates `φ`, `Φ`, `g` or `f` at `r >= 0`.
//
// # Safety
// `kit` must be a live handle; `out` must be writable.
enum ScStatus sc_kit_eval(const struct ScKit *kit, enum ScKitFunction which, double r, double *out);

// # Safety
// `p` must come from [`sc_kit_new`] and not be freed twice.
void sc_kit_free(struct ScKit *p);

// # Safety
// `kappa` must be a live handle; `out` must be writable.
enum ScStatus sc_measure_new(double m, const struct ScKappa *kappa, struct ScMeasure **out);

// Mass of the atom at 0.
//
// # Safety
// `pi` must be a live handle; `out` must be writable.
enum ScStatus sc_measure_atom(const struct ScMeasure *pi, double *out);

// Mass of `(0, ∞)`.
//
// # Safety
// `pi` must be a live handle; `out` must be writable.
enum ScStatus sc_measure_tail(const struct ScMeasure *pi, double *out);

// Density of the continuous part at `x > 0`.
//
// # Safety
// `pi` must be a live handle; `out` must be writable.
enum ScStatus sc_measure_density(const struct ScMeasure *pi, double x, double *out);

// # Safety
// `p` must come from [`sc_measure_new`] and not be freed twice.
void sc_measure_free(struct ScMeasure *p);

// Upper bound on `P[X_t != Y_t]` from the kit and measure of the same drift.
//
// # Safety
// Handles must be live; `out` must be writable.
enum ScStatus sc_coupling_upper_bound(const struct ScKit *kit,
                                      const struct ScMeasure *pi,
                                      double t,
                                      double r0,
                                      double *out);

// Same bound with the rates of the `M = 0` drift `κ(r)r`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum ScStatus sc_modified_upper_bound(const struct ScKappa *kappa,
                                      const struct ScMeasure *pi,
                                      double t,
                                      double r0,
                                      double *out);

// Closed-form bound on `α` for the step profile `(L, K, R)` and offset `M`.
//
// # Safety
// `out` must be writable.
enum ScStatus sc_alpha_closed_form(double l,
                                   double k,
                                   double r,
                                   double m,
                                   struct ScAlphaBound *out);

// Upper bound on `1/c̃` for the step profile `(L, K, R)`.
//
// # Safety
// `out` must be writable.
enum ScStatus sc_ctilde_inverse_bound(double l, double k, double r, double *out);

// `P[|N(0,1)| <= r]`.
double sc_phi1(double r);

// Tail mass of the OU sticky measure for shift norm `m`.
double sc_ou_pi_tail(double m);

// Exact TV distance at time `t` between the two OU laws in dimension `d`.
//
// # Safety
// `m`, `x`, `y` must each point to `d` readable doubles; `out` must be writable.
enum ScStatus sc_ou_exact_tv(const double *m,
                             const double *x,
                             const double *y,
                             uintptr_t d,
                             double t,
                             double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* STICKY_COUPLING_H */
