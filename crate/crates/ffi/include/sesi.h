#ifndef SESI_H
#define SESI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SesiStatus {
  SESI_STATUS_OK = 0,
  SESI_STATUS_NULL_POINTER = 1,
  SESI_STATUS_INVALID_ARGUMENT = 2,
  SESI_STATUS_DIMENSION = 3,
  SESI_STATUS_SINGULARITY = 4,
  SESI_STATUS_DOMAIN = 5,
  SESI_STATUS_NO_CONVERGENCE = 6,
  SESI_STATUS_CALIBRATION = 7,
  SESI_STATUS_NUMERICAL = 8,
  SESI_STATUS_PANIC = 99,
} SesiStatus;

/**
 * Fixed-step schemes available through [`sesi_step`].
 */
typedef enum SesiMethod {
  SESI_METHOD_SESI2 = 0,
  SESI_METHOD_SESI4 = 1,
  SESI_METHOD_MIDPOINT = 2,
} SesiMethod;

/**
 * Phase state of all bodies plus the current time.
 */
typedef struct SesiState SesiState;

/**
 * Sphere parameters and the Hamiltonian built from them.
 */
typedef struct SesiSystem SesiSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sesi_last_error_message(void);

/**
 * Creates a system. Release with [`sesi_system_free`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SesiStatus sesi_system_new(size_t n_bodies,
                                double mass,
                                double radius,
                                double theta0,
                                struct SesiSystem **out);

/**
 * # Safety
 * `system` must be null or a handle from [`sesi_system_new`] not yet freed.
 */
void sesi_system_free(struct SesiSystem *system);

/**
 * Creates a state of `n_bodies` bodies, all components zero, at `t = 0`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SesiStatus sesi_state_new(size_t n_bodies, struct SesiState **out);

/**
 * # Safety
 * `state` must be null or a handle from this API not yet freed.
 */
void sesi_state_free(struct SesiState *state);

/**
 * Number of bodies, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live state handle.
 */
size_t sesi_state_n_bodies(const struct SesiState *state);

/**
 * # Safety
 * `state` must be a live state handle and `t` writable.
 */
enum SesiStatus sesi_state_time(const struct SesiState *state, double *t);

/**
 * Reads body `body` as `(theta, phi, p_theta, p_phi)` into `out[0..4]`.
 *
 * # Safety
 * `state` must be a live state handle and `out` must point to 4 writable doubles.
 */
enum SesiStatus sesi_state_get_body(const struct SesiState *state, size_t body, double *out);

/**
 * # Safety
 * `state` must be a live state handle.
 */
enum SesiStatus sesi_state_set_body(struct SesiState *state,
                                    size_t body,
                                    double theta,
                                    double phi,
                                    double p_theta,
                                    double p_phi);

/**
 * # Safety
 * `state` must be a live state handle.
 */
enum SesiStatus sesi_state_set_time(struct SesiState *state, double t);

/**
 * Calibrated three-body closed-orbit start for `system`, which must have
 * three bodies, `theta0 = pi/4` and mass 2. Release with [`sesi_state_free`].
 *
 * # Safety
 * `system` must be a live system handle and `out` writable.
 */
enum SesiStatus sesi_benchmark_state(const struct SesiSystem *system, struct SesiState **out);

/**
 * Advances `state` in place by `n_steps` steps of size `tau`. On failure the
 * state is left at the last completed step.
 *
 * # Safety
 * `system` and `state` must be live handles.
 */
enum SesiStatus sesi_step(const struct SesiSystem *system,
                          struct SesiState *state,
                          enum SesiMethod method,
                          double tau,
                          size_t n_steps);

/**
 * Advances `state` in place to `t_end` with adaptive Dormand–Prince 4(5).
 *
 * # Safety
 * `system` and `state` must be live handles.
 */
enum SesiStatus sesi_dopri45(const struct SesiSystem *system,
                             struct SesiState *state,
                             double t_end,
                             double rel_tol,
                             double abs_tol);

/**
 * # Safety
 * `system` and `state` must be live handles and `energy` writable.
 */
enum SesiStatus sesi_energy(const struct SesiSystem *system,
                            const struct SesiState *state,
                            double *energy);

/**
 * Writes `(Lx, Ly, Lz)` to `out[0..3]`.
 *
 * # Safety
 * `system` and `state` must be live handles and `out` must point to 3
 * writable doubles.
 */
enum SesiStatus sesi_angular_momentum(const struct SesiSystem *system,
                                      const struct SesiState *state,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SESI_H */
