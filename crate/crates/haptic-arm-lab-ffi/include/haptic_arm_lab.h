/* C interface to the haptic-arm-lab simulation toolkit.
 * Regenerated by the crate's build script (cbindgen); do not edit by hand. */

#ifndef HAPTIC_ARM_LAB_H
#define HAPTIC_ARM_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum HalStatus {
  HalStatus_Ok = 0,
  HalStatus_NullPointer = 1,
  HalStatus_InvalidArgument = 2,
  HalStatus_DimensionMismatch = 3,
  HalStatus_ParseError = 4,
  HalStatus_SolverFailure = 5,
  HalStatus_IoError = 6,
} HalStatus;

/**
 * Opaque robot model handle.
 */
typedef struct HalModel HalModel;

/**
 * Opaque flexible-joint simulation handle (model + friction + state).
 */
typedef struct HalSim HalSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread; valid until
 * the next failing call.
 */
const char *hal_last_error_message(void);

/**
 * Crate version as a static string.
 */
const char *hal_version(void);

/**
 * Create a built-in model: `pendulum1`, `planar2`, or `panda_like`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer; the
 * returned handle must be released with `hal_model_free`.
 */
enum HalStatus hal_model_builtin(const char *name, struct HalModel **out);

/**
 * Load a model from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer; the
 * returned handle must be released with `hal_model_free`.
 */
enum HalStatus hal_model_load_json(const char *path, struct HalModel **out);

/**
 * Release a model handle (NULL is ignored).
 *
 * # Safety
 * `model` must have been returned by a model constructor and not yet freed.
 */
void hal_model_free(struct HalModel *model);

/**
 * Degrees of freedom, or 0 for a NULL handle.
 *
 * # Safety
 * `model` must be a live model handle or NULL.
 */
uintptr_t hal_model_dof(const struct HalModel *model);

/**
 * Terminal-frame pose at `q` as `[tx,ty,tz,qw,qx,qy,qz]`.
 *
 * # Safety
 * `q` must point to `n` doubles and `out_pose7` to 7 writable doubles.
 */
enum HalStatus hal_model_forward_kinematics(const struct HalModel *model,
                                            const double *q,
                                            uintptr_t n,
                                            double *out_pose7);

/**
 * Geometric Jacobian (linear rows then angular), row-major 6 x n.
 *
 * # Safety
 * `q` must point to `n` doubles and `out_6xn` to `6*n` writable doubles.
 */
enum HalStatus hal_model_jacobian(const struct HalModel *model,
                                  const double *q,
                                  uintptr_t n,
                                  double *out_6xn);

/**
 * Link-side mass matrix, row-major n x n.
 *
 * # Safety
 * `q` must point to `n` doubles and `out_nxn` to `n*n` writable doubles.
 */
enum HalStatus hal_model_mass_matrix(const struct HalModel *model,
                                     const double *q,
                                     uintptr_t n,
                                     double *out_nxn);

/**
 * Gravity torque vector g(q).
 *
 * # Safety
 * `q` must point to `n` doubles and `out_tau` to `n` writable doubles.
 */
enum HalStatus hal_model_gravity(const struct HalModel *model,
                                 const double *q,
                                 uintptr_t n,
                                 double *out_tau);

/**
 * Inverse dynamics: τ = M(q)q̈ + C(q,q̇)q̇ + g(q).
 *
 * # Safety
 * `q`, `qdot`, `qddot` must each point to `n` doubles and `out_tau` to `n`
 * writable doubles.
 */
enum HalStatus hal_model_inverse_dynamics(const struct HalModel *model,
                                          const double *q,
                                          const double *qdot,
                                          const double *qddot,
                                          uintptr_t n,
                                          double *out_tau);

/**
 * Create a flexible-joint simulation at rest in posture `q0` with per-joint
 * Coulomb/viscous friction. `use_rk4 = 0` selects semi-implicit Euler.
 *
 * # Safety
 * `coulomb`, `viscous`, `q0` must each point to `n` doubles matching the
 * model's DOF; the returned handle must be released with `hal_sim_free`.
 */
enum HalStatus hal_sim_create(const struct HalModel *model,
                              const double *coulomb,
                              const double *viscous,
                              const double *q0,
                              uintptr_t n,
                              double dt,
                              int32_t use_rk4,
                              struct HalSim **out);

/**
 * Release a simulation handle (NULL is ignored).
 *
 * # Safety
 * `sim` must have been returned by `hal_sim_create` and not yet freed.
 */
void hal_sim_free(struct HalSim *sim);

/**
 * Advance one fixed step with motor torque `tau_m` and external link
 * torque `tau_ext`.
 *
 * # Safety
 * `tau_m` and `tau_ext` must each point to `n` doubles.
 */
enum HalStatus hal_sim_step(struct HalSim *sim,
                            const double *tau_m,
                            const double *tau_ext,
                            uintptr_t n);

/**
 * Copy out the current state; any of the output pointers may be NULL to
 * skip that field.
 *
 * # Safety
 * Non-NULL outputs must each point to `n` writable doubles.
 */
enum HalStatus hal_sim_state(const struct HalSim *sim,
                             double *q,
                             double *qdot,
                             double *theta,
                             double *thetadot,
                             uintptr_t n);

/**
 * Simulation time in seconds, or a negative value for a NULL handle.
 *
 * # Safety
 * `sim` must be a live sim handle or NULL.
 */
double hal_sim_time(const struct HalSim *sim);

/**
 * Stored energy (kinetic + elastic + gravitational) referenced to the
 * creation posture, J.
 *
 * # Safety
 * `out` must be a valid pointer to one double.
 */
enum HalStatus hal_sim_stored_energy(const struct HalSim *sim, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAPTIC_ARM_LAB_H */
