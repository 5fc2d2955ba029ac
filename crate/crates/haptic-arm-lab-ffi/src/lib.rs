//! C ABI over the core toolkit: opaque handles, integer status codes, and a
//! thread-local last-error message. Matrices cross the boundary as row-major
//! `double` buffers; poses as `[tx,ty,tz,qw,qx,qy,qz]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use nalgebra::DVector;

use haptic_arm_lab::fjr::{self, FjrState, FrictionModel, Integrator, SimConfig};
use haptic_arm_lab::rigid_body::RobotModel;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ParseError = 4,
    SolverFailure = 5,
    IoError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn status_of(err: &haptic_arm_lab::Error) -> HalStatus {
    use haptic_arm_lab::Error::*;
    match err {
        DimensionMismatch { .. } => HalStatus::DimensionMismatch,
        InvalidModel(_) | InvalidConfig(_) | FrameMismatch { .. } | DtMismatch { .. } => {
            HalStatus::InvalidArgument
        }
        SolverFailure { .. } | NonFiniteState { .. } => HalStatus::SolverFailure,
        Io { .. } => HalStatus::IoError,
        Parse { .. } | Csv(_) => HalStatus::ParseError,
    }
}

fn fail(err: haptic_arm_lab::Error) -> HalStatus {
    let code = status_of(&err);
    set_error(&err.to_string());
    code
}

/// Message describing the most recent failure on this thread; valid until
/// the next failing call.
#[no_mangle]
pub extern "C" fn hal_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Crate version as a static string.
#[no_mangle]
pub extern "C" fn hal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque robot model handle.
pub struct HalModel {
    inner: RobotModel,
}

/// Opaque flexible-joint simulation handle (model + friction + state).
pub struct HalSim {
    model: RobotModel,
    friction: FrictionModel,
    state: FjrState,
    cfg: SimConfig,
    gravity_reference: f64,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, HalStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(HalStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        HalStatus::InvalidArgument
    })
}

unsafe fn read_vec(ptr: *const f64, len: usize) -> Result<DVector<f64>, HalStatus> {
    if ptr.is_null() {
        set_error("null buffer pointer");
        return Err(HalStatus::NullPointer);
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(
        ptr, len,
    )))
}

/// Create a built-in model: `pendulum1`, `planar2`, or `panda_like`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer; the
/// returned handle must be released with `hal_model_free`.
#[no_mangle]
pub unsafe extern "C" fn hal_model_builtin(
    name: *const c_char,
    out: *mut *mut HalModel,
) -> HalStatus {
    if out.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let name = match read_str(name) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match RobotModel::resolve(&format!("builtin:{name}")) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(HalModel { inner: model }));
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Load a model from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer; the
/// returned handle must be released with `hal_model_free`.
#[no_mangle]
pub unsafe extern "C" fn hal_model_load_json(
    path: *const c_char,
    out: *mut *mut HalModel,
) -> HalStatus {
    if out.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let path = match read_str(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match RobotModel::load_json(path) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(HalModel { inner: model }));
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release a model handle (NULL is ignored).
///
/// # Safety
/// `model` must have been returned by a model constructor and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hal_model_free(model: *mut HalModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Degrees of freedom, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be a live model handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hal_model_dof(model: *const HalModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dof())
}

/// Terminal-frame pose at `q` as `[tx,ty,tz,qw,qx,qy,qz]`.
///
/// # Safety
/// `q` must point to `n` doubles and `out_pose7` to 7 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_model_forward_kinematics(
    model: *const HalModel,
    q: *const f64,
    n: usize,
    out_pose7: *mut f64,
) -> HalStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return HalStatus::NullPointer;
    };
    if out_pose7.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let q = match read_vec(q, n) {
        Ok(v) => v,
        Err(code) => return code,
    };
    match model.inner.forward_kinematics(&q) {
        Ok(pose) => {
            let arr = pose.to_array7();
            ptr::copy_nonoverlapping(arr.as_ptr(), out_pose7, 7);
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Geometric Jacobian (linear rows then angular), row-major 6 x n.
///
/// # Safety
/// `q` must point to `n` doubles and `out_6xn` to `6*n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_model_jacobian(
    model: *const HalModel,
    q: *const f64,
    n: usize,
    out_6xn: *mut f64,
) -> HalStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return HalStatus::NullPointer;
    };
    if out_6xn.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let q = match read_vec(q, n) {
        Ok(v) => v,
        Err(code) => return code,
    };
    match model.inner.jacobian(&q) {
        Ok(jac) => {
            let out = std::slice::from_raw_parts_mut(out_6xn, 6 * n);
            for row in 0..6 {
                for col in 0..n {
                    out[row * n + col] = jac[(row, col)];
                }
            }
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Link-side mass matrix, row-major n x n.
///
/// # Safety
/// `q` must point to `n` doubles and `out_nxn` to `n*n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_model_mass_matrix(
    model: *const HalModel,
    q: *const f64,
    n: usize,
    out_nxn: *mut f64,
) -> HalStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return HalStatus::NullPointer;
    };
    if out_nxn.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let q = match read_vec(q, n) {
        Ok(v) => v,
        Err(code) => return code,
    };
    match model.inner.mass_matrix(&q) {
        Ok(m) => {
            let out = std::slice::from_raw_parts_mut(out_nxn, n * n);
            for row in 0..n {
                for col in 0..n {
                    out[row * n + col] = m[(row, col)];
                }
            }
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Gravity torque vector g(q).
///
/// # Safety
/// `q` must point to `n` doubles and `out_tau` to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_model_gravity(
    model: *const HalModel,
    q: *const f64,
    n: usize,
    out_tau: *mut f64,
) -> HalStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return HalStatus::NullPointer;
    };
    if out_tau.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let q = match read_vec(q, n) {
        Ok(v) => v,
        Err(code) => return code,
    };
    match model.inner.gravity_vector(&q) {
        Ok(g) => {
            ptr::copy_nonoverlapping(g.as_slice().as_ptr(), out_tau, n);
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Inverse dynamics: τ = M(q)q̈ + C(q,q̇)q̇ + g(q).
///
/// # Safety
/// `q`, `qdot`, `qddot` must each point to `n` doubles and `out_tau` to `n`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_model_inverse_dynamics(
    model: *const HalModel,
    q: *const f64,
    qdot: *const f64,
    qddot: *const f64,
    n: usize,
    out_tau: *mut f64,
) -> HalStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return HalStatus::NullPointer;
    };
    if out_tau.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    let (q, qd, qdd) = match (read_vec(q, n), read_vec(qdot, n), read_vec(qddot, n)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(code), _, _) | (_, Err(code), _) | (_, _, Err(code)) => return code,
    };
    match model.inner.inverse_dynamics(&q, &qd, &qdd) {
        Ok(tau) => {
            ptr::copy_nonoverlapping(tau.as_slice().as_ptr(), out_tau, n);
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Create a flexible-joint simulation at rest in posture `q0` with per-joint
/// Coulomb/viscous friction. `use_rk4 = 0` selects semi-implicit Euler.
///
/// # Safety
/// `coulomb`, `viscous`, `q0` must each point to `n` doubles matching the
/// model's DOF; the returned handle must be released with `hal_sim_free`.
#[no_mangle]
pub unsafe extern "C" fn hal_sim_create(
    model: *const HalModel,
    coulomb: *const f64,
    viscous: *const f64,
    q0: *const f64,
    n: usize,
    dt: f64,
    use_rk4: i32,
    out: *mut *mut HalSim,
) -> HalStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return HalStatus::NullPointer;
    };
    if out.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    if n != model.inner.dof() {
        set_error("buffer length does not match model DOF");
        return HalStatus::DimensionMismatch;
    }
    let (c, v, q0) = match (read_vec(coulomb, n), read_vec(viscous, n), read_vec(q0, n)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(code), _, _) | (_, Err(code), _) | (_, _, Err(code)) => return code,
    };
    let friction = match FrictionModel::new(c, v, fjr::DEFAULT_DEADBAND) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let integrator = if use_rk4 != 0 {
        Integrator::Rk4
    } else {
        Integrator::SemiImplicitEuler
    };
    let cfg = match SimConfig::new(dt, integrator) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let state = FjrState::at_rest(q0);
    let gravity_reference = match model.inner.gravity_potential(&state.q) {
        Ok(u) => u,
        Err(e) => return fail(e),
    };
    *out = Box::into_raw(Box::new(HalSim {
        model: model.inner.clone(),
        friction,
        state,
        cfg,
        gravity_reference,
    }));
    HalStatus::Ok
}

/// Release a simulation handle (NULL is ignored).
///
/// # Safety
/// `sim` must have been returned by `hal_sim_create` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hal_sim_free(sim: *mut HalSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance one fixed step with motor torque `tau_m` and external link
/// torque `tau_ext`.
///
/// # Safety
/// `tau_m` and `tau_ext` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_sim_step(
    sim: *mut HalSim,
    tau_m: *const f64,
    tau_ext: *const f64,
    n: usize,
) -> HalStatus {
    let Some(sim) = sim.as_mut() else {
        set_error("null sim handle");
        return HalStatus::NullPointer;
    };
    if n != sim.model.dof() {
        set_error("buffer length does not match model DOF");
        return HalStatus::DimensionMismatch;
    }
    let (tau_m, tau_ext) = match (read_vec(tau_m, n), read_vec(tau_ext, n)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(code), _) | (_, Err(code)) => return code,
    };
    match fjr::step(&sim.model, &sim.friction, &sim.state, &tau_m, &tau_ext, &sim.cfg) {
        Ok(next) => {
            sim.state = next;
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Copy out the current state; any of the output pointers may be NULL to
/// skip that field.
///
/// # Safety
/// Non-NULL outputs must each point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hal_sim_state(
    sim: *const HalSim,
    q: *mut f64,
    qdot: *mut f64,
    theta: *mut f64,
    thetadot: *mut f64,
    n: usize,
) -> HalStatus {
    let Some(sim) = sim.as_ref() else {
        set_error("null sim handle");
        return HalStatus::NullPointer;
    };
    if n != sim.model.dof() {
        set_error("buffer length does not match model DOF");
        return HalStatus::DimensionMismatch;
    }
    for (dst, src) in [
        (q, &sim.state.q),
        (qdot, &sim.state.qdot),
        (theta, &sim.state.theta),
        (thetadot, &sim.state.thetadot),
    ] {
        if !dst.is_null() {
            ptr::copy_nonoverlapping(src.as_slice().as_ptr(), dst, n);
        }
    }
    HalStatus::Ok
}

/// Simulation time in seconds, or a negative value for a NULL handle.
///
/// # Safety
/// `sim` must be a live sim handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hal_sim_time(sim: *const HalSim) -> f64 {
    sim.as_ref().map_or(-1.0, |s| s.state.time)
}

/// Stored energy (kinetic + elastic + gravitational) referenced to the
/// creation posture, J.
///
/// # Safety
/// `out` must be a valid pointer to one double.
#[no_mangle]
pub unsafe extern "C" fn hal_sim_stored_energy(sim: *const HalSim, out: *mut f64) -> HalStatus {
    let Some(sim) = sim.as_ref() else {
        set_error("null sim handle");
        return HalStatus::NullPointer;
    };
    if out.is_null() {
        set_error("null output pointer");
        return HalStatus::NullPointer;
    }
    match fjr::stored_energy(&sim.model, &sim.state, sim.gravity_reference) {
        Ok(e) => {
            *out = e;
            HalStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin(name: &str) -> *mut HalModel {
        let cname = CString::new(name).unwrap();
        let mut handle: *mut HalModel = ptr::null_mut();
        let status = unsafe { hal_model_builtin(cname.as_ptr(), &mut handle) };
        assert_eq!(status, HalStatus::Ok);
        handle
    }

    #[test]
    fn model_lifecycle_and_fk() {
        let model = builtin("pendulum1");
        unsafe {
            assert_eq!(hal_model_dof(model), 1);
            let q = [0.0];
            let mut pose = [0.0; 7];
            let status = hal_model_forward_kinematics(model, q.as_ptr(), 1, pose.as_mut_ptr());
            assert_eq!(status, HalStatus::Ok);
            assert!((pose[0] - 1.0).abs() < 1e-12);
            assert!((pose[3] - 1.0).abs() < 1e-12); // identity quaternion w
            hal_model_free(model);
        }
    }

    #[test]
    fn dimension_mismatch_reported() {
        let model = builtin("planar2");
        unsafe {
            let q = [0.0; 3];
            let mut pose = [0.0; 7];
            let status = hal_model_forward_kinematics(model, q.as_ptr(), 3, pose.as_mut_ptr());
            assert_eq!(status, HalStatus::DimensionMismatch);
            let msg = CStr::from_ptr(hal_last_error_message());
            assert!(msg.to_str().unwrap().contains("dimension"));
            hal_model_free(model);
        }
    }

    #[test]
    fn null_pointers_rejected() {
        unsafe {
            let mut handle: *mut HalModel = ptr::null_mut();
            assert_eq!(
                hal_model_builtin(ptr::null(), &mut handle),
                HalStatus::NullPointer
            );
            assert_eq!(hal_model_dof(ptr::null()), 0);
        }
    }

    #[test]
    fn unknown_builtin_is_invalid_argument() {
        let cname = CString::new("not_a_model").unwrap();
        let mut handle: *mut HalModel = ptr::null_mut();
        let status = unsafe { hal_model_builtin(cname.as_ptr(), &mut handle) };
        assert_eq!(status, HalStatus::InvalidArgument);
    }

    #[test]
    fn mass_matrix_and_gravity_roundtrip() {
        let model = builtin("planar2");
        unsafe {
            let q = [0.3, -0.8];
            let mut m = [0.0; 4];
            assert_eq!(
                hal_model_mass_matrix(model, q.as_ptr(), 2, m.as_mut_ptr()),
                HalStatus::Ok
            );
            assert!((m[1] - m[2]).abs() < 1e-12, "symmetric");
            let mut g = [0.0; 2];
            assert_eq!(
                hal_model_gravity(model, q.as_ptr(), 2, g.as_mut_ptr()),
                HalStatus::Ok
            );
            // Inverse dynamics at rest equals gravity.
            let zero = [0.0; 2];
            let mut tau = [0.0; 2];
            assert_eq!(
                hal_model_inverse_dynamics(
                    model,
                    q.as_ptr(),
                    zero.as_ptr(),
                    zero.as_ptr(),
                    2,
                    tau.as_mut_ptr()
                ),
                HalStatus::Ok
            );
            assert!((tau[0] - g[0]).abs() < 1e-12);
            assert!((tau[1] - g[1]).abs() < 1e-12);
            hal_model_free(model);
        }
    }

    #[test]
    fn sim_steps_deterministically() {
        let model = builtin("pendulum1");
        unsafe {
            let run = |steps: usize| -> (f64, f64) {
                let mut sim: *mut HalSim = ptr::null_mut();
                let friction = [0.2];
                let viscous = [0.1];
                let q0 = [0.4];
                assert_eq!(
                    hal_sim_create(
                        model,
                        friction.as_ptr(),
                        viscous.as_ptr(),
                        q0.as_ptr(),
                        1,
                        1e-3,
                        1,
                        &mut sim
                    ),
                    HalStatus::Ok
                );
                let tau_m = [0.3];
                let tau_ext = [0.0];
                for _ in 0..steps {
                    assert_eq!(
                        hal_sim_step(sim, tau_m.as_ptr(), tau_ext.as_ptr(), 1),
                        HalStatus::Ok
                    );
                }
                let mut q = [0.0];
                assert_eq!(
                    hal_sim_state(sim, q.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 1),
                    HalStatus::Ok
                );
                let mut e = 0.0;
                assert_eq!(hal_sim_stored_energy(sim, &mut e), HalStatus::Ok);
                let t = hal_sim_time(sim);
                hal_sim_free(sim);
                (q[0], t.max(e * 0.0 + t))
            };
            let (qa, ta) = run(500);
            let (qb, tb) = run(500);
            assert_eq!(qa, qb);
            assert_eq!(ta, tb);
            assert!((ta - 0.5).abs() < 1e-12);
            hal_model_free(model);
        }
    }

    #[test]
    fn version_is_nul_terminated_semver() {
        let v = unsafe { CStr::from_ptr(hal_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn header_is_generated_and_covers_surface() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("include/haptic_arm_lab.h");
        let text = std::fs::read_to_string(header).expect("header generated by build script");
        for symbol in [
            "hal_model_builtin",
            "hal_model_load_json",
            "hal_model_free",
            "hal_model_forward_kinematics",
            "hal_model_jacobian",
            "hal_model_mass_matrix",
            "hal_model_inverse_dynamics",
            "hal_sim_create",
            "hal_sim_step",
            "hal_sim_state",
            "hal_sim_stored_energy",
            "hal_last_error_message",
            "HalStatus",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
