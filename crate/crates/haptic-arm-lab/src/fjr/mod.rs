//! Fixed-step forward simulation of the flexible-joint arm.
//!
//! Motor side: `B θ̈ = τ_m + τ_f(θ̇) - τ_j`, link side:
//! `M(q) q̈ = τ_j + τ_ext - C(q,q̇)q̇ - g(q)`, coupled through the elastic
//! joint torque `τ_j = K (θ - q)`. Friction acts motor-side. The module also
//! carries the exact energy bookkeeping that the friction estimator and the
//! conservation tests are built on.

mod log;

pub use log::{fmt as fmt_float, TrajectoryLog, TrajectorySample};

use nalgebra::DVector;

use crate::rigid_body::RobotModel;
use crate::{Error, Result};

/// Motor- and link-side state of the flexible-joint arm.
#[derive(Debug, Clone, PartialEq)]
pub struct FjrState {
    /// Link positions, rad.
    pub q: DVector<f64>,
    /// Link velocities, rad/s.
    pub qdot: DVector<f64>,
    /// Motor positions, rad.
    pub theta: DVector<f64>,
    /// Motor velocities, rad/s.
    pub thetadot: DVector<f64>,
    /// Simulation time, s.
    pub time: f64,
}

impl FjrState {
    /// At rest with relaxed springs (`θ = q`).
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        FjrState {
            theta: q.clone(),
            q,
            qdot: DVector::zeros(n),
            thetadot: DVector::zeros(n),
            time: 0.0,
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, v) in [
            ("q", &self.q),
            ("qdot", &self.qdot),
            ("theta", &self.theta),
            ("thetadot", &self.thetadot),
        ] {
            if v.len() != n {
                return Err(Error::dim("FjrState", n, v.len()));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteState {
                    time: self.time,
                    detail: format!("{name} has non-finite entries"),
                });
            }
        }
        Ok(())
    }
}

/// Per-joint Coulomb + viscous friction with a continuous regularization of
/// the Coulomb discontinuity: `τ_f = -(f_c · sat(θ̇/ε_v) + f_v · θ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionModel {
    coulomb: DVector<f64>,
    viscous: DVector<f64>,
    deadband: f64,
}

/// Default Coulomb regularization deadband, rad/s.
pub const DEFAULT_DEADBAND: f64 = 1e-3;

impl FrictionModel {
    pub fn new(coulomb: DVector<f64>, viscous: DVector<f64>, deadband: f64) -> Result<Self> {
        if coulomb.len() != viscous.len() {
            return Err(Error::dim("FrictionModel", coulomb.len(), viscous.len()));
        }
        if coulomb.iter().any(|c| *c < 0.0) || viscous.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidModel(
                "friction coefficients must be non-negative".into(),
            ));
        }
        if !(deadband > 0.0) {
            return Err(Error::InvalidModel("deadband must be > 0".into()));
        }
        Ok(FrictionModel {
            coulomb,
            viscous,
            deadband,
        })
    }

    pub fn zero(n: usize) -> Self {
        FrictionModel {
            coulomb: DVector::zeros(n),
            viscous: DVector::zeros(n),
            deadband: DEFAULT_DEADBAND,
        }
    }

    /// Uniform coefficients across all joints.
    pub fn uniform(n: usize, coulomb: f64, viscous: f64) -> Result<Self> {
        FrictionModel::new(
            DVector::from_element(n, coulomb),
            DVector::from_element(n, viscous),
            DEFAULT_DEADBAND,
        )
    }

    pub fn coulomb(&self) -> &DVector<f64> {
        &self.coulomb
    }

    pub fn viscous(&self) -> &DVector<f64> {
        &self.viscous
    }

    pub fn deadband(&self) -> f64 {
        self.deadband
    }

    /// Friction torque at the given motor velocities (dissipative sign).
    pub fn torque(&self, thetadot: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.coulomb.len(), |i, _| {
            let s = saturate(thetadot[i] / self.deadband);
            -(self.coulomb[i] * s + self.viscous[i] * thetadot[i])
        })
    }
}

fn saturate(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Fixed-step integrator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    SemiImplicitEuler,
    Rk4,
}

/// Simulation step configuration. `dt` must lie in (0, 1e-2].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub integrator: Integrator,
}

impl SimConfig {
    pub fn new(dt: f64, integrator: Integrator) -> Result<Self> {
        if !(dt > 0.0 && dt <= 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "dt must be in (0, 1e-2], got {dt}"
            )));
        }
        Ok(SimConfig { dt, integrator })
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            integrator: Integrator::SemiImplicitEuler,
        }
    }
}

/// Elastic joint torque `τ_j = K (θ - q)`.
pub fn joint_torque(model: &RobotModel, state: &FjrState) -> Result<DVector<f64>> {
    state.validate(model.dof())?;
    let k = model.stiffness_vector();
    Ok(k.component_mul(&(&state.theta - &state.q)))
}

/// Motor and link accelerations for the current state and inputs.
fn accelerations(
    model: &RobotModel,
    friction: &FrictionModel,
    state: &FjrState,
    tau_m: &DVector<f64>,
    tau_ext: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let tau_j = model
        .stiffness_vector()
        .component_mul(&(&state.theta - &state.q));
    let tau_f = friction.torque(&state.thetadot);
    let b = model.motor_inertia_vector();
    let thetaddot = (tau_m + &tau_f - &tau_j).component_div(&b);

    let m = model.mass_matrix(&state.q)?;
    let rhs = &tau_j + tau_ext - model.bias_forces(&state.q, &state.qdot)?;
    let chol = m.cholesky().ok_or_else(|| Error::SolverFailure {
        time: state.time,
        detail: "mass matrix not positive definite".into(),
    })?;
    let qddot = chol.solve(&rhs);
    Ok((qddot, thetaddot))
}

/// Advance one fixed step. Deterministic for identical inputs; inputs are
/// held constant over the step (zero-order hold).
pub fn step(
    model: &RobotModel,
    friction: &FrictionModel,
    state: &FjrState,
    tau_m: &DVector<f64>,
    tau_ext: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<FjrState> {
    let n = model.dof();
    state.validate(n)?;
    model.check_dim("step tau_m", tau_m.len())?;
    model.check_dim("step tau_ext", tau_ext.len())?;

    let dt = cfg.dt;
    let next = match cfg.integrator {
        Integrator::SemiImplicitEuler => {
            let (qddot, thetaddot) = accelerations(model, friction, state, tau_m, tau_ext)?;
            let qdot = &state.qdot + &qddot * dt;
            let thetadot = &state.thetadot + &thetaddot * dt;
            FjrState {
                q: &state.q + &qdot * dt,
                theta: &state.theta + &thetadot * dt,
                qdot,
                thetadot,
                time: state.time + dt,
            }
        }
        Integrator::Rk4 => {
            let deriv = |s: &FjrState| -> Result<[DVector<f64>; 4]> {
                let (qddot, thetaddot) = accelerations(model, friction, s, tau_m, tau_ext)?;
                Ok([s.qdot.clone(), qddot, s.thetadot.clone(), thetaddot])
            };
            let advance = |s: &FjrState, k: &[DVector<f64>; 4], h: f64| FjrState {
                q: &s.q + &k[0] * h,
                qdot: &s.qdot + &k[1] * h,
                theta: &s.theta + &k[2] * h,
                thetadot: &s.thetadot + &k[3] * h,
                time: s.time + h,
            };
            let k1 = deriv(state)?;
            let k2 = deriv(&advance(state, &k1, 0.5 * dt))?;
            let k3 = deriv(&advance(state, &k2, 0.5 * dt))?;
            let k4 = deriv(&advance(state, &k3, dt))?;
            let combine = |i: usize| -> DVector<f64> {
                (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) * (dt / 6.0)
            };
            FjrState {
                q: &state.q + combine(0),
                qdot: &state.qdot + combine(1),
                theta: &state.theta + combine(2),
                thetadot: &state.thetadot + combine(3),
                time: state.time + dt,
            }
        }
    };
    next.validate(n).map_err(|_| Error::NonFiniteState {
        time: state.time + dt,
        detail: "integration diverged".into(),
    })?;
    Ok(next)
}

/// Total stored energy: link kinetic + motor kinetic + spring elastic +
/// gravitational potential referenced to `u_ref` (J).
pub fn stored_energy(model: &RobotModel, state: &FjrState, u_ref: f64) -> Result<f64> {
    state.validate(model.dof())?;
    let m = model.mass_matrix(&state.q)?;
    let link_ke = 0.5 * state.qdot.dot(&(&m * &state.qdot));
    let motor_ke = 0.5
        * state
            .thetadot
            .component_mul(&state.thetadot)
            .dot(&model.motor_inertia_vector());
    let defl = &state.theta - &state.q;
    let spring = 0.5 * defl.component_mul(&defl).dot(&model.stiffness_vector());
    let potential = model.gravity_potential(&state.q)? - u_ref;
    Ok(link_ke + motor_ke + spring + potential)
}

/// Signals made available to the controller each sample: what a
/// torque-sensing flexible-joint arm can actually measure.
#[derive(Debug, Clone)]
pub struct ControlSignals {
    pub time: f64,
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub theta: DVector<f64>,
    pub thetadot: DVector<f64>,
    /// Elastic joint torque.
    pub tau_j: DVector<f64>,
    /// Analytic joint-torque rate `K (θ̇ - q̇)`.
    pub tau_j_dot: DVector<f64>,
    /// Stored energy referenced to the run's start posture.
    pub e_stored: f64,
}

/// Step the simulation for `duration`, invoking `controller` at every sample
/// and `tau_ext` for the external link torque, recording the full time
/// series. The controller is also invoked once at the final sample so the
/// log has a torque column for every row.
pub fn run<C, E>(
    model: &RobotModel,
    friction: &FrictionModel,
    initial: &FjrState,
    mut controller: C,
    mut tau_ext: E,
    duration: f64,
    cfg: &SimConfig,
) -> Result<TrajectoryLog>
where
    C: FnMut(&ControlSignals) -> DVector<f64>,
    E: FnMut(f64, &FjrState) -> DVector<f64>,
{
    if !(duration > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "duration must be > 0, got {duration}"
        )));
    }
    let n = model.dof();
    initial.validate(n)?;
    let steps = (duration / cfg.dt).round() as usize;
    let u_ref = model.gravity_potential(&initial.q)?;

    let mut state = initial.clone();
    let mut e_in = 0.0;
    let mut e_diss = 0.0;
    let mut log = TrajectoryLog::new(n, u_ref);

    for k in 0..=steps {
        let tau_j = model
            .stiffness_vector()
            .component_mul(&(&state.theta - &state.q));
        let e_stored = stored_energy(model, &state, u_ref)?;
        let signals = ControlSignals {
            time: state.time,
            q: state.q.clone(),
            qdot: state.qdot.clone(),
            theta: state.theta.clone(),
            thetadot: state.thetadot.clone(),
            tau_j: tau_j.clone(),
            tau_j_dot: model
                .stiffness_vector()
                .component_mul(&(&state.thetadot - &state.qdot)),
            e_stored,
        };
        let tau_m = controller(&signals);
        let ext = tau_ext(state.time, &state);
        model.check_dim("run tau_m", tau_m.len())?;
        model.check_dim("run tau_ext", ext.len())?;

        log.push(TrajectorySample {
            t: state.time,
            q: state.q.clone(),
            qdot: state.qdot.clone(),
            theta: state.theta.clone(),
            thetadot: state.thetadot.clone(),
            tau_m: tau_m.clone(),
            tau_j,
            tau_ext: ext.clone(),
            e_stored,
            e_in,
            e_diss,
        });

        if k < steps {
            let next = step(model, friction, &state, &tau_m, &ext, cfg).map_err(|e| match e {
                Error::SolverFailure { detail, .. } => Error::SolverFailure {
                    time: state.time,
                    detail,
                },
                other => other,
            })?;
            // Trapezoidal work integrals with the inputs held over the step.
            let mid_thetadot = (&state.thetadot + &next.thetadot) * 0.5;
            let mid_qdot = (&state.qdot + &next.qdot) * 0.5;
            e_in += (tau_m.dot(&mid_thetadot) + ext.dot(&mid_qdot)) * cfg.dt;
            e_diss -= friction.torque(&mid_thetadot).dot(&mid_thetadot) * cfg.dt;
            state = next;
        }
    }
    Ok(log)
}
