//! Friction-estimate trajectories across repeated zero-stored-energy
//! events, driven by a motor-side position servo through move-and-dwell
//! cycles of alternating speed. Supports a mid-run step of the true
//! coefficients to exercise time-varying friction.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{CheckResult, ControllerBlock, RunOutcome, Scenario};
use crate::control::FrictionEstimator;
use crate::fjr::{self, FjrState, FrictionModel, SimConfig};
use crate::rigid_body::RobotModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConvergenceParams {
    pub coulomb: f64,
    pub viscous: f64,
    /// Move-and-dwell cycles before any coefficient step.
    pub cycles: usize,
    /// Alternating dwell-to-dwell speeds, rad/s.
    pub speeds: Vec<f64>,
    /// Motor servo gains (stiffness N·m/rad, damping N·m·s/rad).
    pub servo_stiffness: f64,
    pub servo_damping: f64,
    pub dt: f64,
    /// Optional mid-run coefficient step: both true coefficients are
    /// multiplied by `factor` after `cycles`, then `cycles` more run.
    pub step_factor: Option<f64>,
}

impl Default for EstimatorConvergenceParams {
    fn default() -> Self {
        EstimatorConvergenceParams {
            coulomb: 0.5,
            viscous: 0.2,
            cycles: 12,
            speeds: vec![0.5, 1.2],
            servo_stiffness: 120.0,
            servo_damping: 8.0,
            dt: 1e-3,
            step_factor: None,
        }
    }
}

impl EstimatorConvergenceParams {
    pub fn validate(&self, model: &RobotModel) -> Result<()> {
        if model.dof() != 1 {
            return Err(Error::InvalidConfig(
                "estimator-convergence needs a single-joint model".into(),
            ));
        }
        let g = model.gravity_vector(&DVector::zeros(1))?;
        if g.amax() > 1e-9 {
            return Err(Error::InvalidConfig(
                "estimator-convergence expects a gravity-free joint; set \
                 \"gravity_override\": [0,0,0]"
                    .into(),
            ));
        }
        if self.cycles == 0 || self.speeds.is_empty() {
            return Err(Error::InvalidConfig("need cycles and speeds".into()));
        }
        if !(self.servo_stiffness > 0.0 && self.servo_damping > 0.0) {
            return Err(Error::InvalidConfig("servo gains must be > 0".into()));
        }
        if let Some(f) = self.step_factor {
            if !(f > 0.0) {
                return Err(Error::InvalidConfig("step factor must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Seconds per move-and-dwell cycle: 2 s of motion, 2 s of dwell.
const CYCLE_SECONDS: f64 = 4.0;

/// The dwell-profile target position at time `t`, alternating direction
/// every second cycle and cycling the speed list.
fn profile(t: f64, speeds: &[f64]) -> f64 {
    let k = (t / CYCLE_SECONDS) as usize;
    let tc = t - k as f64 * CYCLE_SECONDS;
    let v = speeds[k % speeds.len()];
    let dir = if k % 4 < 2 { 1.0 } else { -1.0 };
    let move_t = 2.0;
    if tc < move_t {
        dir * v * tc
    } else {
        dir * v * move_t
    }
}

/// Drive one flexible joint through `cycles` move-and-dwell cycles with a
/// motor position servo while the estimator watches (model-free: input
/// torque, motor velocity, stored energy only). Used both here and as the
/// friction-sweep pre-phase. The estimator state carries across calls.
#[allow(clippy::too_many_arguments)]
pub(super) fn excite_into(
    model: &RobotModel,
    friction: &FrictionModel,
    estimator: &mut FrictionEstimator,
    params_servo: (f64, f64),
    cycles: usize,
    speeds: &[f64],
    sim: &SimConfig,
    initial: &FjrState,
) -> Result<FjrState> {
    let (ks, kd) = params_servo;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut final_state = initial.clone();
    {
        let log = fjr::run(
            model,
            friction,
            initial,
            |s| {
                if let Some((tau_prev, td_prev)) = prev.take() {
                    let mid = (&td_prev + &s.thetadot) * 0.5;
                    estimator
                        .update(&tau_prev, &mid, s.e_stored, sim.dt)
                        .expect("estimator dims");
                }
                let target = profile(s.time, speeds);
                let tau = DVector::from_element(
                    1,
                    ks * (target - s.theta[0]) - kd * s.thetadot[0],
                );
                prev = Some((tau.clone(), s.thetadot.clone()));
                tau
            },
            |_, _| DVector::zeros(1),
            cycles as f64 * CYCLE_SECONDS,
            sim,
        )?;
        let last = log.samples.last().unwrap();
        final_state.q = last.q.clone();
        final_state.qdot = last.qdot.clone();
        final_state.theta = last.theta.clone();
        final_state.thetadot = last.thetadot.clone();
        final_state.time = last.t;
    }
    Ok(final_state)
}

/// Convenience wrapper: fresh estimator, rest start.
pub(super) fn excite(
    model: &RobotModel,
    friction: &FrictionModel,
    controller: &ControllerBlock,
    cycles: usize,
    speeds: &[f64],
    sim: &SimConfig,
) -> Result<FrictionEstimator> {
    let mut est = FrictionEstimator::new(model.dof(), controller.estimator);
    excite_into(
        model,
        friction,
        &mut est,
        (120.0, 8.0),
        cycles,
        speeds,
        sim,
        &FjrState::at_rest(DVector::zeros(model.dof())),
    )?;
    Ok(est)
}

#[derive(Debug, Serialize)]
struct ConvergenceSummary {
    events_phase1: usize,
    events_phase2: usize,
    final_coulomb: f64,
    final_viscous: f64,
    true_coulomb_phase2: f64,
    true_viscous_phase2: f64,
}

pub(super) fn run(
    scenario: &Scenario,
    model: &RobotModel,
    params: &EstimatorConvergenceParams,
    out_dir: &Path,
) -> Result<RunOutcome> {
    params.validate(model)?;
    let sim = SimConfig::new(params.dt, crate::fjr::Integrator::Rk4)?;
    let mut estimator = FrictionEstimator::new(1, scenario.controller.estimator);
    let servo = (params.servo_stiffness, params.servo_damping);

    let friction1 = FrictionModel::new(
        DVector::from_element(1, params.coulomb),
        DVector::from_element(1, params.viscous),
        scenario.controller.estimator.deadband,
    )?;
    let state = excite_into(
        model,
        &friction1,
        &mut estimator,
        servo,
        params.cycles,
        &params.speeds,
        &sim,
        &FjrState::at_rest(DVector::zeros(1)),
    )?;
    let events_phase1 = estimator.events().len();

    let mut true_c2 = params.coulomb;
    let mut true_v2 = params.viscous;
    let mut events_phase2 = 0;
    if let Some(factor) = params.step_factor {
        true_c2 = params.coulomb * factor;
        true_v2 = params.viscous * factor;
        let friction2 = FrictionModel::new(
            DVector::from_element(1, true_c2),
            DVector::from_element(1, true_v2),
            scenario.controller.estimator.deadband,
        )?;
        // Continue from rest where phase 1 ended; the servo profile restarts.
        let mut resumed = FjrState::at_rest(state.q.clone());
        resumed.theta = state.theta.clone();
        excite_into(
            model,
            &friction2,
            &mut estimator,
            servo,
            params.cycles,
            &params.speeds,
            &sim,
            &resumed,
        )?;
        events_phase2 = estimator.events().len() - events_phase1;
    }

    // Estimate trajectory CSV: one row per zero-energy event.
    let csv_path = out_dir.join("estimates.csv");
    {
        let mut w = csv::Writer::from_writer(super::create_file(&csv_path)?);
        w.write_record([
            "event_index",
            "time",
            "coulomb_hat",
            "viscous_hat",
            "true_coulomb",
            "true_viscous",
        ])?;
        for (i, ev) in estimator.events().iter().enumerate() {
            let (tc, tv) = if i < events_phase1 {
                (params.coulomb, params.viscous)
            } else {
                (true_c2, true_v2)
            };
            w.write_record([
                i.to_string(),
                fjr::fmt_float(ev.time),
                fjr::fmt_float(ev.coulomb[0]),
                fjr::fmt_float(ev.viscous[0]),
                fjr::fmt_float(tc),
                fjr::fmt_float(tv),
            ])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: csv_path.display().to_string(),
            source,
        })?;
    }

    let (c_hat, v_hat) = estimator.estimates();
    let summary = ConvergenceSummary {
        events_phase1,
        events_phase2,
        final_coulomb: c_hat[0],
        final_viscous: v_hat[0],
        true_coulomb_phase2: true_c2,
        true_viscous_phase2: true_v2,
    };
    let summary_path = out_dir.join("summary.json");
    super::write_json(&summary_path, &summary)?;

    let mut checks = Vec::new();
    let zero_truth = true_c2 == 0.0 && true_v2 == 0.0;
    if zero_truth {
        checks.push(CheckResult::new(
            "zero friction: estimates below 1e-3 N·m",
            c_hat[0] <= 1e-3 && v_hat[0] <= 1e-3,
            format!("f̂_c = {:e}, f̂_v = {:e}", c_hat[0], v_hat[0]),
        ));
    } else {
        let rel_c = (c_hat[0] - true_c2).abs() / true_c2.max(1e-12);
        let rel_v = (v_hat[0] - true_v2).abs() / true_v2.max(1e-12);
        let enough_events = if params.step_factor.is_some() {
            events_phase2 >= 10
        } else {
            events_phase1 >= 10
        };
        checks.push(CheckResult::new(
            "excitation: at least 10 zero-energy events in the judged phase",
            enough_events,
            format!("phase1 = {events_phase1}, phase2 = {events_phase2}"),
        ));
        checks.push(CheckResult::new(
            "convergence: estimates within 5% of the (current) truth",
            rel_c <= 0.05 && rel_v <= 0.05,
            format!("rel errors: coulomb {rel_c:.4}, viscous {rel_v:.4}"),
        ));
    }

    Ok(RunOutcome {
        outputs: vec![csv_path, summary_path],
        checks,
    })
}
