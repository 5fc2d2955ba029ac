//! Apparent-inertia identification: apply a torque step in the inner input
//! `u` through the reshaping feedback and regress the motor inertia from
//! the θ̈ response. Under ratio `r` the identified inertia must be `B/r`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{CheckResult, RunOutcome, Scenario};
use crate::control::{inertia_reshape, ReshapeConfig};
use crate::fjr::{self, FjrState, FrictionModel, Integrator, SimConfig};
use crate::rigid_body::RobotModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReshapeStepParams {
    /// Ratios to identify at.
    pub ratios: Vec<f64>,
    /// Step amplitude of the inner input u, N·m.
    pub step_torque: f64,
    pub duration: f64,
    /// Regression window start (skip the very first samples where the
    /// central difference straddles the step onset).
    pub window_start: f64,
    pub dt: f64,
    /// Plant friction during identification (default none: friction is a
    /// separately identified effect).
    pub coulomb: f64,
    pub viscous: f64,
    /// Also write the full trajectory log of each step response.
    pub dump_trajectories: bool,
}

impl Default for ReshapeStepParams {
    fn default() -> Self {
        ReshapeStepParams {
            ratios: vec![1.0, 2.0, 3.0, 4.0],
            step_torque: 0.5,
            duration: 1.0,
            window_start: 0.01,
            dt: 2.5e-4,
            coulomb: 0.0,
            viscous: 0.0,
            dump_trajectories: false,
        }
    }
}

impl ReshapeStepParams {
    pub fn validate(&self, model: &RobotModel) -> Result<()> {
        if model.dof() != 1 {
            return Err(Error::InvalidConfig(
                "reshape-step needs a single-joint model".into(),
            ));
        }
        let g = model.gravity_vector(&DVector::zeros(1))?;
        if g.amax() > 1e-9 {
            return Err(Error::InvalidConfig(
                "reshape-step expects a gravity-free joint; set \"gravity_override\": [0,0,0]"
                    .into(),
            ));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| *r < 1.0) {
            return Err(Error::InvalidConfig("ratios must satisfy r >= 1".into()));
        }
        if !(self.step_torque != 0.0 && self.duration > 2.0 * self.window_start) {
            return Err(Error::InvalidConfig("degenerate step parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct RatioReport {
    ratio: f64,
    motor_inertia: f64,
    identified_inertia: f64,
    expected_inertia: f64,
    relative_error: f64,
}

#[derive(Debug, Serialize)]
struct StepReport {
    step_torque: f64,
    results: Vec<RatioReport>,
}

pub(super) fn run(
    scenario: &Scenario,
    model: &RobotModel,
    params: &ReshapeStepParams,
    out_dir: &Path,
) -> Result<RunOutcome> {
    params.validate(model)?;
    let friction = FrictionModel::new(
        DVector::from_element(1, params.coulomb),
        DVector::from_element(1, params.viscous),
        scenario.controller.estimator.deadband,
    )?;
    let sim = SimConfig::new(params.dt, Integrator::Rk4)?;
    let b = model.joints[0].motor_inertia;

    let mut results = Vec::new();
    let mut checks = Vec::new();
    let mut extra_outputs = Vec::new();
    for &ratio in &params.ratios {
        let reshape = ReshapeConfig::uniform(1, ratio)?;
        let u = DVector::from_element(1, params.step_torque);
        let log = fjr::run(
            model,
            &friction,
            &FjrState::at_rest(DVector::zeros(1)),
            |s| inertia_reshape(&reshape, &s.tau_j, &u).expect("1-dof reshape"),
            |_, _| DVector::zeros(1),
            params.duration,
            &sim,
        )?;
        if params.dump_trajectories {
            let path = out_dir.join(format!("trajectory_r{ratio}.csv"));
            log.write_csv(super::create_file(&path)?)?;
            extra_outputs.push(path);
        }
        let identified = regress_inertia(&log, params)?;
        let expected = b / ratio;
        let rel = (identified - expected).abs() / expected;
        results.push(RatioReport {
            ratio,
            motor_inertia: b,
            identified_inertia: identified,
            expected_inertia: expected,
            relative_error: rel,
        });
        checks.push(CheckResult::new(
            format!("r={ratio}: identified apparent inertia within 2% of B/r"),
            rel <= 0.02,
            format!("identified {identified:.6}, expected {expected:.6}, rel {rel:.4}"),
        ));
    }

    let report_path = out_dir.join("report.json");
    super::write_json(
        &report_path,
        &StepReport {
            step_torque: params.step_torque,
            results,
        },
    )?;

    let mut outputs = vec![report_path];
    outputs.extend(extra_outputs);
    Ok(RunOutcome { outputs, checks })
}

/// Least-squares fit of `B̂_θ` in `B̂_θ θ̈ = u - τ_j + (B_θ/B) τ_f`, with θ̈
/// from central differences of the logged motor velocity. With the default
/// zero plant friction the friction term vanishes and the regression is the
/// clean inertia fit; the fit minimizes Σ(lhs - B̂ θ̈)² over the window.
fn regress_inertia(log: &fjr::TrajectoryLog, params: &ReshapeStepParams) -> Result<f64> {
    let dt = params.dt;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 1..log.samples.len() - 1 {
        let s = &log.samples[k];
        if s.t < params.window_start {
            continue;
        }
        let thetaddot =
            (log.samples[k + 1].thetadot[0] - log.samples[k - 1].thetadot[0]) / (2.0 * dt);
        let rhs = params.step_torque - s.tau_j[0];
        num += rhs * thetaddot;
        den += thetaddot * thetaddot;
    }
    if den <= 0.0 {
        return Err(Error::InvalidConfig(
            "no acceleration response to regress on".into(),
        ));
    }
    Ok(num / den)
}
