//! Bilateral teleoperation against a virtual wall: scripted
//! approach-press-retract, with the summary reporting maximum contact
//! force, free-space tracking, the feedback/contact balance, and the
//! non-adhesion check.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{CheckResult, RunOutcome, Scenario};
use crate::control::{FrictionEstimator, HapticController};
use crate::fjr::{FjrState, FrictionModel, Integrator, SimConfig};
use crate::rigid_body::RobotModel;
use crate::setup_opt::SetupConfiguration;
use crate::teleop::{
    run_session, CartesianOperator, Keyframe, MasterSpec, SessionConfig, SlaveKind, TeleopConfig,
    Trajectory, VirtualEnvironment, VirtualTool,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeleopWallParams {
    pub coupling: TeleopConfig,
    pub operator: CartesianOperator,
    pub environment: VirtualEnvironment,
    /// Scripted hand trajectory; `None` auto-builds an approach-press-retract
    /// script from the master's start pose toward the wall.
    pub script: Option<Trajectory>,
    /// Initial master joint posture; `None` uses the model mid-posture.
    pub initial_q: Option<Vec<f64>>,
    pub tool: VirtualTool,
    pub duration: f64,
    pub dt: f64,
    /// Plant friction on the master.
    pub coulomb: f64,
    pub viscous: f64,
    pub bimanual: bool,
    /// Sample times for the free-space and press checks, s; `None` derives
    /// them from the auto-script phases (end of approach hold, end of press
    /// hold).
    pub free_space_check_time: Option<f64>,
    pub press_check_time: Option<f64>,
}

impl Default for TeleopWallParams {
    fn default() -> Self {
        TeleopWallParams {
            coupling: TeleopConfig::default(),
            operator: CartesianOperator::default(),
            environment: VirtualEnvironment {
                wall_point: Vector3::new(1.55, 0.6, 0.0),
                wall_normal: Vector3::new(-1.0, 0.0, 0.0),
                stiffness: 800.0,
                damping: 30.0,
            },
            script: None,
            initial_q: None,
            tool: VirtualTool {
                mass: 1.0,
                damping: 8.0,
                initial_position: Vector3::zeros(),
            },
            duration: 12.0,
            dt: 1e-3,
            coulomb: 0.1,
            viscous: 0.05,
            bimanual: false,
            free_space_check_time: None,
            press_check_time: None,
        }
    }
}

impl TeleopWallParams {
    pub fn validate(&self, model: &RobotModel) -> Result<()> {
        self.coupling.validate()?;
        self.environment.validate()?;
        if let Some(q) = &self.initial_q {
            if q.len() != model.dof() {
                return Err(Error::dim("teleop initial_q", model.dof(), q.len()));
            }
        }
        if let Some(s) = &self.script {
            s.validate()?;
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidConfig("duration must be > 0".into()));
        }
        for t in [self.free_space_check_time, self.press_check_time]
            .into_iter()
            .flatten()
        {
            if !(t > 0.0 && t < self.duration) {
                return Err(Error::InvalidConfig(
                    "check times must fall inside the run".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct WallSummary {
    max_contact_force: f64,
    free_space_tracking_err: f64,
    press_contact_force: f64,
    press_feedback_residual: f64,
    non_adhesion: bool,
    channels: usize,
}

pub(super) fn run(
    scenario: &Scenario,
    model: &RobotModel,
    params: &TeleopWallParams,
    out_dir: &Path,
) -> Result<RunOutcome> {
    params.validate(model)?;
    let n = model.dof();
    let q0 = match &params.initial_q {
        Some(q) => DVector::from_row_slice(q),
        None => model.mid_posture(),
    };
    let start = model.forward_kinematics(&q0)?.translation;

    // Auto-script: hold, approach to just outside the wall, press past it,
    // retract to the start. Quarters of the run, each ending in a hold.
    let script = match &params.script {
        Some(s) => s.clone(),
        None => {
            let wall_p = params.environment.wall_point;
            let n_hat = Vector3::from(params.environment.wall_normal).normalize();
            let approach = wall_p + n_hat * 0.03;
            let press = wall_p - n_hat * 0.04;
            let t4 = params.duration / 4.0;
            Trajectory::new(vec![
                Keyframe {
                    t: 0.0,
                    position: [start.x, start.y, start.z],
                },
                Keyframe {
                    t: 0.55 * t4,
                    position: [approach.x, approach.y, approach.z],
                },
                Keyframe {
                    t: 1.0 * t4,
                    position: [approach.x, approach.y, approach.z],
                },
                Keyframe {
                    t: 1.4 * t4,
                    position: [press.x, press.y, press.z],
                },
                Keyframe {
                    t: 2.0 * t4,
                    position: [press.x, press.y, press.z],
                },
                Keyframe {
                    t: 2.5 * t4,
                    position: [approach.x, approach.y, approach.z],
                },
                Keyframe {
                    t: 3.0 * t4,
                    position: [start.x, start.y, start.z],
                },
                Keyframe {
                    t: 4.0 * t4,
                    position: [start.x, start.y, start.z],
                },
            ])?
        }
    };

    let master = MasterSpec {
        model: model.clone(),
        friction: FrictionModel::new(
            DVector::from_element(n, params.coulomb),
            DVector::from_element(n, params.viscous),
            scenario.controller.estimator.deadband,
        )?,
        controller: HapticController::new(
            scenario.controller.reshape_config(model)?,
            FrictionEstimator::new(n, scenario.controller.estimator),
            0.0,
        )?,
        initial: FjrState::at_rest(q0),
        setup: SetupConfiguration::new(Vector3::zeros(), Vector3::zeros(), 0.0)?,
        sim: SimConfig::new(params.dt, Integrator::SemiImplicitEuler)?,
    };
    let mut tool = params.tool;
    if tool.initial_position == Vector3::zeros() {
        tool.initial_position = start;
    }
    let slave = SlaveKind::Virtual { tool };
    let session = SessionConfig {
        coupling: params.coupling,
        duration: params.duration,
        operator: params.operator,
        script,
        environment: Some(params.environment),
        bimanual: params.bimanual,
    };
    let log = run_session(&master, &slave, &session)?;

    let csv_path = out_dir.join("teleop.csv");
    log.write_csv(super::create_file(&csv_path)?)?;

    // Checks on the left channel.
    let rows: Vec<_> = log.channel_rows('L').collect();
    let n_hat = Vector3::from(params.environment.wall_normal).normalize();
    let mut max_contact: f64 = 0.0;
    let mut non_adhesion = true;
    for r in &rows {
        let wall_on_slave = -Vector3::from_column_slice(&r.contact_wrench[0..3]);
        max_contact = max_contact.max(wall_on_slave.norm());
        if wall_on_slave.dot(&n_hat) < -1e-12 {
            non_adhesion = false;
        }
    }
    let at = |t: f64| {
        let idx = ((t / log.dt).round() as usize).min(rows.len() - 1);
        rows[idx]
    };
    // Default check instants: the ends of the approach hold and the press
    // hold of the auto-script.
    let t4 = params.duration / 4.0;
    let free_row = at(params.free_space_check_time.unwrap_or(0.95 * t4));
    let press_row = at(params.press_check_time.unwrap_or(1.95 * t4));
    let press_contact = Vector3::from_column_slice(&press_row.contact_wrench[0..3]);
    let press_fb = Vector3::from_column_slice(&press_row.fb_wrench[0..3]);
    let expected_fb = -press_contact * params.coupling.reflection_scale;
    let press_residual = (press_fb - expected_fb).norm();

    let summary = WallSummary {
        max_contact_force: max_contact,
        free_space_tracking_err: free_row.tracking_err,
        press_contact_force: press_contact.norm(),
        press_feedback_residual: press_residual,
        non_adhesion,
        channels: if params.bimanual { 2 } else { 1 },
    };
    let summary_path = out_dir.join("summary.json");
    super::write_json(&summary_path, &summary)?;

    let checks = vec![
        CheckResult::new(
            "free-space leg: steady tracking error below 1e-3 m",
            free_row.tracking_err < 1e-3,
            format!("err = {:e} m at t = {}", free_row.tracking_err, free_row.t),
        ),
        CheckResult::new(
            "press leg: steady contact developed",
            press_contact.norm() > 0.5,
            format!("|contact| = {} N", press_contact.norm()),
        ),
        CheckResult::new(
            "press leg: feedback equals -scale x contact within 1%",
            press_residual <= 0.01 * press_contact.norm().max(1e-9),
            format!(
                "residual {:e} vs contact {}",
                press_residual,
                press_contact.norm()
            ),
        ),
        CheckResult::new(
            "non-adhesion at every sample",
            non_adhesion,
            format!("max contact {max_contact} N"),
        ),
    ];

    Ok(RunOutcome {
        outputs: vec![csv_path, summary_path],
        checks,
    })
}
