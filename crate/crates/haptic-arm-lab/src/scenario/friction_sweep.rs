//! Velocity vs. interaction-torque sweep over the four compensation modes:
//! none, reshaping-only, friction-compensation-only, combined. The
//! "operator" is a stiff position-ramp servo on the link; its output torque
//! is the measured interaction torque.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{CheckResult, RunOutcome, Scenario};
use crate::control::{FrictionEstimator, HapticController, ReshapeConfig};
use crate::fjr::{self, FjrState, FrictionModel, Integrator, SimConfig};
use crate::rigid_body::{Frame, RobotModel, Wrench};
use crate::{Error, Result};

/// Joint-space operator servo: stiffness (N·m/rad) and damping (N·m·s/rad)
/// of the simulated hand tracking a position ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorServo {
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for OperatorServo {
    fn default() -> Self {
        OperatorServo {
            stiffness: 50.0,
            damping: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrictionSweepParams {
    /// Probe velocities, rad/s.
    pub velocities: Vec<f64>,
    /// True plant friction (Coulomb, viscous).
    pub coulomb: f64,
    pub viscous: f64,
    pub servo: OperatorServo,
    /// Per-probe duration, s; the final measure window is 1 s and the first
    /// 2 s are always discarded.
    pub probe_duration: f64,
    pub dt: f64,
    /// Learn friction estimates in a motor-driven excitation pre-phase
    /// before the probes (model-free); false leaves the estimator at zero.
    pub learn_estimates: bool,
    /// Excitation cycles for the pre-phase.
    pub learn_cycles: usize,
}

impl Default for FrictionSweepParams {
    fn default() -> Self {
        FrictionSweepParams {
            velocities: (1..=10).map(|k| k as f64 * 0.1).collect(),
            coulomb: 0.5,
            viscous: 0.2,
            servo: OperatorServo::default(),
            probe_duration: 6.0,
            dt: 1e-3,
            learn_estimates: true,
            learn_cycles: 12,
        }
    }
}

impl FrictionSweepParams {
    pub fn validate(&self, model: &RobotModel) -> Result<()> {
        if model.dof() != 1 {
            return Err(Error::InvalidConfig(format!(
                "friction-sweep needs a single-joint model, got {} joints",
                model.dof()
            )));
        }
        let g = model.gravity_vector(&DVector::zeros(1))?;
        if g.amax() > 1e-9 {
            return Err(Error::InvalidConfig(
                "friction-sweep expects a gravity-free joint; set \"gravity_override\": [0,0,0] \
                 (the choice is recorded in the run metadata)"
                    .into(),
            ));
        }
        if self.velocities.is_empty() || self.velocities.iter().any(|v| *v <= 0.0) {
            return Err(Error::InvalidConfig(
                "probe velocities must be positive".into(),
            ));
        }
        if !(self.probe_duration > 3.0) {
            return Err(Error::InvalidConfig(
                "probe duration must exceed the 2 s transient + 1 s window".into(),
            ));
        }
        if self.coulomb < 0.0 || self.viscous < 0.0 {
            return Err(Error::InvalidConfig("friction must be non-negative".into()));
        }
        Ok(())
    }
}

const MODES: [&str; 4] = ["none", "reshape_only", "friction_comp_only", "combined"];

#[derive(Debug, Serialize)]
struct SweepSummary {
    estimates_coulomb: f64,
    estimates_viscous: f64,
    reshaping_ratio: f64,
    settled: Vec<SettleRow>,
    ordering_pass: bool,
    ratio_pass: bool,
}

#[derive(Debug, Serialize)]
struct SettleRow {
    velocity: f64,
    mode: String,
    settled: bool,
    torque_variance: f64,
}

pub(super) fn run(
    scenario: &Scenario,
    model: &RobotModel,
    params: &FrictionSweepParams,
    out_dir: &Path,
) -> Result<RunOutcome> {
    params.validate(model)?;
    let friction = FrictionModel::new(
        DVector::from_element(1, params.coulomb),
        DVector::from_element(1, params.viscous),
        scenario.controller.estimator.deadband,
    )?;
    let sim = SimConfig::new(params.dt, Integrator::Rk4)?;
    let reshape = scenario.controller.reshape_config(model)?;
    let ratio = reshape.ratios()[0];

    // Model-free estimation pre-phase (motor-driven, no operator).
    let estimator = if params.learn_estimates {
        super::estimator_convergence::excite(
            model,
            &friction,
            &scenario.controller,
            params.learn_cycles,
            &[0.5, 1.2],
            &sim,
        )?
    } else {
        FrictionEstimator::new(1, scenario.controller.estimator)
    };
    let (est_c, est_v) = {
        let (c, v) = estimator.estimates();
        (c[0], v[0])
    };

    let mut torque = vec![vec![0.0; MODES.len()]; params.velocities.len()];
    let mut settled_rows = Vec::new();

    for (vi, &velocity) in params.velocities.iter().enumerate() {
        for (mi, mode) in MODES.iter().enumerate() {
            let controller = controller_for(mode, &reshape, &estimator, scenario)?;
            let (mean, variance) =
                probe(model, &friction, controller.as_ref(), velocity, params, &sim)?;
            torque[vi][mi] = mean;
            settled_rows.push(SettleRow {
                velocity,
                mode: mode.to_string(),
                settled: variance < 1e-8,
                torque_variance: variance,
            });
        }
    }

    // The four-curve table.
    let csv_path = out_dir.join("sweep.csv");
    {
        let mut w = csv::Writer::from_writer(super::create_file(&csv_path)?);
        let mut header = vec!["velocity".to_string()];
        header.extend(MODES.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for (vi, &velocity) in params.velocities.iter().enumerate() {
            let mut row = vec![fjr::fmt_float(velocity)];
            row.extend(torque[vi].iter().map(|t| fjr::fmt_float(*t)));
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: csv_path.display().to_string(),
            source,
        })?;
    }

    // Ordering contract: combined ≤ each single method ≤ none, at 1e-6
    // resolution, at every probe velocity.
    let eps = 1e-6;
    let mut ordering_pass = true;
    let mut ordering_details = Vec::new();
    for (vi, &velocity) in params.velocities.iter().enumerate() {
        let [none, reshape_only, comp_only, combined] =
            [torque[vi][0], torque[vi][1], torque[vi][2], torque[vi][3]];
        let ok = combined <= reshape_only + eps
            && combined <= comp_only + eps
            && reshape_only <= none + eps
            && comp_only <= none + eps;
        if !ok {
            ordering_pass = false;
            ordering_details.push(format!(
                "v={velocity}: none={none} reshape={reshape_only} comp={comp_only} combined={combined}"
            ));
        }
    }

    // Friction reflection scaling: reshaping divides the friction-born
    // interaction torque by the ratio, within 5%, at every velocity.
    let mut ratio_pass = true;
    let mut ratio_details = Vec::new();
    if params.coulomb > 0.0 || params.viscous > 0.0 {
        for (vi, &velocity) in params.velocities.iter().enumerate() {
            let expected = torque[vi][0] / ratio;
            let got = torque[vi][1];
            if (got - expected).abs() > 0.05 * expected.abs() {
                ratio_pass = false;
                ratio_details.push(format!(
                    "v={velocity}: reshape-only {got} vs none/r {expected}"
                ));
            }
        }
    }

    let summary = SweepSummary {
        estimates_coulomb: est_c,
        estimates_viscous: est_v,
        reshaping_ratio: ratio,
        settled: settled_rows,
        ordering_pass,
        ratio_pass,
    };
    let summary_path = out_dir.join("summary.json");
    super::write_json(&summary_path, &summary)?;

    let mut checks = vec![
        CheckResult::new(
            "ordering: combined <= single methods <= none at every velocity",
            ordering_pass,
            if ordering_pass {
                "holds at 1e-6 N·m resolution".to_string()
            } else {
                ordering_details.join("; ")
            },
        ),
        CheckResult::new(
            "reflection scaling: reshaping divides friction torque by r within 5%",
            ratio_pass,
            if ratio_pass {
                format!("r = {ratio}")
            } else {
                ratio_details.join("; ")
            },
        ),
    ];
    if params.coulomb == 0.0 && params.viscous == 0.0 {
        let worst = torque
            .iter()
            .map(|row| row[0].abs())
            .fold(0.0_f64, f64::max);
        checks.push(CheckResult::new(
            "zero friction: interaction torque below 1e-6 N·m",
            worst < 1e-6,
            format!("max |torque| = {worst:e}"),
        ));
    }

    Ok(RunOutcome {
        outputs: vec![csv_path, summary_path],
        checks,
    })
}

fn controller_for(
    mode: &str,
    reshape: &ReshapeConfig,
    estimator: &FrictionEstimator,
    scenario: &Scenario,
) -> Result<Option<HapticController>> {
    let gamma = scenario.controller.gamma;
    Ok(match mode {
        "none" => None,
        "reshape_only" => Some(HapticController::new(
            reshape.clone(),
            FrictionEstimator::new(1, scenario.controller.estimator),
            0.0,
        )?),
        "friction_comp_only" => Some(HapticController::new(
            ReshapeConfig::identity(1),
            estimator.clone(),
            gamma,
        )?),
        "combined" => Some(HapticController::new(
            reshape.clone(),
            estimator.clone(),
            gamma,
        )?),
        other => return Err(Error::InvalidConfig(format!("unknown mode {other}"))),
    })
}

/// One constant-velocity probe. The state starts already moving at the probe
/// velocity so the friction-free case has no transient at all; the servo
/// reference is the matching position ramp. Returns (mean, variance) of the
/// servo torque over the final 1 s window.
fn probe(
    model: &RobotModel,
    friction: &FrictionModel,
    controller: Option<&HapticController>,
    velocity: f64,
    params: &FrictionSweepParams,
    sim: &SimConfig,
) -> Result<(f64, f64)> {
    let mut initial = FjrState::at_rest(DVector::zeros(1));
    initial.qdot[0] = velocity;
    initial.thetadot[0] = velocity;
    let servo = params.servo;
    let zero_wrench = Wrench::zero(Frame::Base);

    let log = fjr::run(
        model,
        friction,
        &initial,
        |signals| match controller {
            None => DVector::zeros(1),
            Some(c) => c
                .command(model, signals, &zero_wrench)
                .expect("1-dof command")
                .tau_m,
        },
        |t, state| {
            let reference = velocity * t;
            DVector::from_element(
                1,
                servo.stiffness * (reference - state.q[0])
                    + servo.damping * (velocity - state.qdot[0]),
            )
        },
        params.probe_duration,
        sim,
    )?;

    let window_start = params.probe_duration - 1.0;
    let samples: Vec<f64> = log
        .samples
        .iter()
        .filter(|s| s.t >= window_start)
        .map(|s| s.tau_ext[0])
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok((mean, variance))
}
