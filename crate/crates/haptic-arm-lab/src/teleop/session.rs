use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::{virtual_wall_wrench, Coupling, TeleopConfig, Trajectory, Twist, VirtualEnvironment};
use crate::control::HapticController;
use crate::fjr::{self, ControlSignals, FjrState, FrictionModel, SimConfig};
use crate::rigid_body::{Frame, Pose, RobotModel, Wrench};
use crate::{Error, Result};

/// Cartesian spring-damper standing in for the operator's hand: it drags the
/// master end-effector along the scripted trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartesianOperator {
    /// N/m.
    pub stiffness: f64,
    /// N·s/m.
    pub damping: f64,
    /// N·m/rad.
    pub angular_stiffness: f64,
    /// N·m·s/rad.
    pub angular_damping: f64,
}

impl Default for CartesianOperator {
    fn default() -> Self {
        CartesianOperator {
            stiffness: 500.0,
            damping: 45.0,
            angular_stiffness: 3.0,
            angular_damping: 0.3,
        }
    }
}

/// The haptic-display master arm.
#[derive(Debug, Clone)]
pub struct MasterSpec {
    pub model: RobotModel,
    pub friction: FrictionModel,
    pub controller: HapticController,
    pub initial: FjrState,
    /// Base placement in the shared frame.
    pub setup: crate::setup_opt::SetupConfiguration,
    pub sim: SimConfig,
}

/// Point-mass proxy interacting with the virtual environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualTool {
    pub mass: f64,
    /// Free-space viscous damping, N·s/m.
    pub damping: f64,
    pub initial_position: Vector3<f64>,
}

/// What sits on the far side of the coupling.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum SlaveKind {
    /// A kinematically identical remote arm, no reshaping, gravity
    /// compensated, servoed in Cartesian space by the coupling wrench.
    Robot {
        model: RobotModel,
        friction: FrictionModel,
        initial: FjrState,
        setup: crate::setup_opt::SetupConfiguration,
        sim: SimConfig,
    },
    /// A pure virtual tool in the environment.
    Virtual { tool: VirtualTool },
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub coupling: TeleopConfig,
    pub duration: f64,
    pub operator: CartesianOperator,
    pub script: Trajectory,
    /// Environment the slave contacts (None = free space).
    pub environment: Option<VirtualEnvironment>,
    pub bimanual: bool,
}

/// One logged lockstep sample of one channel.
#[derive(Debug, Clone)]
pub struct TeleopRow {
    pub t: f64,
    /// 'L' or 'R'.
    pub channel: char,
    pub master_pose: [f64; 7],
    pub slave_pose: [f64; 7],
    /// Coupling wrench commanded to the slave, shared frame.
    pub cmd_wrench: [f64; 6],
    /// Wrench reflected to the master, shared frame.
    pub fb_wrench: [f64; 6],
    /// Distance between the slave and its (delayed) reference, m; zero
    /// during the delay warm-up.
    pub tracking_err: f64,
    /// Wrench the slave applies on the environment (not in the CSV schema).
    pub contact_wrench: [f64; 6],
    /// Master + slave stored energy + coupling spring potential, J.
    pub loop_energy: f64,
}

/// Lockstep session log; bimanual sessions carry an L block then an R block
/// with identical schema.
#[derive(Debug, Clone)]
pub struct TeleopLog {
    pub dt: f64,
    pub rows: Vec<TeleopRow>,
}

impl TeleopLog {
    pub fn channel_rows(&self, channel: char) -> impl Iterator<Item = &TeleopRow> {
        self.rows.iter().filter(move |r| r.channel == channel)
    }

    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["t".to_string(), "channel".to_string()];
        for (prefix, n) in [
            ("master_p", 0),
            ("slave_p", 1),
            ("cmd_", 2),
            ("fb_", 3),
        ] {
            match n {
                0 | 1 => {
                    for s in ["x", "y", "z", "qw", "qx", "qy", "qz"] {
                        h.push(format!("{prefix}{s}"));
                    }
                }
                _ => {
                    for s in ["fx", "fy", "fz", "tx", "ty", "tz"] {
                        h.push(format!("{prefix}{s}"));
                    }
                }
            }
        }
        h.push("tracking_err".into());
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::csv_header())?;
        for r in &self.rows {
            let mut row = vec![crate::fjr::fmt_float(r.t), r.channel.to_string()];
            row.extend(r.master_pose.iter().map(|x| crate::fjr::fmt_float(*x)));
            row.extend(r.slave_pose.iter().map(|x| crate::fjr::fmt_float(*x)));
            row.extend(r.cmd_wrench.iter().map(|x| crate::fjr::fmt_float(*x)));
            row.extend(r.fb_wrench.iter().map(|x| crate::fjr::fmt_float(*x)));
            row.push(crate::fjr::fmt_float(r.tracking_err));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv writer>".into(),
            source: e,
        })?;
        Ok(())
    }
}

fn rotate_wrench(w: &Wrench, rot: &UnitQuaternion<f64>, frame: Frame) -> Wrench {
    Wrench::new(rot * w.force, rot * w.torque, frame)
}

/// Slave-side simulation state.
#[allow(clippy::large_enum_variant)]
enum SlaveState {
    Robot {
        model: RobotModel,
        friction: FrictionModel,
        state: FjrState,
        base: Pose,
        base_rot_inv: UnitQuaternion<f64>,
        sim: SimConfig,
    },
    Virtual {
        tool: VirtualTool,
        position: Vector3<f64>,
        velocity: Vector3<f64>,
    },
}

impl SlaveState {
    fn pose_twist(&self) -> Result<(Pose, Twist)> {
        match self {
            SlaveState::Robot {
                model, state, base, ..
            } => {
                let fk = model.forward_kinematics(&state.q)?;
                let world = base.compose(&fk);
                let jac = model.jacobian(&state.q)?;
                let v6 = &jac * &state.qdot;
                let rot = base.rotation;
                Ok((
                    world,
                    Twist {
                        linear: rot * Vector3::new(v6[0], v6[1], v6[2]),
                        angular: rot * Vector3::new(v6[3], v6[4], v6[5]),
                    },
                ))
            }
            SlaveState::Virtual {
                position, velocity, ..
            } => Ok((
                Pose::from_translation(*position),
                Twist {
                    linear: *velocity,
                    angular: Vector3::zeros(),
                },
            )),
        }
    }

    fn energy(&self, u_ref: f64) -> Result<f64> {
        match self {
            SlaveState::Robot { model, state, .. } => fjr::stored_energy(model, state, u_ref),
            SlaveState::Virtual { tool, velocity, .. } => {
                Ok(0.5 * tool.mass * velocity.norm_squared())
            }
        }
    }

    fn step(&mut self, cmd_world: &Wrench, contact_on_slave: &Wrench, dt: f64) -> Result<()> {
        match self {
            SlaveState::Robot {
                model,
                friction,
                state,
                base_rot_inv,
                sim,
                ..
            } => {
                let jac_t = model.jacobian(&state.q)?.transpose();
                let cmd_base = rotate_wrench(cmd_world, base_rot_inv, Frame::Base);
                let contact_base = rotate_wrench(contact_on_slave, base_rot_inv, Frame::Base);
                let tau_m = model.gravity_vector(&state.q)?
                    + &jac_t * DVector::from_column_slice(&cmd_base.to_array6());
                let tau_ext = &jac_t * DVector::from_column_slice(&contact_base.to_array6());
                *state = fjr::step(model, friction, state, &tau_m, &tau_ext, sim)?;
                Ok(())
            }
            SlaveState::Virtual {
                tool,
                position,
                velocity,
            } => {
                let accel =
                    (cmd_world.force + contact_on_slave.force - *velocity * tool.damping)
                        / tool.mass;
                *velocity += accel * dt;
                *position += *velocity * dt;
                Ok(())
            }
        }
    }
}

/// Run a bilateral session: master and slave stepped in deterministic
/// lockstep at the master's dt. In bimanual mode a second, fully independent
/// channel runs with the mirrored setup, script, environment, and initial
/// states (joint states mirror by negation, exact for y-mirror-symmetric
/// models).
pub fn run_session(
    master: &MasterSpec,
    slave: &SlaveKind,
    session: &SessionConfig,
) -> Result<TeleopLog> {
    session.coupling.validate()?;
    session.script.validate()?;
    if let Some(env) = &session.environment {
        env.validate()?;
    }
    if let SlaveKind::Robot { sim, .. } = slave {
        if sim.dt != master.sim.dt {
            return Err(Error::DtMismatch {
                master: master.sim.dt,
                slave: sim.dt,
            });
        }
    }
    if !(session.duration > 0.0) {
        return Err(Error::InvalidConfig("duration must be > 0".into()));
    }

    let mut rows = run_channel(master, slave, session, 'L', false)?;
    if session.bimanual {
        rows.extend(run_channel(master, slave, session, 'R', true)?);
    }
    Ok(TeleopLog {
        dt: master.sim.dt,
        rows,
    })
}

fn run_channel(
    master: &MasterSpec,
    slave: &SlaveKind,
    session: &SessionConfig,
    channel: char,
    mirror: bool,
) -> Result<Vec<TeleopRow>> {
    let master_setup = if mirror {
        master.setup.mirrored()
    } else {
        master.setup
    };
    let script = if mirror {
        session.script.mirrored()
    } else {
        session.script.clone()
    };
    let environment = session.environment.map(|e| if mirror { e.mirrored() } else { e });
    let mut master_state = master.initial.clone();
    if mirror {
        master_state.q = -master_state.q;
        master_state.theta = -master_state.theta;
        master_state.qdot = -master_state.qdot;
        master_state.thetadot = -master_state.thetadot;
    }

    let mut slave_state = match slave {
        SlaveKind::Robot {
            model,
            friction,
            initial,
            setup,
            sim,
        } => {
            let setup = if mirror { setup.mirrored() } else { *setup };
            let mut st = initial.clone();
            if mirror {
                st.q = -st.q;
                st.theta = -st.theta;
                st.qdot = -st.qdot;
                st.thetadot = -st.thetadot;
            }
            SlaveState::Robot {
                model: model.clone(),
                friction: friction.clone(),
                state: st,
                base: setup.base_pose(),
                base_rot_inv: setup.rotation_quaternion().inverse(),
                sim: *sim,
            }
        }
        SlaveKind::Virtual { tool } => {
            let mut t = *tool;
            if mirror {
                t.initial_position.y = -t.initial_position.y;
            }
            SlaveState::Virtual {
                tool: t,
                position: t.initial_position,
                velocity: Vector3::zeros(),
            }
        }
    };

    let dt = master.sim.dt;
    let steps = (session.duration / dt).round() as usize;
    let master_base = master_setup.base_pose();
    let master_rot_inv = master_setup.rotation_quaternion().inverse();
    let master_u_ref = master.model.gravity_potential(&master_state.q)?;
    let slave_u_ref = match &slave_state {
        SlaveState::Robot { model, state, .. } => model.gravity_potential(&state.q)?,
        SlaveState::Virtual { .. } => 0.0,
    };
    let script_rot = script.rotation();

    let mut coupling = Coupling::new(session.coupling)?;
    let mut rows = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = k as f64 * dt;

        // Master end-effector state in the shared frame.
        let fk = master.model.forward_kinematics(&master_state.q)?;
        let master_world = master_base.compose(&fk);
        let jac = master.model.jacobian(&master_state.q)?;
        let v6 = &jac * &master_state.qdot;
        let master_twist = Twist {
            linear: master_base.rotation * Vector3::new(v6[0], v6[1], v6[2]),
            angular: master_base.rotation * Vector3::new(v6[3], v6[4], v6[5]),
        };

        let (slave_pose, slave_twist) = slave_state.pose_twist()?;
        // Wall force on the slave; the coupled "contact wrench" is what the
        // slave applies on the environment (its negation).
        let wall_on_slave = environment
            .as_ref()
            .map(|e| virtual_wall_wrench(&slave_pose, &slave_twist, e))
            .unwrap_or_else(|| Wrench::zero(Frame::Base));
        let contact = wall_on_slave.scale(-1.0);

        let out = coupling.step(
            (master_world, master_twist),
            (slave_pose, slave_twist),
            contact,
        );
        let tracking_err = out
            .reference
            .map(|r| (r.translation - slave_pose.translation).norm())
            .unwrap_or(0.0);

        let spring_energy = out
            .reference
            .map(|r| {
                0.5 * session.coupling.stiffness_linear
                    * (r.translation - slave_pose.translation).norm_squared()
            })
            .unwrap_or(0.0);
        let loop_energy = fjr::stored_energy(&master.model, &master_state, master_u_ref)?
            + slave_state.energy(slave_u_ref)?
            + spring_energy;

        rows.push(TeleopRow {
            t,
            channel,
            master_pose: master_world.to_array7(),
            slave_pose: slave_pose.to_array7(),
            cmd_wrench: out.slave_command.to_array6(),
            fb_wrench: out.master_feedback.to_array6(),
            tracking_err,
            contact_wrench: contact.to_array6(),
            loop_energy,
        });

        if k == steps {
            break;
        }

        // Master: haptic controller renders the feedback; the operator
        // spring drags the EE along the script. Both map through Jᵀ in the
        // master base frame.
        let tau_j = master
            .model
            .stiffness_vector()
            .component_mul(&(&master_state.theta - &master_state.q));
        let signals = ControlSignals {
            time: t,
            q: master_state.q.clone(),
            qdot: master_state.qdot.clone(),
            theta: master_state.theta.clone(),
            thetadot: master_state.thetadot.clone(),
            tau_j: tau_j.clone(),
            tau_j_dot: master
                .model
                .stiffness_vector()
                .component_mul(&(&master_state.thetadot - &master_state.qdot)),
            e_stored: fjr::stored_energy(&master.model, &master_state, master_u_ref)?,
        };
        let rendered = rotate_wrench(&out.master_feedback, &master_rot_inv, Frame::Base);
        let cmd = master.controller.command(&master.model, &signals, &rendered)?;

        let (p_ref, v_ref) = script.sample(t);
        let op = &session.operator;
        let op_force = (p_ref - master_world.translation) * op.stiffness
            + (v_ref - master_twist.linear) * op.damping;
        let op_torque = (script_rot * master_world.rotation.inverse()).scaled_axis()
            * op.angular_stiffness
            - master_twist.angular * op.angular_damping;
        let op_world = Wrench::new(op_force, op_torque, Frame::Base);
        let op_base = rotate_wrench(&op_world, &master_rot_inv, Frame::Base);
        let tau_ext = jac.transpose() * DVector::from_column_slice(&op_base.to_array6());

        master_state = fjr::step(
            &master.model,
            &master.friction,
            &master_state,
            &cmd.tau_m,
            &tau_ext,
            &master.sim,
        )?;
        slave_state.step(&out.slave_command, &wall_on_slave, dt)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{EstimatorConfig, FrictionEstimator, ReshapeConfig};
    use crate::fjr::Integrator;
    use crate::setup_opt::SetupConfiguration;
    use crate::teleop::Keyframe;

    fn dvec(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn planar_master(q0: &[f64]) -> MasterSpec {
        let mut model = RobotModel::planar2(1.0, 1.0, 1.0, 1.0);
        model.gravity = nalgebra::Vector3::zeros();
        let controller = HapticController::new(
            ReshapeConfig::uniform(2, 3.0).unwrap(),
            FrictionEstimator::new(2, EstimatorConfig::default()),
            0.0,
        )
        .unwrap();
        MasterSpec {
            friction: FrictionModel::uniform(2, 0.1, 0.05).unwrap(),
            controller,
            initial: FjrState::at_rest(dvec(q0)),
            setup: SetupConfiguration::new(
                nalgebra::Vector3::zeros(),
                nalgebra::Vector3::zeros(),
                0.0,
            )
            .unwrap(),
            sim: SimConfig::new(1e-3, Integrator::SemiImplicitEuler).unwrap(),
            model,
        }
    }

    fn tool_slave(at: Vector3<f64>) -> SlaveKind {
        SlaveKind::Virtual {
            tool: VirtualTool {
                mass: 1.0,
                damping: 5.0,
                initial_position: at,
            },
        }
    }

    fn hold_script(p: [f64; 3]) -> Trajectory {
        Trajectory::new(vec![
            Keyframe { t: 0.0, position: p },
            Keyframe { t: 1.0, position: p },
        ])
        .unwrap()
    }

    /// Free space, zero delay, smooth motion: steady-state slave tracking
    /// error under 1e-3 m.
    #[test]
    fn free_space_tracking() {
        let q0 = [0.5, 1.0];
        let master = planar_master(&q0);
        let start = master
            .model
            .forward_kinematics(&dvec(&q0))
            .unwrap()
            .translation;
        let script = Trajectory::new(vec![
            Keyframe {
                t: 0.0,
                position: [start.x, start.y, 0.0],
            },
            Keyframe {
                t: 1.5,
                position: [start.x - 0.2, start.y + 0.1, 0.0],
            },
            Keyframe {
                t: 4.0,
                position: [start.x - 0.2, start.y + 0.1, 0.0],
            },
        ])
        .unwrap();
        let session = SessionConfig {
            coupling: TeleopConfig::default(),
            duration: 4.0,
            operator: CartesianOperator::default(),
            script,
            environment: None,
            bimanual: false,
        };
        let log = run_session(&master, &tool_slave(start), &session).unwrap();
        let last = log.rows.last().unwrap();
        assert!(
            last.tracking_err < 1e-3,
            "steady tracking error {} m",
            last.tracking_err
        );
    }

    /// Transport-delay invariant: in free space the delayed channel outputs
    /// are the zero-delay outputs shifted by exactly k samples.
    #[test]
    fn delay_shifts_outputs_exactly() {
        let q0 = [0.4, 0.9];
        let master = planar_master(&q0);
        let start = master
            .model
            .forward_kinematics(&dvec(&q0))
            .unwrap()
            .translation;
        let script = Trajectory::new(vec![
            Keyframe {
                t: 0.0,
                position: [start.x, start.y, 0.0],
            },
            Keyframe {
                t: 1.0,
                position: [start.x - 0.15, start.y, 0.0],
            },
            Keyframe {
                t: 2.0,
                position: [start.x - 0.15, start.y + 0.1, 0.0],
            },
        ])
        .unwrap();
        let make_session = |delay: usize| SessionConfig {
            coupling: TeleopConfig {
                delay_steps: delay,
                ..Default::default()
            },
            duration: 2.0,
            operator: CartesianOperator::default(),
            script: script.clone(),
            environment: None,
            bimanual: false,
        };
        let slave = tool_slave(start);
        let base = run_session(&master, &slave, &make_session(0)).unwrap();
        let k = 7usize;
        let delayed = run_session(&master, &slave, &make_session(k)).unwrap();
        for i in k..base.rows.len() {
            assert_eq!(delayed.rows[i].cmd_wrench, base.rows[i - k].cmd_wrench);
            assert_eq!(delayed.rows[i].fb_wrench, base.rows[i - k].fb_wrench);
            assert_eq!(delayed.rows[i].slave_pose, base.rows[i - k].slave_pose);
            assert_eq!(
                delayed.rows[i].tracking_err,
                base.rows[i - k].tracking_err
            );
        }
    }

    /// Master held against the wall: steady contact, feedback equal to
    /// -scale × contact, never adhesive.
    #[test]
    fn static_press_equilibrium() {
        let q0 = [0.5, 1.0];
        let master = planar_master(&q0);
        let start = master
            .model
            .forward_kinematics(&dvec(&q0))
            .unwrap()
            .translation;
        // Wall 2 cm beyond the start along +x; hold the hand 3 cm past it.
        let env = VirtualEnvironment {
            wall_point: Vector3::new(start.x + 0.02, 0.0, 0.0),
            wall_normal: Vector3::new(-1.0, 0.0, 0.0),
            stiffness: 500.0,
            damping: 20.0,
        };
        let script = hold_script([start.x + 0.05, start.y, 0.0]);
        let session = SessionConfig {
            coupling: TeleopConfig {
                reflection_scale: 0.8,
                ..Default::default()
            },
            duration: 5.0,
            operator: CartesianOperator::default(),
            script,
            environment: Some(env),
            bimanual: false,
        };
        let log = run_session(&master, &tool_slave(start), &session).unwrap();
        // Non-adhesion at every sample: wall force on slave along +n.
        for r in &log.rows {
            let wall_on_slave = -Vector3::from_column_slice(&r.contact_wrench[0..3]);
            assert!(
                wall_on_slave.dot(&env.wall_normal) >= -1e-12,
                "adhesive wall at t={}",
                r.t
            );
        }
        let last = log.rows.last().unwrap();
        let contact_force = Vector3::from_column_slice(&last.contact_wrench[0..3]);
        let fb = Vector3::from_column_slice(&last.fb_wrench[0..3]);
        assert!(
            contact_force.norm() > 1.0,
            "no steady contact developed: {contact_force:?}"
        );
        let expected = -contact_force * 0.8;
        assert!(
            (fb - expected).norm() <= 0.01 * expected.norm(),
            "feedback {fb:?} vs -scale*contact {expected:?}"
        );
    }

    /// Bimanual free space on a y-mirror-symmetric arm: the two channel logs
    /// are exact mirror images.
    #[test]
    fn bimanual_mirror_symmetry() {
        let q0 = [0.4, 0.8];
        let mut master = planar_master(&q0);
        master.setup =
            SetupConfiguration::new(Vector3::new(0.1, 0.3, 0.0), Vector3::zeros(), 0.0).unwrap();
        let start = master
            .setup
            .base_pose()
            .compose(&master.model.forward_kinematics(&dvec(&q0)).unwrap())
            .translation;
        let script = Trajectory::new(vec![
            Keyframe {
                t: 0.0,
                position: [start.x, start.y, 0.0],
            },
            Keyframe {
                t: 1.0,
                position: [start.x - 0.1, start.y + 0.15, 0.0],
            },
            Keyframe {
                t: 2.0,
                position: [start.x, start.y + 0.2, 0.0],
            },
        ])
        .unwrap();
        let session = SessionConfig {
            coupling: TeleopConfig::default(),
            duration: 2.0,
            operator: CartesianOperator::default(),
            script,
            environment: None,
            bimanual: true,
        };
        let log = run_session(&master, &tool_slave(start), &session).unwrap();
        let left: Vec<&TeleopRow> = log.channel_rows('L').collect();
        let right: Vec<&TeleopRow> = log.channel_rows('R').collect();
        assert_eq!(left.len(), right.len());
        for (l, r) in left.iter().zip(&right) {
            // Positions mirror in y; wrench forces mirror in y.
            assert!((l.master_pose[0] - r.master_pose[0]).abs() < 1e-9);
            assert!((l.master_pose[1] + r.master_pose[1]).abs() < 1e-9);
            assert!((l.master_pose[2] - r.master_pose[2]).abs() < 1e-9);
            assert!((l.slave_pose[0] - r.slave_pose[0]).abs() < 1e-9);
            assert!((l.slave_pose[1] + r.slave_pose[1]).abs() < 1e-9);
            assert!((l.cmd_wrench[0] - r.cmd_wrench[0]).abs() < 1e-9);
            assert!((l.cmd_wrench[1] + r.cmd_wrench[1]).abs() < 1e-9);
            assert!((l.tracking_err - r.tracking_err).abs() < 1e-9);
        }
    }

    /// With no operator input and no delay, loop energy is non-increasing
    /// once the startup transient has passed.
    #[test]
    fn bounded_interaction_energy() {
        let q0 = [0.5, 1.0];
        let mut master = planar_master(&q0);
        master.friction = FrictionModel::uniform(2, 0.3, 0.3).unwrap();
        let start = master
            .model
            .forward_kinematics(&dvec(&q0))
            .unwrap()
            .translation;
        // Zero operator gains: nothing injects energy. Slave starts offset
        // so the coupling transient rings first.
        let session = SessionConfig {
            coupling: TeleopConfig::default(),
            duration: 3.0,
            operator: CartesianOperator {
                stiffness: 0.0,
                damping: 0.0,
                angular_stiffness: 0.0,
                angular_damping: 0.0,
            },
            script: hold_script([start.x, start.y, 0.0]),
            environment: None,
            bimanual: false,
        };
        let slave = tool_slave(start + Vector3::new(0.05, 0.0, 0.0));
        let log = run_session(&master, &slave, &session).unwrap();
        let settle = (0.5 / log.dt) as usize;
        let e0 = log.rows[settle].loop_energy;
        for pair in log.rows[settle..].windows(2) {
            assert!(
                pair[1].loop_energy <= pair[0].loop_energy + 1e-6 * e0.max(1e-9),
                "loop energy rose at t={}",
                pair[1].t
            );
        }
    }

    #[test]
    fn dt_mismatch_rejected() {
        let master = planar_master(&[0.3, 0.6]);
        let slave = SlaveKind::Robot {
            model: master.model.clone(),
            friction: FrictionModel::zero(2),
            initial: FjrState::at_rest(dvec(&[0.3, 0.6])),
            setup: master.setup,
            sim: SimConfig::new(5e-4, Integrator::SemiImplicitEuler).unwrap(),
        };
        let session = SessionConfig {
            coupling: TeleopConfig::default(),
            duration: 0.1,
            operator: CartesianOperator::default(),
            script: hold_script([1.0, 1.0, 0.0]),
            environment: None,
            bimanual: false,
        };
        assert!(matches!(
            run_session(&master, &slave, &session),
            Err(Error::DtMismatch { .. })
        ));
    }

    /// Bimanual log schema: both channel blocks present, same length, CSV
    /// column count matches the header everywhere.
    #[test]
    fn bimanual_csv_schema() {
        let master = planar_master(&[0.4, 0.8]);
        let start = master
            .model
            .forward_kinematics(&dvec(&[0.4, 0.8]))
            .unwrap()
            .translation;
        let session = SessionConfig {
            coupling: TeleopConfig::default(),
            duration: 0.05,
            operator: CartesianOperator::default(),
            script: hold_script([start.x, start.y, 0.0]),
            environment: None,
            bimanual: true,
        };
        let log = run_session(&master, &tool_slave(start), &session).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header_len = lines.next().unwrap().split(',').count();
        assert_eq!(header_len, 2 + 7 + 7 + 6 + 6 + 1);
        let mut l_count = 0;
        let mut r_count = 0;
        for line in lines {
            assert_eq!(line.split(',').count(), header_len);
            if line.split(',').nth(1) == Some("L") {
                l_count += 1;
            } else {
                r_count += 1;
            }
        }
        assert_eq!(l_count, r_count);
        assert!(l_count > 0);
    }
}
