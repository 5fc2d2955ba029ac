//! Bilateral teleoperation at desk scale: the haptic-display arm as master,
//! a remote arm or a virtual environment as slave, coupled position-force
//! with optional transport delay. No passivity controller is layered on:
//! with large delays the loop may oscillate, and the harness reports energy
//! growth instead of hiding it.

mod script;
mod session;

pub use script::{Keyframe, Trajectory};
pub use session::{
    run_session, CartesianOperator, MasterSpec, SessionConfig, SlaveKind, TeleopLog, TeleopRow,
    VirtualTool,
};

use nalgebra::{UnitVector3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::rigid_body::{Frame, Pose, Wrench};
use crate::{Error, Result};

/// Cartesian velocity: linear and angular parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn zero() -> Self {
        Twist {
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
        }
    }
}

/// Two-channel position-force coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeleopConfig {
    /// Slave servo stiffness, N/m.
    pub stiffness_linear: f64,
    /// Slave servo angular stiffness, N·m/rad.
    pub stiffness_angular: f64,
    /// Slave servo damping, N·s/m.
    pub damping_linear: f64,
    /// Slave servo angular damping, N·m·s/rad.
    pub damping_angular: f64,
    /// Force reflection scale in (0, 1].
    pub reflection_scale: f64,
    /// Transport delay in whole steps, each direction.
    pub delay_steps: usize,
}

impl Default for TeleopConfig {
    fn default() -> Self {
        TeleopConfig {
            stiffness_linear: 400.0,
            stiffness_angular: 5.0,
            damping_linear: 40.0,
            damping_angular: 0.5,
            reflection_scale: 1.0,
            delay_steps: 0,
        }
    }
}

impl TeleopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reflection_scale > 0.0 && self.reflection_scale <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "reflection scale must be in (0,1], got {}",
                self.reflection_scale
            )));
        }
        for (name, v) in [
            ("stiffness_linear", self.stiffness_linear),
            ("stiffness_angular", self.stiffness_angular),
            ("damping_linear", self.damping_linear),
            ("damping_angular", self.damping_angular),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// One-sided penalty wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualEnvironment {
    /// A point on the wall plane, m.
    pub wall_point: Vector3<f64>,
    /// Outward unit normal (free space is on the +normal side).
    pub wall_normal: Vector3<f64>,
    /// Wall stiffness, N/m.
    pub stiffness: f64,
    /// Wall damping, N·s/m.
    pub damping: f64,
}

impl VirtualEnvironment {
    pub fn validate(&self) -> Result<()> {
        if (self.wall_normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("wall normal must be unit".into()));
        }
        if !(self.stiffness >= 0.0 && self.damping >= 0.0) {
            return Err(Error::InvalidConfig(
                "wall stiffness and damping must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Mirror image across the sagittal plane (y = 0).
    pub fn mirrored(&self) -> VirtualEnvironment {
        let m = |v: Vector3<f64>| Vector3::new(v.x, -v.y, v.z);
        VirtualEnvironment {
            wall_point: m(self.wall_point),
            wall_normal: m(self.wall_normal),
            ..*self
        }
    }
}

/// One-sided spring-damper wall force: with penetration
/// `δ = n·(p_wall - p) > 0`, the force is `n · max(0, k δ - b (v·n))` —
/// never adhesive. Zero torque.
pub fn virtual_wall_wrench(pose: &Pose, twist: &Twist, env: &VirtualEnvironment) -> Wrench {
    let n = UnitVector3::new_normalize(env.wall_normal);
    let penetration = n.dot(&(env.wall_point - pose.translation));
    if penetration <= 0.0 {
        return Wrench::zero(Frame::Base);
    }
    let outward_speed = n.dot(&twist.linear);
    let magnitude = (env.stiffness * penetration - env.damping * outward_speed).max(0.0);
    Wrench::new(n.into_inner() * magnitude, Vector3::zeros(), Frame::Base)
}

/// Step-indexed delay line of the two coupling channels. At populated depth
/// below the configured delay both outputs are zero (documented startup
/// transient), which holds a slave that starts at rest exactly still.
#[derive(Debug, Clone)]
pub struct Coupling {
    cfg: TeleopConfig,
    pose_channel: VecDeque<(Pose, Twist)>,
    wrench_channel: VecDeque<Wrench>,
}

/// Commands produced by one coupling step.
#[derive(Debug, Clone, Copy)]
pub struct CouplingOutput {
    /// Cartesian wrench servoing the slave toward the delayed master pose.
    pub slave_command: Wrench,
    /// Force reflected to the master: `-scale × delayed slave contact`.
    pub master_feedback: Wrench,
    /// Delayed master pose the slave is being servoed to (if warm).
    pub reference: Option<Pose>,
}

impl Coupling {
    pub fn new(cfg: TeleopConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Coupling {
            cfg,
            pose_channel: VecDeque::with_capacity(cfg.delay_steps + 1),
            wrench_channel: VecDeque::with_capacity(cfg.delay_steps + 1),
        })
    }

    pub fn config(&self) -> &TeleopConfig {
        &self.cfg
    }

    /// Advance one lockstep sample.
    pub fn step(
        &mut self,
        master: (Pose, Twist),
        slave: (Pose, Twist),
        slave_contact: Wrench,
    ) -> CouplingOutput {
        self.pose_channel.push_back(master);
        self.wrench_channel.push_back(slave_contact);

        let delayed_master = if self.pose_channel.len() > self.cfg.delay_steps {
            self.pose_channel.pop_front()
        } else {
            None
        };
        let delayed_contact = if self.wrench_channel.len() > self.cfg.delay_steps {
            self.wrench_channel.pop_front()
        } else {
            None
        };

        let slave_command = match &delayed_master {
            None => Wrench::zero(Frame::Base),
            Some((ref_pose, ref_twist)) => {
                let dp = ref_pose.translation - slave.0.translation;
                let dv = ref_twist.linear - slave.1.linear;
                let drot = (ref_pose.rotation * slave.0.rotation.inverse()).scaled_axis();
                let dw = ref_twist.angular - slave.1.angular;
                Wrench::new(
                    dp * self.cfg.stiffness_linear + dv * self.cfg.damping_linear,
                    drot * self.cfg.stiffness_angular + dw * self.cfg.damping_angular,
                    Frame::Base,
                )
            }
        };
        let master_feedback = match delayed_contact {
            None => Wrench::zero(Frame::Base),
            Some(w) => w.scale(-self.cfg.reflection_scale),
        };
        CouplingOutput {
            slave_command,
            master_feedback,
            reference: delayed_master.map(|(p, _)| p),
        }
    }
}
