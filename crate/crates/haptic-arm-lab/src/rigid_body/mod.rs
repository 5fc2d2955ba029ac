//! Serial-chain kinematics and link-side dynamics.
//!
//! Everything here is a pure function of its inputs and safe to call from
//! any number of threads.

mod dynamics;
mod model;
mod pose;

pub use model::{JointGroup, JointParams, RobotModel};
pub use pose::{Frame, Pose, Wrench};
