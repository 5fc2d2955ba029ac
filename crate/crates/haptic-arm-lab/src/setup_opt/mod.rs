//! Setup-configuration scoring and optimization: where to bolt the arm and
//! how to grab it, traded off over workspace coverage, dexterity, renderable
//! wrench, and human-collision safety.
//!
//! The shared frame convention: x forward from the human, y to the human's
//! left, z up, with the modeled (right) shoulder at `HumanModel::shoulder`.
//! Base positions are expressed in this frame.

mod capsule;
mod es;
mod ik;
mod metrics;
mod optimize;
mod sampler;

pub use capsule::{segment_distance, Capsule};
pub use es::{maximize, EsParams, EsResult};
pub use ik::{solve_ik, IkOptions, IkOutcome, Unreachable};
pub use metrics::{
    collision_penalty, coverage_score, dexterity_score, evaluate, manipulability,
    wrench_feasibility_score, HARD_INFEASIBILITY_PENALTY, SAFE_DISTANCE,
};
pub use optimize::{optimize, Bounds, HistoryRow, OptimizeOutcome, OptimizeParams};
pub use sampler::{sample_human_workspace, SamplerConfig};

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::rigid_body::Pose;
use crate::{Error, Result};

/// Canonical rotation-vector representative with magnitude ≤ π.
pub fn canonicalize_rotation_vector(v: Vector3<f64>) -> Vector3<f64> {
    let angle = v.norm();
    if angle <= std::f64::consts::PI || angle == 0.0 {
        return v;
    }
    let axis = v / angle;
    let wrapped = angle.rem_euclid(2.0 * std::f64::consts::PI);
    if wrapped <= std::f64::consts::PI {
        axis * wrapped
    } else {
        axis * (wrapped - 2.0 * std::f64::consts::PI)
    }
}

/// The design variables: base position `X_b`, base orientation `R_b` as a
/// rotation vector (exponential coordinates), and the grab angle between the
/// human hand frame and the end-effector frame about the handle axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetupConfiguration {
    /// Base position, m, shared frame.
    pub base_position: Vector3<f64>,
    /// Base orientation as a rotation vector, rad; canonical (|R_b| ≤ π).
    pub base_rotation: Vector3<f64>,
    /// Grab angle, rad, |θ| ≤ π. Rotation of the end-effector frame about
    /// the hand's z (handle) axis relative to the hand frame.
    pub grab_angle: f64,
}

impl SetupConfiguration {
    pub fn new(
        base_position: Vector3<f64>,
        base_rotation: Vector3<f64>,
        grab_angle: f64,
    ) -> Result<Self> {
        if !(grab_angle.abs() <= std::f64::consts::PI) {
            return Err(Error::InvalidConfig(format!(
                "grab angle must satisfy |θ| ≤ π, got {grab_angle}"
            )));
        }
        if !base_position.iter().all(|x| x.is_finite())
            || !base_rotation.iter().all(|x| x.is_finite())
        {
            return Err(Error::InvalidConfig("non-finite setup configuration".into()));
        }
        Ok(SetupConfiguration {
            base_position,
            base_rotation: canonicalize_rotation_vector(base_rotation),
            grab_angle,
        })
    }

    /// Pose of the robot base in the shared frame.
    pub fn base_pose(&self) -> Pose {
        Pose::from_parts(self.base_position, self.base_rotation)
    }

    pub fn rotation_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_scaled_axis(self.base_rotation)
    }

    /// Mirror image across the sagittal plane (y = 0): positions flip y,
    /// the rotation axis (a pseudovector) flips x and z, and the grab
    /// handedness flips.
    pub fn mirrored(&self) -> SetupConfiguration {
        SetupConfiguration {
            base_position: Vector3::new(
                self.base_position.x,
                -self.base_position.y,
                self.base_position.z,
            ),
            base_rotation: Vector3::new(
                -self.base_rotation.x,
                self.base_rotation.y,
                -self.base_rotation.z,
            ),
            grab_angle: -self.grab_angle,
        }
    }

    /// Flatten to the 7-vector the optimizer searches over.
    pub fn to_vector(&self) -> [f64; 7] {
        [
            self.base_position.x,
            self.base_position.y,
            self.base_position.z,
            self.base_rotation.x,
            self.base_rotation.y,
            self.base_rotation.z,
            self.grab_angle,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 7 {
            return Err(Error::dim("SetupConfiguration::from_slice", 7, v.len()));
        }
        SetupConfiguration::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
            v[6],
        )
    }
}

/// Simplified human geometry: one shoulder, a two-segment arm, a torso
/// capsule. Plausible-scale constants, not anthropometric data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanModel {
    /// Shoulder position in the shared frame, m.
    pub shoulder: Vector3<f64>,
    pub upper_arm_length: f64,
    pub forearm_length: f64,
    pub arm_radius: f64,
    pub torso_top: Vector3<f64>,
    pub torso_bottom: Vector3<f64>,
    pub torso_radius: f64,
    /// The forearm capsule stops this far short of the grip point: the fist
    /// holds the handle and cannot collide with it, m.
    pub hand_clearance: f64,
}

impl Default for HumanModel {
    fn default() -> Self {
        HumanModel {
            shoulder: Vector3::zeros(),
            upper_arm_length: 0.30,
            forearm_length: 0.27,
            arm_radius: 0.05,
            // Body center sits toward -y: this models the left arm with the
            // base-mount region outboard of the shoulder free; mirroring
            // across y=0 yields the right-arm setup.
            torso_top: Vector3::new(-0.05, -0.20, 0.10),
            torso_bottom: Vector3::new(-0.05, -0.20, -0.50),
            torso_radius: 0.15,
            hand_clearance: 0.08,
        }
    }
}

impl HumanModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("upper_arm_length", self.upper_arm_length),
            ("forearm_length", self.forearm_length),
            ("arm_radius", self.arm_radius),
            ("torso_radius", self.torso_radius),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// Full arm length, m.
    pub fn arm_length(&self) -> f64 {
        self.upper_arm_length + self.forearm_length
    }

    /// Rigid translation of the whole human.
    pub fn translated(&self, offset: Vector3<f64>) -> HumanModel {
        HumanModel {
            shoulder: self.shoulder + offset,
            torso_top: self.torso_top + offset,
            torso_bottom: self.torso_bottom + offset,
            ..*self
        }
    }

    /// Deterministic elbow estimate for a given hand position: on the
    /// two-link circle, biased downward (elbow-down), straight when at or
    /// beyond full reach.
    pub fn elbow(&self, hand: &Vector3<f64>) -> Vector3<f64> {
        let w = hand - self.shoulder;
        let d = w.norm();
        let (lu, lf) = (self.upper_arm_length, self.forearm_length);
        if d < 1e-9 {
            return self.shoulder + Vector3::new(0.0, 0.0, -lu);
        }
        let dir = w / d;
        if d >= lu + lf - 1e-9 || d <= (lu - lf).abs() + 1e-9 {
            return self.shoulder + dir * lu;
        }
        let a = (lu * lu - lf * lf + d * d) / (2.0 * d);
        let rho = (lu * lu - a * a).max(0.0).sqrt();
        let center = self.shoulder + dir * a;
        let mut down = Vector3::new(0.0, 0.0, -1.0);
        down -= dir * down.dot(&dir);
        if down.norm() < 1e-9 {
            down = Vector3::new(-1.0, 0.0, 0.0);
            down -= dir * down.dot(&dir);
        }
        center + down.normalize() * rho
    }

    /// Torso, upper-arm, and forearm capsules for a given hand position.
    /// The forearm ends `hand_clearance` short of the grip point.
    pub fn capsules(&self, hand: &Vector3<f64>) -> [Capsule; 3] {
        let elbow = self.elbow(hand);
        let fore = hand - elbow;
        let len = fore.norm();
        let wrist = if len > self.hand_clearance + 1e-9 {
            elbow + fore * ((len - self.hand_clearance) / len)
        } else {
            elbow
        };
        [
            Capsule::new(self.torso_top, self.torso_bottom, self.torso_radius),
            Capsule::new(self.shoulder, elbow, self.arm_radius),
            Capsule::new(elbow, wrist, self.arm_radius),
        ]
    }
}

/// One target hand pose with the wrench magnitudes the display must render
/// there.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceSample {
    pub pose: Pose,
    /// Required force magnitude, N.
    pub force_requirement: f64,
    /// Required torque magnitude, N·m.
    pub torque_requirement: f64,
}

/// Scalarization weights. `dexterity_scale` normalizes the (dimensionful)
/// dexterity metric into [0, 1]; `None` lets `optimize` calibrate it from a
/// seeded candidate population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    pub coverage: f64,
    pub dexterity: f64,
    pub wrench: f64,
    pub collision: f64,
    pub dexterity_scale: Option<f64>,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            coverage: 0.4,
            dexterity: 0.2,
            wrench: 0.3,
            collision: 0.1,
            dexterity_scale: None,
        }
    }
}

/// Component scores of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    /// Fraction of samples with successful IK, in [0, 1].
    pub coverage: f64,
    /// Raw mean manipulability × joint-limit margin, ≥ 0.
    pub dexterity: f64,
    /// Dexterity after normalization by `Weights::dexterity_scale`.
    pub dexterity_normalized: f64,
    /// Renderable-wrench score, in [0, 1].
    pub wrench_feasibility: f64,
    /// Human-proximity penalty, ≥ 0.
    pub collision_penalty: f64,
    /// Any reachable sample posture interpenetrates the human.
    pub hard_infeasible: bool,
    /// Weighted scalar objective.
    pub total: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rotation_vector_canonicalization() {
        let v = Vector3::new(0.0, 0.0, 3.5); // > π
        let c = canonicalize_rotation_vector(v);
        assert!(c.norm() <= std::f64::consts::PI + 1e-12);
        let q1 = UnitQuaternion::from_scaled_axis(v);
        let q2 = UnitQuaternion::from_scaled_axis(c);
        assert!(q1.angle_to(&q2) < 1e-12);
    }

    #[test]
    fn config_round_trips_through_vector() {
        let cfg = SetupConfiguration::new(
            Vector3::new(-0.205, 0.066, 0.262),
            Vector3::new(-0.900, 0.177, -0.219),
            -0.569,
        )
        .unwrap();
        let v = cfg.to_vector();
        let back = SetupConfiguration::from_slice(&v).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn mirror_is_an_involution() {
        let cfg = SetupConfiguration::new(
            Vector3::new(-0.2, 0.1, 0.3),
            Vector3::new(0.5, -0.4, 0.2),
            0.7,
        )
        .unwrap();
        assert_eq!(cfg.mirrored().mirrored(), cfg);
        // Mirrored base pose maps mirrored points the way the original maps
        // the unmirrored ones.
        let p = Vector3::new(0.3, 0.2, -0.1);
        let mirror = |v: Vector3<f64>| Vector3::new(v.x, -v.y, v.z);
        let a = cfg.base_pose().transform_point(&p);
        let b = cfg.mirrored().base_pose().transform_point(&mirror(p));
        assert_relative_eq!(mirror(a), b, epsilon = 1e-12);
    }

    #[test]
    fn elbow_stays_on_both_link_spheres() {
        let hm = HumanModel::default();
        for hand in [
            Vector3::new(0.3, 0.1, -0.1),
            Vector3::new(0.2, -0.2, 0.2),
            Vector3::new(0.45, 0.0, 0.3),
        ] {
            let e = hm.elbow(&hand);
            let d_upper = (e - hm.shoulder).norm();
            assert_relative_eq!(d_upper, hm.upper_arm_length, epsilon = 1e-9);
            if (hand - hm.shoulder).norm() < hm.arm_length() - 1e-6 {
                let d_fore = (hand - e).norm();
                assert_relative_eq!(d_fore, hm.forearm_length, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn grab_angle_bounds_enforced() {
        assert!(SetupConfiguration::new(Vector3::zeros(), Vector3::zeros(), 4.0).is_err());
    }
}
