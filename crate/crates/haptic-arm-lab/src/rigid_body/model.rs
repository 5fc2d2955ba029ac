use nalgebra::{Matrix3, UnitQuaternion, UnitVector3, Vector3};
use serde::{Deserialize, Serialize};

use super::Pose;
use crate::{Error, Result};

/// Movement group a joint belongs to, used to pick its default reshaping
/// ratio (translational joints move the arm through space, rotational joints
/// reorient the wrist).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointGroup {
    Translational,
    Rotational,
}

/// Per-joint description of one revolute joint and the link it carries.
#[derive(Debug, Clone)]
pub struct JointParams {
    /// Fixed transform from the parent link frame to this joint's frame.
    pub parent_transform: Pose,
    /// Rotation axis in the joint frame (unit).
    pub axis: UnitVector3<f64>,
    /// Link mass, kg.
    pub mass: f64,
    /// Link center of mass in the link frame, m.
    pub com: Vector3<f64>,
    /// Link rotational inertia about the COM, link frame, kg·m².
    pub inertia: Matrix3<f64>,
    /// Position limits, rad (lower, upper).
    pub pos_limits: (f64, f64),
    /// Velocity limit, rad/s.
    pub vel_limit: f64,
    /// Torque limit, N·m.
    pub torque_limit: f64,
    /// Motor-side inertia, kg·m².
    pub motor_inertia: f64,
    /// Joint (transmission) stiffness, N·m/rad.
    pub stiffness: f64,
    /// Movement group for reshaping-ratio defaults.
    pub group: JointGroup,
}

/// Kinematic and dynamic description of one serial arm.
///
/// Joints are revolute only and chained root to tip; the terminal frame sits
/// at `ee_offset` past the last link frame.
#[derive(Debug, Clone)]
pub struct RobotModel {
    pub name: String,
    pub joints: Vec<JointParams>,
    /// Fixed transform from the last link frame to the terminal frame.
    pub ee_offset: Pose,
    /// Gravity vector in the base frame, m/s².
    pub gravity: Vector3<f64>,
    /// Collision capsule radius around each link segment, m.
    pub link_radius: f64,
}

impl RobotModel {
    /// Degrees of freedom.
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn check_dim(&self, context: &'static str, len: usize) -> Result<()> {
        if len != self.dof() {
            return Err(Error::dim(context, self.dof(), len));
        }
        Ok(())
    }

    /// Validate all model invariants; called by every loader.
    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidModel("model has no joints".into()));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidModel("gravity must be finite".into()));
        }
        if !(self.link_radius > 0.0) {
            return Err(Error::InvalidModel("link_radius must be > 0".into()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            let ctx = |what: &str| Error::InvalidModel(format!("joint {i}: {what}"));
            if !(j.mass > 0.0) {
                return Err(ctx("mass must be > 0"));
            }
            if !(j.motor_inertia > 0.0) {
                return Err(ctx("motor inertia B must be > 0"));
            }
            if !(j.stiffness > 0.0) {
                return Err(ctx("stiffness K must be > 0"));
            }
            if !(j.pos_limits.0 < j.pos_limits.1) {
                return Err(ctx("position lower limit must be below upper limit"));
            }
            if !(j.vel_limit > 0.0) {
                return Err(ctx("velocity limit must be > 0"));
            }
            if !(j.torque_limit > 0.0) {
                return Err(ctx("torque limit must be > 0"));
            }
            let sym = (j.inertia - j.inertia.transpose()).amax();
            if sym > 1e-9 {
                return Err(ctx("inertia tensor must be symmetric"));
            }
            // Positive definiteness via leading principal minors.
            let m1 = j.inertia[(0, 0)];
            let m2 = j.inertia.fixed_view::<2, 2>(0, 0).determinant();
            let m3 = j.inertia.determinant();
            if !(m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
                return Err(ctx("inertia tensor must be positive definite"));
            }
            if j.parent_transform.rotation_defect() > 1e-9 {
                return Err(ctx("parent transform rotation is not orthonormal"));
            }
        }
        if self.ee_offset.rotation_defect() > 1e-9 {
            return Err(Error::InvalidModel(
                "ee_offset rotation is not orthonormal".into(),
            ));
        }
        Ok(())
    }

    /// Stiffness entries as a vector, N·m/rad.
    pub fn stiffness_vector(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.stiffness))
    }

    /// Motor inertia entries as a vector, kg·m².
    pub fn motor_inertia_vector(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.motor_inertia))
    }

    /// Torque limits as a vector, N·m.
    pub fn torque_limit_vector(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.torque_limit))
    }

    /// Upper bound on the terminal-frame distance from the base over all
    /// configurations: the sum of the fixed translation norms.
    pub fn reach_bound(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| j.parent_transform.translation.norm())
            .sum::<f64>()
            + self.ee_offset.translation.norm()
    }

    /// Mid-range posture, used as the deterministic IK seed.
    pub fn mid_posture(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            self.dof(),
            self.joints
                .iter()
                .map(|j| 0.5 * (j.pos_limits.0 + j.pos_limits.1)),
        )
    }

    pub fn clamp_to_limits(&self, q: &mut nalgebra::DVector<f64>) {
        for (qi, j) in q.iter_mut().zip(&self.joints) {
            *qi = qi.clamp(j.pos_limits.0, j.pos_limits.1);
        }
    }

    pub fn within_limits(&self, q: &nalgebra::DVector<f64>, margin: f64) -> bool {
        q.iter()
            .zip(&self.joints)
            .all(|(qi, j)| *qi >= j.pos_limits.0 - margin && *qi <= j.pos_limits.1 + margin)
    }

    // ── Built-in oracle models ──────────────────────────────────────────

    /// Single revolute joint about z with a point mass at (length, 0, 0).
    ///
    /// Gravity is (0, -9.81, 0), so q=0 is horizontal and q=π/2 points along
    /// -gravity ("vertical").
    pub fn pendulum1(mass: f64, length: f64) -> RobotModel {
        let m = RobotModel {
            name: "pendulum1".into(),
            joints: vec![JointParams {
                parent_transform: Pose::identity(),
                axis: UnitVector3::new_normalize(Vector3::z()),
                mass,
                com: Vector3::new(length, 0.0, 0.0),
                inertia: Matrix3::identity() * 1e-12,
                pos_limits: (-3.0, 3.0),
                vel_limit: 10.0,
                torque_limit: 100.0,
                motor_inertia: 0.1,
                stiffness: 1000.0,
                group: JointGroup::Translational,
            }],
            ee_offset: Pose::from_translation(Vector3::new(length, 0.0, 0.0)),
            gravity: Vector3::new(0.0, -9.81, 0.0),
            link_radius: 0.05,
        };
        m.validate().expect("builtin pendulum1 is valid");
        m
    }

    /// Planar two-link arm in the x-y plane, both joints about z, point
    /// masses at the link tips. Matches the textbook closed-form dynamics
    /// used as an oracle in the tests.
    pub fn planar2(m1: f64, m2: f64, l1: f64, l2: f64) -> RobotModel {
        let joint = |parent: Pose, mass: f64, length: f64| JointParams {
            parent_transform: parent,
            axis: UnitVector3::new_normalize(Vector3::z()),
            mass,
            com: Vector3::new(length, 0.0, 0.0),
            inertia: Matrix3::identity() * 1e-12,
            pos_limits: (-2.9, 2.9),
            vel_limit: 10.0,
            torque_limit: 50.0,
            motor_inertia: 0.1,
            stiffness: 1000.0,
            group: JointGroup::Translational,
        };
        let m = RobotModel {
            name: "planar2".into(),
            joints: vec![
                joint(Pose::identity(), m1, l1),
                joint(Pose::from_translation(Vector3::new(l1, 0.0, 0.0)), m2, l2),
            ],
            ee_offset: Pose::from_translation(Vector3::new(l2, 0.0, 0.0)),
            gravity: Vector3::new(0.0, -9.81, 0.0),
            link_radius: 0.05,
        };
        m.validate().expect("builtin planar2 is valid");
        m
    }

    /// Resolve a model reference: `builtin:pendulum1`, `builtin:planar2`,
    /// `builtin:panda_like`, or a JSON file path.
    pub fn resolve(reference: &str) -> Result<RobotModel> {
        match reference {
            "builtin:pendulum1" => Ok(RobotModel::pendulum1(1.0, 1.0)),
            "builtin:planar2" => Ok(RobotModel::planar2(1.0, 1.0, 1.0, 1.0)),
            "builtin:panda_like" => RobotModel::from_json_str("builtin:panda_like", PANDA_LIKE_JSON),
            other if other.starts_with("builtin:") => Err(Error::InvalidConfig(format!(
                "unknown builtin model '{other}'"
            ))),
            path => RobotModel::load_json(path),
        }
    }

    /// Load a model from a JSON file; missing or malformed fields report
    /// their dotted path.
    pub fn load_json(path: &str) -> Result<RobotModel> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_string(),
            source,
        })?;
        RobotModel::from_json_str(path, &text)
    }

    pub fn from_json_str(origin: &str, text: &str) -> Result<RobotModel> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            file: origin.to_string(),
            field_path: e.path().to_string(),
            detail: e.inner().to_string(),
        })?;
        let model = file.into_model()?;
        model.validate()?;
        Ok(model)
    }
}

/// Approximate 7-DOF arm with Panda-scale geometry and limits. The numbers
/// are plausible-scale stand-ins, not identified manufacturer values; see
/// the `description` field inside.
pub const PANDA_LIKE_JSON: &str = include_str!("../../models/panda_like.json");

// ── JSON schema ─────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    #[serde(default)]
    description: Option<String>,
    gravity: [f64; 3],
    #[serde(default = "default_link_radius")]
    link_radius: f64,
    joints: Vec<JointFile>,
    ee_offset: TransformFile,
}

fn default_link_radius() -> f64 {
    0.06
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    parent_transform: TransformFile,
    axis: [f64; 3],
    mass: f64,
    com: [f64; 3],
    /// Symmetric inertia about the COM: [ixx, iyy, izz, ixy, ixz, iyz].
    inertia: [f64; 6],
    pos_limits: [f64; 2],
    vel_limit: f64,
    torque_limit: f64,
    motor_inertia: f64,
    stiffness: f64,
    group: JointGroup,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformFile {
    translation: [f64; 3],
    /// Rotation vector (exponential coordinates), rad.
    rotation: [f64; 3],
}

impl TransformFile {
    fn into_pose(self) -> Pose {
        Pose::new(
            Vector3::from(self.translation),
            UnitQuaternion::from_scaled_axis(Vector3::from(self.rotation)),
        )
    }
}

impl ModelFile {
    fn into_model(self) -> Result<RobotModel> {
        let joints = self
            .joints
            .into_iter()
            .enumerate()
            .map(|(i, j)| {
                let axis = Vector3::from(j.axis);
                if axis.norm() < 1e-12 {
                    return Err(Error::InvalidModel(format!("joint {i}: zero axis")));
                }
                let [ixx, iyy, izz, ixy, ixz, iyz] = j.inertia;
                Ok(JointParams {
                    parent_transform: j.parent_transform.into_pose(),
                    axis: UnitVector3::new_normalize(axis),
                    mass: j.mass,
                    com: Vector3::from(j.com),
                    inertia: Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz),
                    pos_limits: (j.pos_limits[0], j.pos_limits[1]),
                    vel_limit: j.vel_limit,
                    torque_limit: j.torque_limit,
                    motor_inertia: j.motor_inertia,
                    stiffness: j.stiffness,
                    group: j.group,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RobotModel {
            name: self.name,
            joints,
            ee_offset: self.ee_offset.into_pose(),
            gravity: Vector3::from(self.gravity),
            link_radius: self.link_radius,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        RobotModel::pendulum1(1.0, 1.0).validate().unwrap();
        RobotModel::planar2(1.0, 1.0, 1.0, 1.0).validate().unwrap();
        let panda = RobotModel::resolve("builtin:panda_like").unwrap();
        assert_eq!(panda.dof(), 7);
    }

    #[test]
    fn loader_reports_missing_field_path() {
        let text = r#"{
            "name": "broken",
            "gravity": [0.0, 0.0, -9.81],
            "joints": [{
                "parent_transform": {"translation": [0,0,0], "rotation": [0,0,0]},
                "axis": [0,0,1],
                "mass": 1.0,
                "com": [0.5,0,0],
                "inertia": [0.01,0.01,0.01,0,0,0],
                "pos_limits": [-1.0, 1.0],
                "vel_limit": 2.0,
                "torque_limit": 10.0,
                "stiffness": 500.0,
                "group": "translational"
            }],
            "ee_offset": {"translation": [1,0,0], "rotation": [0,0,0]}
        }"#;
        let err = RobotModel::from_json_str("inline", text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("joints[0]"), "path missing from: {msg}");
        assert!(msg.contains("motor_inertia"), "field missing from: {msg}");
    }

    #[test]
    fn loader_rejects_invalid_values() {
        let mut m = RobotModel::pendulum1(1.0, 1.0);
        m.joints[0].mass = -1.0;
        assert!(m.validate().is_err());

        let mut m = RobotModel::pendulum1(1.0, 1.0);
        m.joints[0].pos_limits = (1.0, -1.0);
        assert!(m.validate().is_err());

        let mut m = RobotModel::pendulum1(1.0, 1.0);
        m.joints[0].inertia[(0, 1)] = 0.5; // asymmetric
        assert!(m.validate().is_err());

        let mut m = RobotModel::pendulum1(1.0, 1.0);
        m.joints[0].stiffness = 0.0;
        assert!(m.validate().is_err());
    }
}
