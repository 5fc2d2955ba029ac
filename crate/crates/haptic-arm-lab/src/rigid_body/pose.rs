use nalgebra::{Matrix3, Matrix4, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Frame a Cartesian quantity is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Robot base frame (identical to the shared world/human frame unless a
    /// base pose is applied).
    Base,
    /// Terminal (end-effector) frame.
    EndEffector,
}

/// Rigid transform: translation plus unit-quaternion rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Pose {
            translation,
            rotation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Pose {
            translation,
            rotation: UnitQuaternion::identity(),
        }
    }

    /// Exponential-coordinate constructor: rotation vector in radians.
    pub fn from_parts(translation: Vector3<f64>, rotation_vector: Vector3<f64>) -> Self {
        Pose {
            translation,
            rotation: UnitQuaternion::from_scaled_axis(rotation_vector),
        }
    }

    /// `self` then `other` (i.e. `other` expressed in `self`'s frame).
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.translation + self.rotation * other.translation,
            rotation: self.rotation * other.rotation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv_rot = self.rotation.inverse();
        Pose {
            translation: -(inv_rot * self.translation),
            rotation: inv_rot,
        }
    }

    /// Map a point expressed in this pose's frame into the parent frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation * p
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// 4x4 homogeneous matrix (used by test oracles).
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation_matrix());
        h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        h
    }

    /// Orthonormality defect of the rotation: ‖RᵀR − I‖∞ plus |det R − 1|.
    pub fn rotation_defect(&self) -> f64 {
        let r = self.rotation_matrix();
        let e = r.transpose() * r - Matrix3::identity();
        e.amax() + (r.determinant() - 1.0).abs()
    }

    /// Flattened 7-vector `[tx,ty,tz,qw,qx,qy,qz]` for logging.
    pub fn to_array7(&self) -> [f64; 7] {
        let q = self.rotation.quaternion();
        [
            self.translation.x,
            self.translation.y,
            self.translation.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }
}

/// Cartesian force/torque pair with an explicit expressed-in frame tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
    pub frame: Frame,
}

impl Wrench {
    pub fn zero(frame: Frame) -> Self {
        Wrench {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
            frame,
        }
    }

    pub fn new(force: Vector3<f64>, torque: Vector3<f64>, frame: Frame) -> Self {
        Wrench {
            force,
            torque,
            frame,
        }
    }

    /// Stacked 6-vector `[fx,fy,fz,tx,ty,tz]`.
    pub fn to_array6(&self) -> [f64; 6] {
        [
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        ]
    }

    pub fn scale(&self, s: f64) -> Wrench {
        Wrench {
            force: self.force * s,
            torque: self.torque * s,
            frame: self.frame,
        }
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        debug_assert_eq!(self.frame, rhs.frame, "adding wrenches across frames");
        Wrench {
            force: self.force + rhs.force,
            torque: self.torque + rhs.torque,
            frame: self.frame,
        }
    }
}
