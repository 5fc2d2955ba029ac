//! Kinematics and dynamics of the serial chain.
//!
//! Spatial-vector convention is Featherstone's: 6-vectors are stacked
//! `[angular; linear]`, motion transforms are `X = [[E, 0], [-E r̂, E]]`
//! with `E` the coordinate rotation and `r` the frame offset, and forces
//! transform by `Xᵀ` in the opposite direction.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, UnitQuaternion, Vector3, Vector6};

use super::{Pose, RobotModel};
use crate::Result;

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Motion transform child ← parent for a child frame at rotation `rot` and
/// origin `r` in the parent frame.
fn motion_transform(rot: &UnitQuaternion<f64>, r: &Vector3<f64>) -> Matrix6<f64> {
    let e = rot.to_rotation_matrix().into_inner().transpose();
    let mut x = Matrix6::zeros();
    x.fixed_view_mut::<3, 3>(0, 0).copy_from(&e);
    x.fixed_view_mut::<3, 3>(3, 3).copy_from(&e);
    x.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-e * skew(r)));
    x
}

/// Cross product matrix action for motion vectors: v ×ₘ m.
fn cross_motion(v: &Vector6<f64>, m: &Vector6<f64>) -> Vector6<f64> {
    let (w, vl) = split(v);
    let (mw, ml) = split(m);
    join(&w.cross(&mw), &(w.cross(&ml) + vl.cross(&mw)))
}

/// Cross product action for force vectors: v ×* f.
fn cross_force(v: &Vector6<f64>, f: &Vector6<f64>) -> Vector6<f64> {
    let (w, vl) = split(v);
    let (n, fl) = split(f);
    join(&(w.cross(&n) + vl.cross(&fl)), &w.cross(&fl))
}

fn split(v: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (
        Vector3::new(v[0], v[1], v[2]),
        Vector3::new(v[3], v[4], v[5]),
    )
}

fn join(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

/// Spatial inertia of a link about its frame origin.
fn spatial_inertia(mass: f64, com: &Vector3<f64>, inertia_com: &Matrix3<f64>) -> Matrix6<f64> {
    let c = skew(com);
    let mut i = Matrix6::zeros();
    i.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(inertia_com + mass * c * c.transpose()));
    i.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * c));
    i.fixed_view_mut::<3, 3>(3, 0).copy_from(&(mass * c.transpose()));
    i.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * mass));
    i
}

/// Per-configuration kinematic scratch: link poses in base frame and the
/// child←parent motion transforms.
struct ChainFrames {
    /// Pose of each link frame in the base frame.
    link_pose: Vec<Pose>,
    /// Motion transform from parent coordinates into link coordinates.
    xform: Vec<Matrix6<f64>>,
}

fn chain_frames(model: &RobotModel, q: &DVector<f64>) -> ChainFrames {
    let n = model.dof();
    let mut link_pose = Vec::with_capacity(n);
    let mut xform = Vec::with_capacity(n);
    let mut acc = Pose::identity();
    for (i, joint) in model.joints.iter().enumerate() {
        let joint_rot = UnitQuaternion::from_axis_angle(&joint.axis, q[i]);
        let local = joint.parent_transform.compose(&Pose::new(
            Vector3::zeros(),
            joint_rot,
        ));
        xform.push(motion_transform(&local.rotation, &local.translation));
        acc = acc.compose(&local);
        link_pose.push(acc);
    }
    ChainFrames { link_pose, xform }
}

impl RobotModel {
    /// Pose of the terminal frame in the base frame.
    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Result<Pose> {
        self.check_dim("forward_kinematics", q.len())?;
        let frames = chain_frames(self, q);
        Ok(frames.link_pose[self.dof() - 1].compose(&self.ee_offset))
    }

    /// Poses of every link frame plus the terminal frame, base coordinates.
    /// Used by collision checking and the Jacobian.
    pub fn link_poses(&self, q: &DVector<f64>) -> Result<Vec<Pose>> {
        self.check_dim("link_poses", q.len())?;
        let frames = chain_frames(self, q);
        let mut out = frames.link_pose;
        let terminal = out[self.dof() - 1].compose(&self.ee_offset);
        out.push(terminal);
        Ok(out)
    }

    /// Geometric Jacobian of the terminal frame, base coordinates.
    /// Rows 0..3 are linear, rows 3..6 angular.
    pub fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim("jacobian", q.len())?;
        let frames = chain_frames(self, q);
        let n = self.dof();
        let p_ee = frames.link_pose[n - 1]
            .compose(&self.ee_offset)
            .translation;
        let mut jac = DMatrix::zeros(6, n);
        for i in 0..n {
            let pose = &frames.link_pose[i];
            let z = pose.rotation * self.joints[i].axis.into_inner();
            let lin = z.cross(&(p_ee - pose.translation));
            for r in 0..3 {
                jac[(r, i)] = lin[r];
                jac[(r + 3, i)] = z[r];
            }
        }
        Ok(jac)
    }

    /// Link-side inertia matrix `M(q)` via the composite-rigid-body recursion.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim("mass_matrix", q.len())?;
        let n = self.dof();
        let frames = chain_frames(self, q);
        let subspace: Vec<Vector6<f64>> = self
            .joints
            .iter()
            .map(|j| join(&j.axis.into_inner(), &Vector3::zeros()))
            .collect();

        let mut composite: Vec<Matrix6<f64>> = self
            .joints
            .iter()
            .map(|j| spatial_inertia(j.mass, &j.com, &j.inertia))
            .collect();

        let mut m = DMatrix::zeros(n, n);
        for i in (0..n).rev() {
            if i + 1 < n {
                let x = &frames.xform[i + 1];
                let folded = x.transpose() * composite[i + 1] * x;
                composite[i] += folded;
            }
            let mut f = composite[i] * subspace[i];
            m[(i, i)] = subspace[i].dot(&f);
            let mut j = i;
            while j > 0 {
                f = frames.xform[j].transpose() * f;
                j -= 1;
                let hij = f.dot(&subspace[j]);
                m[(i, j)] = hij;
                m[(j, i)] = hij;
            }
        }
        Ok(m)
    }

    /// Joint torques for the motion `(q, q̇, q̈)` via recursive Newton-Euler.
    pub fn inverse_dynamics(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        qddot: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_dim("inverse_dynamics q", q.len())?;
        self.check_dim("inverse_dynamics qdot", qdot.len())?;
        self.check_dim("inverse_dynamics qddot", qddot.len())?;
        let n = self.dof();
        let frames = chain_frames(self, q);

        let mut vel = vec![Vector6::zeros(); n];
        let mut acc = vec![Vector6::zeros(); n];
        let mut force = vec![Vector6::zeros(); n];

        // Gravity enters as a fictitious base acceleration of -g.
        let a0 = join(&Vector3::zeros(), &(-self.gravity));

        for i in 0..n {
            let s = join(&self.joints[i].axis.into_inner(), &Vector3::zeros());
            let x = &frames.xform[i];
            let (v_parent, a_parent) = if i == 0 {
                (Vector6::zeros(), a0)
            } else {
                (vel[i - 1], acc[i - 1])
            };
            let vj = s * qdot[i];
            vel[i] = x * v_parent + vj;
            acc[i] = x * a_parent + s * qddot[i] + cross_motion(&vel[i], &vj);
            let inertia = spatial_inertia(
                self.joints[i].mass,
                &self.joints[i].com,
                &self.joints[i].inertia,
            );
            force[i] = inertia * acc[i] + cross_force(&vel[i], &(inertia * vel[i]));
        }

        let mut tau = DVector::zeros(n);
        for i in (0..n).rev() {
            let s = join(&self.joints[i].axis.into_inner(), &Vector3::zeros());
            tau[i] = s.dot(&force[i]);
            if i > 0 {
                let folded = frames.xform[i].transpose() * force[i];
                force[i - 1] += folded;
            }
        }
        Ok(tau)
    }

    /// `C(q,q̇)q̇ + g(q)`: inverse dynamics at zero acceleration.
    pub fn bias_forces(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> Result<DVector<f64>> {
        let zero = DVector::zeros(self.dof());
        self.inverse_dynamics(q, qdot, &zero)
    }

    /// Gravity torque `g(q)`.
    pub fn gravity_vector(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let zero = DVector::zeros(self.dof());
        self.inverse_dynamics(q, &zero, &zero)
    }

    /// Gravitational potential `U(q) = -Σ mᵢ gᵀ p_ci(q)`; `gravity_vector`
    /// is its gradient.
    pub fn gravity_potential(&self, q: &DVector<f64>) -> Result<f64> {
        self.check_dim("gravity_potential", q.len())?;
        let frames = chain_frames(self, q);
        let mut u = 0.0;
        for (i, joint) in self.joints.iter().enumerate() {
            let p_com = frames.link_pose[i].transform_point(&joint.com);
            u -= joint.mass * self.gravity.dot(&p_com);
        }
        Ok(u)
    }
}
