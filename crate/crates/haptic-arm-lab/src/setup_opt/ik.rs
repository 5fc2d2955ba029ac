use nalgebra::{DMatrix, DVector, UnitQuaternion, UnitVector3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SetupConfiguration;
use crate::rigid_body::{Pose, RobotModel};
use crate::Result;

/// Inverse-kinematics solver options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkOptions {
    pub max_iterations: usize,
    /// Position tolerance, m.
    pub position_tolerance: f64,
    /// Orientation tolerance, rad (ignored in position-only mode).
    pub orientation_tolerance: f64,
    /// Deterministic restarts from perturbed seeds after the first attempt.
    pub restarts: usize,
    /// Solve position only (3-DOF task); for arms without full orientation
    /// capability.
    pub position_only: bool,
    /// Base damping λ²; the solver adds an error-proportional term on top.
    pub damping: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            max_iterations: 200,
            position_tolerance: 1e-4,
            orientation_tolerance: 1e-3,
            restarts: 4,
            position_only: false,
            damping: 1e-6,
        }
    }
}

/// Why a target was declared unreachable (diagnostics).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unreachable {
    /// The target position lies beyond any possible reach of the chain.
    OutOfReach,
    /// Iterations ran out before the error tolerance was met.
    NoConvergence,
    /// Converged postures kept violating joint limits.
    LimitViolation,
}

/// IK outcome: a joint vector within limits and tolerance, or a diagnosis.
#[derive(Debug, Clone, PartialEq)]
pub enum IkOutcome {
    Converged(DVector<f64>),
    Unreachable(Unreachable),
}

impl IkOutcome {
    pub fn converged(&self) -> Option<&DVector<f64>> {
        match self {
            IkOutcome::Converged(q) => Some(q),
            IkOutcome::Unreachable(_) => None,
        }
    }
}

/// Map a hand pose in the shared frame to the end-effector target in the
/// robot base frame: through the base pose and the grab-angle offset about
/// the hand z (handle) axis.
pub fn hand_to_ee_target(config: &SetupConfiguration, hand: &Pose) -> Pose {
    let grab = Pose::new(
        Vector3::zeros(),
        UnitQuaternion::from_axis_angle(
            &UnitVector3::new_normalize(Vector3::z()),
            config.grab_angle,
        ),
    );
    config.base_pose().inverse().compose(&hand.compose(&grab))
}

/// Damped-least-squares IK toward `target` (a hand pose in the shared
/// frame), mapped through the setup configuration. Deterministic: a fixed
/// mid-range seed posture plus `restarts` seeded perturbations.
pub fn solve_ik(
    model: &RobotModel,
    config: &SetupConfiguration,
    target: &Pose,
    opts: &IkOptions,
) -> Result<IkOutcome> {
    let ee_target = hand_to_ee_target(config, target);
    solve_ik_base_frame(model, &ee_target, opts)
}

/// Same solver with the target already expressed in the robot base frame.
pub fn solve_ik_base_frame(
    model: &RobotModel,
    target: &Pose,
    opts: &IkOptions,
) -> Result<IkOutcome> {
    if target.translation.norm() > model.reach_bound() + opts.position_tolerance {
        return Ok(IkOutcome::Unreachable(Unreachable::OutOfReach));
    }
    let n = model.dof();
    let mut rng = ChaCha8Rng::seed_from_u64(0x49_4b_53_45_45_44); // fixed solver seed
    let mut saw_limit_stop = false;

    for attempt in 0..=opts.restarts {
        let mut q = model.mid_posture();
        if attempt > 0 {
            for i in 0..n {
                let (lo, hi) = model.joints[i].pos_limits;
                let span = hi - lo;
                q[i] = (q[i] + rng.random_range(-0.3..0.3) * span).clamp(lo, hi);
            }
        }
        match dls_iterate(model, target, q, opts)? {
            DlsResult::Converged(q) => return Ok(IkOutcome::Converged(q)),
            DlsResult::StuckAtLimits => saw_limit_stop = true,
            DlsResult::OutOfIterations => {}
        }
    }
    Ok(IkOutcome::Unreachable(if saw_limit_stop {
        Unreachable::LimitViolation
    } else {
        Unreachable::NoConvergence
    }))
}

enum DlsResult {
    Converged(DVector<f64>),
    OutOfIterations,
    StuckAtLimits,
}

fn task_error(current: &Pose, target: &Pose, position_only: bool) -> DVector<f64> {
    let dp = target.translation - current.translation;
    if position_only {
        DVector::from_column_slice(dp.as_slice())
    } else {
        let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
        DVector::from_column_slice(&[dp.x, dp.y, dp.z, dr.x, dr.y, dr.z])
    }
}

fn dls_iterate(
    model: &RobotModel,
    target: &Pose,
    mut q: DVector<f64>,
    opts: &IkOptions,
) -> Result<DlsResult> {
    let n = model.dof();
    let task_dim = if opts.position_only { 3 } else { 6 };
    let mut limit_streak = 0usize;

    for _ in 0..opts.max_iterations {
        let pose = model.forward_kinematics(&q)?;
        let err = task_error(&pose, target, opts.position_only);
        let pos_err = err.rows(0, 3).norm();
        let ori_err = if opts.position_only {
            0.0
        } else {
            err.rows(3, 3).norm()
        };
        if pos_err < opts.position_tolerance && ori_err < opts.orientation_tolerance {
            return Ok(DlsResult::Converged(q));
        }

        let jac_full = model.jacobian(&q)?;
        let jac = jac_full.rows(0, task_dim).into_owned();
        // Error-proportional damping keeps steps sane far from the target
        // and lets the solver creep arbitrarily close near singularities.
        let lambda_sq = opts.damping + 0.1 * err.norm_squared();
        let jjt = &jac * jac.transpose() + DMatrix::identity(task_dim, task_dim) * lambda_sq;
        let rhs = jjt
            .cholesky()
            .map(|c| c.solve(&err))
            .unwrap_or_else(|| err.clone());
        let mut dq = jac.transpose() * rhs;
        let max_step = dq.amax();
        if max_step > 0.5 {
            dq *= 0.5 / max_step;
        }
        q += dq;

        // Clamp into limits; repeated hard clamping means the target pulls
        // outside the feasible box.
        let mut clamped = false;
        for i in 0..n {
            let (lo, hi) = model.joints[i].pos_limits;
            if q[i] < lo || q[i] > hi {
                q[i] = q[i].clamp(lo, hi);
                clamped = true;
            }
        }
        limit_streak = if clamped { limit_streak + 1 } else { 0 };
        if limit_streak > 25 {
            return Ok(DlsResult::StuckAtLimits);
        }
    }
    Ok(DlsResult::OutOfIterations)
}
