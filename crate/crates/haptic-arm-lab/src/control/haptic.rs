use nalgebra::DVector;

use super::{inertia_reshape, FrictionEstimator, ReshapeConfig};
use crate::fjr::ControlSignals;
use crate::rigid_body::{Frame, RobotModel, Wrench};
use crate::{Error, Result};

/// Motor torque command assembled by the haptic controller.
#[derive(Debug, Clone)]
pub struct HapticCommand {
    /// Inner control input (gravity share + rendered wrench + friction
    /// compensation), before reshaping.
    pub u: DVector<f64>,
    /// Motor torque after reshaping and per-joint saturation.
    pub tau_m: DVector<f64>,
    /// Joints whose command hit the torque limit this sample.
    pub saturated: Vec<bool>,
}

/// The full haptic rendering stack: gravity compensation plus the rendered
/// Cartesian wrench mapped through Jᵀ, plus friction compensation, all fed
/// through the inertia-reshaping feedback.
///
/// The friction-compensation share enters `u` pre-scaled by `B_θ/B = 1/r`
/// so its motor-level effect after the reshaping gain is exactly the
/// compensation torque — matching the `(B_θ/B) τ_f` friction term of the
/// reshaped dynamics. Feeding it in unscaled would over-cancel by the
/// reshaping ratio.
///
/// A joint-torque-rate damping term `-k_t τ̇_j` is added to `u`: the
/// reshaped transmission mode is almost undamped (Coulomb friction saturates
/// away from zero velocity) and discrete-time torque feedback would
/// otherwise sustain it. `k_t = 2ζ √(B/(rK))` per joint targets modal
/// damping `torque_rate_zeta`; the term vanishes in steady state, so the
/// reshaping and reflection relations are untouched.
#[derive(Debug, Clone)]
pub struct HapticController {
    pub reshape: ReshapeConfig,
    pub estimator: FrictionEstimator,
    /// Compensation fraction γ in [0, 1]; 0 disables friction compensation.
    pub gamma: f64,
    pub gravity_compensation: bool,
    /// Target damping ratio of the transmission mode.
    pub torque_rate_zeta: f64,
}

impl HapticController {
    pub fn new(reshape: ReshapeConfig, estimator: FrictionEstimator, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!(
                "compensation fraction must be in [0,1], got {gamma}"
            )));
        }
        if reshape.dof() != estimator.dof() {
            return Err(Error::dim(
                "HapticController",
                reshape.dof(),
                estimator.dof(),
            ));
        }
        Ok(HapticController {
            reshape,
            estimator,
            gamma,
            gravity_compensation: true,
            torque_rate_zeta: 0.25,
        })
    }

    /// Assemble the motor torque for one sample. `rendered` must be
    /// expressed in the base frame.
    pub fn command(
        &self,
        model: &RobotModel,
        signals: &ControlSignals,
        rendered: &Wrench,
    ) -> Result<HapticCommand> {
        if rendered.frame != Frame::Base {
            return Err(Error::FrameMismatch {
                expected: Frame::Base,
                got: rendered.frame,
            });
        }
        let n = model.dof();
        let mut u = DVector::zeros(n);
        if self.gravity_compensation {
            u += model.gravity_vector(&signals.q)?;
        }
        let jac = model.jacobian(&signals.q)?;
        let wrench6 = DVector::from_column_slice(&rendered.to_array6());
        u += jac.transpose() * wrench6;
        if self.gamma > 0.0 {
            let comp = self
                .estimator
                .compensation(&signals.thetadot, self.gamma)
                .component_div(self.reshape.ratios());
            u += comp;
        }
        if self.torque_rate_zeta > 0.0 {
            for i in 0..n {
                let j = &model.joints[i];
                let k_t = 2.0 * self.torque_rate_zeta
                    * (j.motor_inertia / (self.reshape.ratios()[i] * j.stiffness)).sqrt();
                u[i] -= k_t * signals.tau_j_dot[i];
            }
        }
        let raw = inertia_reshape(&self.reshape, &signals.tau_j, &u)?;
        let mut tau_m = raw.clone();
        let mut saturated = vec![false; n];
        for i in 0..n {
            let lim = model.joints[i].torque_limit;
            if raw[i].abs() > lim {
                tau_m[i] = raw[i].clamp(-lim, lim);
                saturated[i] = true;
            }
        }
        Ok(HapticCommand {
            u,
            tau_m,
            saturated,
        })
    }
}
