use nalgebra::DVector;

use crate::rigid_body::{JointGroup, RobotModel};
use crate::{Error, Result};

/// Default reshaping ratio for joints that mostly translate the arm.
pub const DEFAULT_TRANSLATIONAL_RATIO: f64 = 3.0;
/// Default reshaping ratio for joints that mostly reorient the wrist.
pub const DEFAULT_ROTATIONAL_RATIO: f64 = 4.0;

/// Per-joint reshaping ratios `r = B / B_θ`: the factor by which the motor's
/// apparent inertia is reduced. `r = 1` disables reshaping.
#[derive(Debug, Clone, PartialEq)]
pub struct ReshapeConfig {
    ratios: DVector<f64>,
}

impl ReshapeConfig {
    pub fn new(ratios: DVector<f64>) -> Result<Self> {
        if ratios.iter().any(|r| !(*r >= 1.0) || !r.is_finite()) {
            return Err(Error::InvalidConfig(
                "reshaping ratios must satisfy r >= 1".into(),
            ));
        }
        Ok(ReshapeConfig { ratios })
    }

    /// Same ratio on every joint.
    pub fn uniform(n: usize, ratio: f64) -> Result<Self> {
        ReshapeConfig::new(DVector::from_element(n, ratio))
    }

    /// Reshaping disabled (`r = 1` everywhere).
    pub fn identity(n: usize) -> Self {
        ReshapeConfig {
            ratios: DVector::from_element(n, 1.0),
        }
    }

    /// Default ratios from the model's joint grouping: 3 for translational
    /// joints, 4 for rotational joints.
    pub fn from_model_groups(model: &RobotModel) -> Self {
        ReshapeConfig {
            ratios: DVector::from_iterator(
                model.dof(),
                model.joints.iter().map(|j| match j.group {
                    JointGroup::Translational => DEFAULT_TRANSLATIONAL_RATIO,
                    JointGroup::Rotational => DEFAULT_ROTATIONAL_RATIO,
                }),
            ),
        }
    }

    pub fn ratios(&self) -> &DVector<f64> {
        &self.ratios
    }

    pub fn dof(&self) -> usize {
        self.ratios.len()
    }
}

/// Joint-torque-feedback reshaping law: `τ_m = τ_j + r (u - τ_j)`,
/// elementwise. Closing the loop turns the motor dynamics into
/// `B_θ θ̈ + τ_j = u + (B_θ/B) τ_f` with `B_θ = B/r`: the apparent inertia
/// and the reflected friction both shrink by the ratio.
pub fn inertia_reshape(
    cfg: &ReshapeConfig,
    tau_j: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = cfg.dof();
    if tau_j.len() != n {
        return Err(Error::dim("inertia_reshape tau_j", n, tau_j.len()));
    }
    if u.len() != n {
        return Err(Error::dim("inertia_reshape u", n, u.len()));
    }
    Ok(tau_j + cfg.ratios.component_mul(&(u - tau_j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fjr::{run, FjrState, FrictionModel, Integrator, SimConfig};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn dvec(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn unit_ratio_passes_through() {
        let cfg = ReshapeConfig::identity(3);
        let tau_j = dvec(&[1.0, -2.0, 0.5]);
        let u = dvec(&[0.3, 0.1, -0.7]);
        let tau_m = inertia_reshape(&cfg, &tau_j, &u).unwrap();
        assert_relative_eq!(tau_m, u, epsilon = 1e-15);
    }

    #[test]
    fn hand_evaluated_example() {
        let cfg = ReshapeConfig::uniform(1, 3.0).unwrap();
        let tau_m = inertia_reshape(&cfg, &dvec(&[2.0]), &dvec(&[0.0])).unwrap();
        assert_relative_eq!(tau_m[0], -4.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_ratio_below_one() {
        assert!(ReshapeConfig::uniform(2, 0.5).is_err());
        assert!(ReshapeConfig::new(dvec(&[1.0, f64::NAN])).is_err());
    }

    #[test]
    fn group_defaults() {
        let model = RobotModel::resolve("builtin:panda_like").unwrap();
        let cfg = ReshapeConfig::from_model_groups(&model);
        assert_eq!(cfg.ratios()[0], 3.0);
        assert_eq!(cfg.ratios()[6], 4.0);
    }

    /// Closed loop on a single joint with constant u: the reshaped motor
    /// equation `B_θ θ̈ + τ_j = u + (B_θ/B) τ_f` must hold along the whole
    /// trajectory (θ̈ reconstructed by central differences).
    #[test]
    fn closed_loop_satisfies_reshaped_dynamics() {
        let mut model = RobotModel::pendulum1(1.0, 1.0);
        model.gravity = Vector3::zeros();
        let friction = FrictionModel::uniform(1, 0.3, 0.1).unwrap();
        let r = 3.0;
        let cfg = ReshapeConfig::uniform(1, r).unwrap();
        // Fine dt so central-difference θ̈ resolves the spring mode.
        let sim = SimConfig::new(2.5e-4, Integrator::Rk4).unwrap();
        let u = dvec(&[0.5]);
        let initial = FjrState::at_rest(dvec(&[0.0]));
        let log = run(
            &model,
            &friction,
            &initial,
            |s| inertia_reshape(&cfg, &s.tau_j, &u).unwrap(),
            |_, _| dvec(&[0.0]),
            2.0,
            &sim,
        )
        .unwrap();

        let b = model.joints[0].motor_inertia;
        let b_theta = b / r;
        let dt = sim.dt;
        let mut checked = 0;
        for k in 1..log.samples.len() - 1 {
            let s = &log.samples[k];
            if s.t < 0.2 {
                continue;
            }
            let thetaddot =
                (log.samples[k + 1].thetadot[0] - log.samples[k - 1].thetadot[0]) / (2.0 * dt);
            let tau_f = friction.torque(&s.thetadot)[0];
            let lhs = b_theta * thetaddot + s.tau_j[0];
            let rhs = u[0] + (b_theta / b) * tau_f;
            assert!(
                (lhs - rhs).abs() <= 0.02 * u[0].abs(),
                "reshaped dynamics violated at t={}: {lhs} vs {rhs}",
                s.t
            );
            checked += 1;
        }
        assert!(checked > 1000);
    }
}
