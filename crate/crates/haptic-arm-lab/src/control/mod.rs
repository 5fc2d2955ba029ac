//! The haptic control stack: joint-torque-feedback inertia reshaping,
//! model-free energy-based friction estimation and compensation, gravity
//! compensation, and Cartesian wrench rendering.

mod estimator;
mod haptic;
mod reshape;

pub use estimator::{
    EstimatorConfig, EstimatorEvent, FrictionEstimator, DEFAULT_COMPENSATION_FRACTION,
};
pub use haptic::{HapticCommand, HapticController};
pub use reshape::{
    inertia_reshape, ReshapeConfig, DEFAULT_ROTATIONAL_RATIO, DEFAULT_TRANSLATIONAL_RATIO,
};
