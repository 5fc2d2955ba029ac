use nalgebra::{UnitQuaternion, UnitVector3, Vector3};
use serde::{Deserialize, Serialize};

use super::{HumanModel, WorkspaceSample};
use crate::rigid_body::Pose;
use crate::{Error, Result};

/// Workspace sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub count: usize,
    pub seed: u64,
    /// Required force magnitude attached to every sample, N.
    pub force_requirement: f64,
    /// Required torque magnitude attached to every sample, N·m.
    pub torque_requirement: f64,
    /// Confine samples to the z = shoulder-height plane (for planar toy
    /// arms).
    pub planar: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            count: 64,
            seed: 0,
            force_requirement: 10.0,
            torque_requirement: 1.5,
            planar: false,
        }
    }
}

/// Radical-inverse (van der Corput) sequence in the given base.
fn radical_inverse(base: u64, mut index: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * f;
        index /= base;
        f /= base as f64;
    }
    result
}

/// The discrete roll set applied about the hand's pointing axis.
const ROLLS: [f64; 3] = [-1.0471975511965976, 0.0, 1.0471975511965976];

/// Low-discrepancy (Halton) samples of hand poses over the forward
/// hemisphere spherical shell `r ∈ [0.2 L, 0.95 L]` around the shoulder,
/// each with one of a small set of hand rolls. Deterministic per seed.
pub fn sample_human_workspace(
    hm: &HumanModel,
    cfg: &SamplerConfig,
) -> Result<Vec<WorkspaceSample>> {
    if cfg.count == 0 {
        return Err(Error::InvalidConfig("sample count must be > 0".into()));
    }
    hm.validate()?;
    let arm = hm.arm_length();
    // The seed offsets the start index of the Halton stream (skipping the
    // first few entries which cluster near the domain edges).
    let start = 17 + cfg.seed.wrapping_mul(containing_prime_stride());
    let mut samples = Vec::with_capacity(cfg.count);
    for k in 0..cfg.count {
        let idx = start.wrapping_add(k as u64);
        let u1 = radical_inverse(2, idx);
        let u2 = radical_inverse(3, idx);
        let u3 = radical_inverse(5, idx);
        let u4 = radical_inverse(7, idx);

        // Forward hemisphere: azimuth and elevation both in (-π/2, π/2).
        let azimuth = (u1 - 0.5) * std::f64::consts::PI;
        let elevation = if cfg.planar {
            0.0
        } else {
            (u2 - 0.5) * std::f64::consts::PI
        };
        let dir = Vector3::new(
            elevation.cos() * azimuth.cos(),
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
        );
        let radius = (0.2 + 0.75 * u3) * arm;
        let position = hm.shoulder + dir * radius;

        // Hand z points back along the reach direction (toward the
        // shoulder): the robot flange carrying the handle then sits on the
        // far side of the fist, outboard of the human arm. Roll about it.
        let point = UnitQuaternion::rotation_between(&Vector3::z(), &(-dir))
            .unwrap_or_else(UnitQuaternion::identity);
        let roll = ROLLS[(u4 * ROLLS.len() as f64) as usize % ROLLS.len()];
        let rotation = point
            * UnitQuaternion::from_axis_angle(&UnitVector3::new_normalize(Vector3::z()), roll);

        samples.push(WorkspaceSample {
            pose: Pose::new(position, rotation),
            force_requirement: cfg.force_requirement,
            torque_requirement: cfg.torque_requirement,
        });
    }
    Ok(samples)
}

fn containing_prime_stride() -> u64 {
    7919
}
