//! Setup-configuration search plus an optional reference-configuration
//! comparison: the reference (e.g. a published optimum) is scored with the
//! same metrics and printed next to the found optimum. A comparison, not an
//! equality assertion — the published objective internals are not available.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{CheckResult, RunOutcome, Scenario};
use crate::rigid_body::RobotModel;
use crate::setup_opt::{
    evaluate, optimize, sample_human_workspace, Bounds, HumanModel, IkOptions, OptimizeParams,
    SamplerConfig, ScoreBreakdown, SetupConfiguration, Weights,
};
use crate::{Error, Result};

/// How the three reference orientation numbers are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationConvention {
    /// Exponential coordinates (axis × angle), rad.
    RotationVector,
    /// Roll-pitch-yaw (x, y, z) angles, rad.
    EulerXyz,
}

/// A reference configuration to score alongside the search result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub base_position: [f64; 3],
    pub base_orientation: [f64; 3],
    pub grab_angle: f64,
    pub rotation_convention: RotationConvention,
}

impl ReferenceConfig {
    pub fn to_setup(self) -> Result<SetupConfiguration> {
        let rotvec = match self.rotation_convention {
            RotationConvention::RotationVector => Vector3::from(self.base_orientation),
            RotationConvention::EulerXyz => {
                let [r, p, y] = self.base_orientation;
                nalgebra::UnitQuaternion::from_euler_angles(r, p, y).scaled_axis()
            }
        };
        SetupConfiguration::new(Vector3::from(self.base_position), rotvec, self.grab_angle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeSetupParams {
    pub human: HumanModel,
    pub sampler: SamplerConfig,
    pub bounds: Bounds,
    pub budget: usize,
    pub population: usize,
    pub weights: Weights,
    pub ik: IkOptions,
    /// Score this configuration with the same metrics and echo it in the
    /// report (None skips the comparison).
    pub reference: Option<ReferenceConfig>,
}

impl Default for OptimizeSetupParams {
    fn default() -> Self {
        OptimizeSetupParams {
            human: HumanModel::default(),
            sampler: SamplerConfig::default(),
            bounds: Bounds {
                lower: [-0.7, -0.5, -0.3, -3.1, -3.1, -3.1, -3.1],
                upper: [0.4, 0.6, 0.7, 3.1, 3.1, 3.1, 3.1],
            },
            budget: 600,
            population: 16,
            weights: Weights::default(),
            ik: IkOptions::default(),
            reference: None,
        }
    }
}

impl OptimizeSetupParams {
    pub fn validate(&self, _model: &RobotModel) -> Result<()> {
        self.bounds.validate()?;
        self.human.validate()?;
        if self.budget == 0 || self.population == 0 {
            return Err(Error::InvalidConfig("budget and population must be > 0".into()));
        }
        if let Some(r) = &self.reference {
            r.to_setup()?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct ConfigReport {
    base_position: [f64; 3],
    base_rotation_vector: [f64; 3],
    base_rotation_quaternion: [f64; 4],
    grab_angle: f64,
    breakdown: ScoreBreakdown,
}

fn config_report(cfg: &SetupConfiguration, breakdown: ScoreBreakdown) -> ConfigReport {
    let q = cfg.rotation_quaternion();
    let qq = q.quaternion();
    ConfigReport {
        base_position: [cfg.base_position.x, cfg.base_position.y, cfg.base_position.z],
        base_rotation_vector: [cfg.base_rotation.x, cfg.base_rotation.y, cfg.base_rotation.z],
        base_rotation_quaternion: [qq.w, qq.i, qq.j, qq.k],
        grab_angle: cfg.grab_angle,
        breakdown,
    }
}

#[derive(Debug, Serialize)]
struct OptimizeReport {
    seed: u64,
    budget: usize,
    resolved_weights: Weights,
    best: ConfigReport,
    /// Echo of the reference inputs exactly as parsed, plus its score.
    reference_input: Option<ReferenceConfig>,
    reference: Option<ConfigReport>,
    evaluations: usize,
}

pub(super) fn run(
    scenario: &Scenario,
    model: &RobotModel,
    params: &OptimizeSetupParams,
    out_dir: &Path,
) -> Result<RunOutcome> {
    params.validate(model)?;
    let samples = sample_human_workspace(&params.human, &params.sampler)?;
    let opt_params = OptimizeParams {
        bounds: params.bounds,
        budget: params.budget,
        seed: scenario.seed,
        population: params.population,
        weights: params.weights,
        ik: params.ik,
    };
    let outcome = optimize(model, &params.human, &samples, &opt_params)?;

    let mut checks = vec![CheckResult::new(
        "search produced a finite best score",
        outcome.breakdown.total.is_finite(),
        format!("total = {}", outcome.breakdown.total),
    )];

    let reference_scored = match &params.reference {
        None => None,
        Some(r) => {
            let cfg = r.to_setup()?;
            let b = evaluate(
                model,
                &cfg,
                &samples,
                &params.human,
                &outcome.resolved_weights,
                &params.ik,
            )?;
            checks.push(CheckResult::new(
                "reference config: finite breakdown",
                b.total.is_finite()
                    && b.coverage.is_finite()
                    && b.dexterity.is_finite()
                    && b.wrench_feasibility.is_finite()
                    && b.collision_penalty.is_finite(),
                format!("total = {}", b.total),
            ));
            checks.push(CheckResult::new(
                "reference config: nonzero workspace coverage",
                b.coverage > 0.0,
                format!("coverage = {}", b.coverage),
            ));
            checks.push(CheckResult::new(
                "reference config: no hard interpenetration",
                !b.hard_infeasible,
                format!("collision penalty = {}", b.collision_penalty),
            ));
            Some((cfg, b))
        }
    };

    let report = OptimizeReport {
        seed: scenario.seed,
        budget: params.budget,
        resolved_weights: outcome.resolved_weights,
        best: config_report(&outcome.best, outcome.breakdown),
        reference_input: params.reference,
        reference: reference_scored.map(|(cfg, b)| config_report(&cfg, b)),
        evaluations: outcome.history.len(),
    };
    let report_path = out_dir.join("report.json");
    super::write_json(&report_path, &report)?;

    let history_path = out_dir.join("history.csv");
    {
        let mut w = csv::Writer::from_writer(super::create_file(&history_path)?);
        w.write_record(["eval_index", "total", "coverage", "dexterity", "wrench", "collision"])?;
        for row in &outcome.history {
            w.write_record([
                row.eval_index.to_string(),
                crate::fjr::fmt_float(row.total),
                crate::fjr::fmt_float(row.coverage),
                crate::fjr::fmt_float(row.dexterity),
                crate::fjr::fmt_float(row.wrench),
                crate::fjr::fmt_float(row.collision),
            ])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: history_path.display().to_string(),
            source,
        })?;
    }

    Ok(RunOutcome {
        outputs: vec![report_path, history_path],
        checks,
    })
}
