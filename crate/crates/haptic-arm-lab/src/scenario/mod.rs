//! Scenario-driven experiment harness: JSON in, CSV/JSON out, exit code
//! carrying the in-scenario checks. Every run writes a `metadata.json`
//! with the fully resolved configuration; re-running from that metadata
//! reproduces all outputs bit-identically.

mod estimator_convergence;
mod friction_sweep;
mod optimize_setup;
mod reshape_step;
mod teleop_wall;

pub use estimator_convergence::EstimatorConvergenceParams;
pub use friction_sweep::FrictionSweepParams;
pub use optimize_setup::{OptimizeSetupParams, RotationConvention};
pub use reshape_step::ReshapeStepParams;
pub use teleop_wall::TeleopWallParams;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::control::{EstimatorConfig, ReshapeConfig, DEFAULT_COMPENSATION_FRACTION};
use crate::rigid_body::RobotModel;
use crate::{Error, Result};

/// Controller configuration block shared by all scenarios; every field is
/// overridable and echoed into the run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerBlock {
    /// Per-joint reshaping ratios; `None` uses the model's group defaults.
    pub ratios: Option<Vec<f64>>,
    /// Friction compensation fraction γ.
    pub gamma: f64,
    pub estimator: EstimatorConfig,
}

impl Default for ControllerBlock {
    fn default() -> Self {
        ControllerBlock {
            ratios: None,
            gamma: DEFAULT_COMPENSATION_FRACTION,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl ControllerBlock {
    pub fn reshape_config(&self, model: &RobotModel) -> Result<ReshapeConfig> {
        match &self.ratios {
            None => Ok(ReshapeConfig::from_model_groups(model)),
            Some(r) => {
                if r.len() != model.dof() {
                    return Err(Error::dim("controller ratios", model.dof(), r.len()));
                }
                ReshapeConfig::new(nalgebra::DVector::from_row_slice(r))
            }
        }
    }
}

/// A fully parsed scenario: the robot model reference, the mandatory seed,
/// the controller block, and kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Model reference: `builtin:<name>` or a JSON file path.
    pub model: String,
    /// Mandatory: no wall-clock entropy anywhere.
    pub seed: u64,
    #[serde(default)]
    pub gravity_override: Option<[f64; 3]>,
    #[serde(default)]
    pub controller: ControllerBlock,
    #[serde(flatten)]
    pub kind: ScenarioKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum ScenarioKind {
    FrictionSweep(FrictionSweepParams),
    ReshapeStep(ReshapeStepParams),
    OptimizeSetup(OptimizeSetupParams),
    TeleopWall(TeleopWallParams),
    EstimatorConvergence(EstimatorConvergenceParams),
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::FrictionSweep(_) => "friction-sweep",
            ScenarioKind::ReshapeStep(_) => "reshape-step",
            ScenarioKind::OptimizeSetup(_) => "optimize-setup",
            ScenarioKind::TeleopWall(_) => "teleop-wall",
            ScenarioKind::EstimatorConvergence(_) => "estimator-convergence",
        }
    }
}

/// The scenario kinds the CLI can list.
pub fn list_kinds() -> &'static [(&'static str, &'static str)] {
    &[
        (
            "friction-sweep",
            "velocity vs. interaction-torque curves for the four compensation modes",
        ),
        (
            "reshape-step",
            "identify apparent motor inertia under reshaping ratios",
        ),
        (
            "optimize-setup",
            "search base placement and grab angle; optional reference-config comparison",
        ),
        (
            "teleop-wall",
            "bilateral session against a virtual wall with scripted approach-press-retract",
        ),
        (
            "estimator-convergence",
            "friction estimates across zero-energy events, with an optional mid-run step",
        ),
    ]
}

/// One named in-scenario check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything a scenario run leaves behind.
#[derive(Debug)]
pub struct RunOutcome {
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<CheckResult>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Load a scenario file; accepts either a plain scenario or a previously
/// emitted `metadata.json` (re-running from metadata reproduces the run).
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    scenario_from_json(&path.display().to_string(), &text)
}

pub fn scenario_from_json(origin: &str, text: &str) -> Result<Scenario> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse {
            file: origin.to_string(),
            field_path: "<root>".into(),
            detail: e.to_string(),
        })?;
    let inner = match value.get("scenario") {
        Some(s) if value.get("artifact_version").is_some() => s.clone(),
        _ => value,
    };
    deserialize_scenario(origin, inner)
}

pub fn deserialize_scenario(origin: &str, value: serde_json::Value) -> Result<Scenario> {
    let de = value;
    serde_path_to_error::deserialize(de).map_err(|e: serde_path_to_error::Error<serde_json::Error>| {
        Error::Parse {
            file: origin.to_string(),
            field_path: e.path().to_string(),
            detail: e.inner().to_string(),
        }
    })
}

/// Static validation: referenced paths exist, model loads, parameters are
/// internally consistent.
pub fn validate_scenario(scenario: &Scenario) -> Result<()> {
    let model = resolve_model(scenario)?;
    match &scenario.kind {
        ScenarioKind::FrictionSweep(p) => p.validate(&model),
        ScenarioKind::ReshapeStep(p) => p.validate(&model),
        ScenarioKind::OptimizeSetup(p) => p.validate(&model),
        ScenarioKind::TeleopWall(p) => p.validate(&model),
        ScenarioKind::EstimatorConvergence(p) => p.validate(&model),
    }
}

/// Resolve the model and apply the gravity override.
pub fn resolve_model(scenario: &Scenario) -> Result<RobotModel> {
    let mut model = RobotModel::resolve(&scenario.model)?;
    if let Some(g) = scenario.gravity_override {
        model.gravity = Vector3::from(g);
    }
    Ok(model)
}

/// Run a scenario, writing outputs plus `metadata.json` into `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let model = resolve_model(scenario)?;
    let mut outcome = match &scenario.kind {
        ScenarioKind::FrictionSweep(p) => friction_sweep::run(scenario, &model, p, out_dir)?,
        ScenarioKind::ReshapeStep(p) => reshape_step::run(scenario, &model, p, out_dir)?,
        ScenarioKind::OptimizeSetup(p) => optimize_setup::run(scenario, &model, p, out_dir)?,
        ScenarioKind::TeleopWall(p) => teleop_wall::run(scenario, &model, p, out_dir)?,
        ScenarioKind::EstimatorConvergence(p) => {
            estimator_convergence::run(scenario, &model, p, out_dir)?
        }
    };
    let meta_path = write_metadata(scenario, out_dir)?;
    outcome.outputs.push(meta_path);
    Ok(outcome)
}

#[derive(Serialize)]
struct Metadata<'a> {
    artifact_version: &'static str,
    scenario: &'a Scenario,
}

fn write_metadata(scenario: &Scenario, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("metadata.json");
    let meta = Metadata {
        artifact_version: env!("CARGO_PKG_VERSION"),
        scenario,
    };
    write_json(&path, &meta)?;
    Ok(path)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        field_path: "<serialize>".into(),
        detail: e.to_string(),
    })?;
    let mut f = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

pub(crate) fn create_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Apply a dotted-path override (`a.b.c=value`) to a raw scenario JSON
/// value. Values parse as JSON when possible, else as strings.
pub fn apply_override(root: &mut serde_json::Value, key: &str, raw: &str) -> Result<()> {
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if last {
            match cursor {
                serde_json::Value::Object(map) => {
                    map.insert(part.to_string(), parsed);
                    return Ok(());
                }
                serde_json::Value::Array(arr) => {
                    let idx: usize = part.parse().map_err(|_| {
                        Error::InvalidConfig(format!("override index '{part}' is not a number"))
                    })?;
                    if idx >= arr.len() {
                        return Err(Error::InvalidConfig(format!(
                            "override index {idx} out of bounds"
                        )));
                    }
                    arr[idx] = parsed;
                    return Ok(());
                }
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "override path '{key}' does not address an object"
                    )))
                }
            }
        }
        cursor = match cursor {
            serde_json::Value::Object(map) => map
                .entry(part.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default())),
            serde_json::Value::Array(arr) => {
                let idx: usize = part.parse().map_err(|_| {
                    Error::InvalidConfig(format!("override index '{part}' is not a number"))
                })?;
                arr.get_mut(idx).ok_or_else(|| {
                    Error::InvalidConfig(format!("override index {idx} out of bounds"))
                })?
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "override path '{key}' hit a scalar before its end"
                )))
            }
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_sets_nested_values() {
        let mut v: serde_json::Value = serde_json::json!({
            "seed": 1,
            "params": {"velocities": [0.1, 0.2]}
        });
        apply_override(&mut v, "seed", "42").unwrap();
        apply_override(&mut v, "params.velocities.1", "0.9").unwrap();
        apply_override(&mut v, "model", "builtin:pendulum1").unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["params"]["velocities"][1], 0.9);
        assert_eq!(v["model"], "builtin:pendulum1");
    }

    #[test]
    fn scenario_requires_seed() {
        let text = r#"{
            "model": "builtin:pendulum1",
            "kind": "reshape-step",
            "params": {}
        }"#;
        let err = scenario_from_json("inline", text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn metadata_wrapper_unwraps() {
        let text = r#"{
            "artifact_version": "0.1.0",
            "scenario": {
                "model": "builtin:pendulum1",
                "seed": 7,
                "kind": "reshape-step",
                "params": {}
            }
        }"#;
        let s = scenario_from_json("inline", text).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.kind.name(), "reshape-step");
    }
}
