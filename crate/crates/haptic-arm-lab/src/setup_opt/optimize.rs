use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::es::{maximize, EsParams};
use super::metrics::{dexterity_score, evaluate};
use super::{HumanModel, IkOptions, ScoreBreakdown, SetupConfiguration, Weights, WorkspaceSample};
use crate::rigid_body::RobotModel;
use crate::{Error, Result};

/// Box bounds over the 7 design variables: base position (3), base rotation
/// vector (3), grab angle (1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: [f64; 7],
    pub upper: [f64; 7],
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for i in 0..7 {
            if !(self.lower[i] < self.upper[i])
                || !self.lower[i].is_finite()
                || !self.upper[i].is_finite()
            {
                return Err(Error::InvalidConfig(format!(
                    "bounds variable {i}: [{}, {}] is empty or non-finite",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        let pi = std::f64::consts::PI;
        for i in 3..7 {
            if self.lower[i] < -pi - 1e-9 || self.upper[i] > pi + 1e-9 {
                return Err(Error::InvalidConfig(
                    "rotation-vector and grab-angle bounds must lie within [-π, π]".into(),
                ));
            }
        }
        Ok(())
    }

    /// Shift only the positional block (used by the equivariance tests and
    /// the mirrored bimanual setup).
    pub fn translated(&self, offset: Vector3<f64>) -> Bounds {
        let mut b = *self;
        for i in 0..3 {
            b.lower[i] += offset[i];
            b.upper[i] += offset[i];
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeParams {
    pub bounds: Bounds,
    /// Total objective evaluations (calibration included).
    pub budget: usize,
    pub seed: u64,
    pub population: usize,
    pub weights: Weights,
    pub ik: IkOptions,
}

impl OptimizeParams {
    pub fn new(bounds: Bounds, budget: usize, seed: u64) -> Self {
        OptimizeParams {
            bounds,
            budget,
            seed,
            population: 16,
            weights: Weights::default(),
            ik: IkOptions::default(),
        }
    }
}

/// One evaluated candidate, in evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub eval_index: usize,
    pub total: f64,
    pub coverage: f64,
    pub dexterity: f64,
    pub wrench: f64,
    pub collision: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub best: SetupConfiguration,
    pub breakdown: ScoreBreakdown,
    pub history: Vec<HistoryRow>,
    /// Weights with `dexterity_scale` resolved (echoed into reports).
    pub resolved_weights: Weights,
}

/// Search the setup-configuration box for the best-scoring placement.
///
/// If `weights.dexterity_scale` is `None` it is calibrated first: the raw
/// dexterity of a seeded uniform candidate population is measured and its
/// maximum becomes the normalization scale. Calibration evaluations count
/// against the budget. Deterministic per seed. The returned best never
/// carries a hard interpenetration if any evaluated candidate avoided one.
pub fn optimize(
    model: &RobotModel,
    hm: &HumanModel,
    samples: &[WorkspaceSample],
    params: &OptimizeParams,
) -> Result<OptimizeOutcome> {
    params.bounds.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no workspace samples".into()));
    }
    let mut weights = params.weights;
    let mut remaining = params.budget;

    if weights.dexterity_scale.is_none() {
        let calib = params.population.min(remaining.saturating_sub(1)).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut max_dex: f64 = 0.0;
        for _ in 0..calib {
            let x: Vec<f64> = (0..7)
                .map(|i| rng.random_range(params.bounds.lower[i]..params.bounds.upper[i]))
                .collect();
            let cfg = SetupConfiguration::from_slice(&x)?;
            max_dex = max_dex.max(dexterity_score(model, &cfg, samples, &params.ik)?);
        }
        weights.dexterity_scale = Some(max_dex.max(1e-9));
        remaining -= calib;
    }

    let mut history: Vec<HistoryRow> = Vec::with_capacity(remaining);
    // Best candidate under the "no interpenetration if avoidable" rule.
    let mut best: Option<(SetupConfiguration, ScoreBreakdown)> = None;

    {
        let mut record = |cfg: &SetupConfiguration, b: &ScoreBreakdown, idx: usize| {
            history.push(HistoryRow {
                eval_index: idx,
                total: b.total,
                coverage: b.coverage,
                dexterity: b.dexterity,
                wrench: b.wrench_feasibility,
                collision: b.collision_penalty,
            });
            let better = match &best {
                None => true,
                Some((_, cur)) => match (b.hard_infeasible, cur.hard_infeasible) {
                    (false, true) => true,
                    (true, false) => false,
                    _ => b.total > cur.total,
                },
            };
            if better {
                best = Some((*cfg, *b));
            }
        };

        let mut idx = 0usize;
        let es_params = EsParams {
            population: params.population,
            budget: remaining,
            seed: params.seed,
            ..Default::default()
        };
        maximize(
            |x| {
                let cfg = SetupConfiguration::from_slice(x).expect("bounds keep configs valid");
                let b = evaluate(model, &cfg, samples, hm, &weights, &params.ik)
                    .expect("evaluation is total over the search box");
                record(&cfg, &b, idx);
                idx += 1;
                b.total
            },
            &params.bounds.lower,
            &params.bounds.upper,
            &es_params,
        )?;
    }

    let (best, breakdown) = best.ok_or_else(|| Error::InvalidConfig("budget exhausted before any evaluation".into()))?;
    Ok(OptimizeOutcome {
        best,
        breakdown,
        history,
        resolved_weights: weights,
    })
}
