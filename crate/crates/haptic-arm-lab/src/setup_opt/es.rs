//! Deterministic derivative-free maximizer: a (μ/μ_w, λ) evolution strategy
//! with rank-based recombination and a success-rule step-size adaptation,
//! over a box-bounded search space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsParams {
    /// Candidates per generation.
    pub population: usize,
    /// Total objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Initial step size as a fraction of each box width.
    pub initial_step_fraction: f64,
}

impl Default for EsParams {
    fn default() -> Self {
        EsParams {
            population: 16,
            budget: 800,
            seed: 0,
            initial_step_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EsResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Every evaluated candidate in evaluation order.
    pub history: Vec<(Vec<f64>, f64)>,
}

/// Maximize `f` over the box `[lower, upper]`. Same seed, same history.
pub fn maximize<F>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    params: &EsParams,
) -> Result<EsResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = lower.len();
    if dim == 0 || upper.len() != dim {
        return Err(Error::InvalidConfig("empty or mismatched bounds".into()));
    }
    for i in 0..dim {
        if !(lower[i] < upper[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
            return Err(Error::InvalidConfig(format!(
                "invalid bounds on variable {i}: [{}, {}]",
                lower[i], upper[i]
            )));
        }
    }
    if params.budget == 0 || params.population == 0 {
        return Err(Error::InvalidConfig("budget and population must be > 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let lambda = params.population;
    let mu = (lambda / 2).max(1);
    // Logarithmic rank weights.
    let mut weights: Vec<f64> = (0..mu)
        .map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }

    let width: Vec<f64> = (0..dim).map(|i| upper[i] - lower[i]).collect();
    let mut mean: Vec<f64> = (0..dim).map(|i| 0.5 * (lower[i] + upper[i])).collect();
    let mut sigma: Vec<f64> = width
        .iter()
        .map(|w| w * params.initial_step_fraction)
        .collect();

    let mut history = Vec::with_capacity(params.budget);
    let mut best_x = mean.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut evals = 0usize;

    'outer: loop {
        let mut generation: Vec<(Vec<f64>, f64)> = Vec::with_capacity(lambda);
        let mut improved = false;
        for _ in 0..lambda {
            if evals >= params.budget {
                break;
            }
            let x: Vec<f64> = (0..dim)
                .map(|i| {
                    let z: f64 = sample_standard_normal(&mut rng);
                    (mean[i] + sigma[i] * z).clamp(lower[i], upper[i])
                })
                .collect();
            let v = f(&x);
            evals += 1;
            if v > best_value {
                best_value = v;
                best_x = x.clone();
                improved = true;
            }
            history.push((x.clone(), v));
            generation.push((x, v));
        }
        if generation.is_empty() {
            break 'outer;
        }
        generation.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let take = mu.min(generation.len());
        let mut new_mean = vec![0.0; dim];
        let mut wacc = 0.0;
        for (rank, (x, _)) in generation.iter().take(take).enumerate() {
            let w = weights[rank];
            wacc += w;
            for i in 0..dim {
                new_mean[i] += w * x[i];
            }
        }
        if wacc > 0.0 {
            for m in &mut new_mean {
                *m /= wacc;
            }
            mean = new_mean;
        }
        // Success rule: expand on improvement, contract otherwise.
        let factor = if improved { 1.15 } else { 0.82 };
        for (s, w) in sigma.iter_mut().zip(&width) {
            *s = (*s * factor).clamp(1e-9 * w, *w);
        }
        if evals >= params.budget {
            break 'outer;
        }
    }

    Ok(EsResult {
        best_x,
        best_value,
        history,
    })
}

/// Box-Muller from two uniform draws; keeps the dependency surface small and
/// the stream reproducible.
fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}
