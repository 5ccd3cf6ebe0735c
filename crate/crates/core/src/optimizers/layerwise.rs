//! Layer-by-layer growth of the ansatz.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cobyla_style, dual_annealing, Bounds, CobylaParams, DaParams, Evaluator, OptResult, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerwiseDriver {
    /// Only the newest layer is optimised.
    Frozen,
    /// Every layer is re-optimised after each addition.
    Unfrozen,
    /// All layers of the target depth at once.
    Fixed,
}

impl LayerwiseDriver {
    pub fn name(&self) -> &'static str {
        match self {
            LayerwiseDriver::Frozen => "frozen",
            LayerwiseDriver::Unfrozen => "unfrozen",
            LayerwiseDriver::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerOptimizer {
    DualAnnealing(DaParams),
    Cobyla(CobylaParams),
}

impl InnerOptimizer {
    pub fn name(&self) -> &'static str {
        match self {
            InnerOptimizer::DualAnnealing(_) => "dual_annealing",
            InnerOptimizer::Cobyla(_) => "cobyla",
        }
    }

    /// Runs on `eval` from `x0`.
    pub fn run<R: Rng + ?Sized>(&self, eval: &mut Evaluator<'_>, bounds: &Bounds, x0: &[f64], rng: &mut R) {
        match self {
            InnerOptimizer::DualAnnealing(p) => dual_annealing(eval, bounds, Some(x0), *p, rng),
            InnerOptimizer::Cobyla(p) => {
                cobyla_style(eval, bounds, x0, *p);
            }
        }
    }
}

/// Parameters after optimising a circuit with `p` layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub p: usize,
    /// Ansatz layout: gammas, then betas layer by layer.
    pub params: Vec<f64>,
    pub best_estimate: f64,
    pub estimations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseResult {
    pub stages: Vec<Stage>,
    pub result: OptResult,
}

/// Converts layer-major `[g1, b1.., g2, b2..]` into the ansatz layout.
pub fn to_ansatz_layout(layers: &[Vec<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = layers.iter().map(|l| l[0]).collect();
    for l in layers {
        out.extend_from_slice(&l[1..]);
    }
    out
}

/// Grows the circuit to `target_p` layers (or optimises it directly for
/// [`LayerwiseDriver::Fixed`]). Each stage gets `per_layer_budget`
/// estimations; the fixed driver gets `per_layer_budget * target_p`.
/// `objective` receives parameters in the ansatz layout.
#[allow(clippy::too_many_arguments)]
pub fn layerwise<R: Rng + ?Sized>(
    driver: LayerwiseDriver,
    target_p: usize,
    params_per_layer: usize,
    inner: InnerOptimizer,
    per_layer_budget: usize,
    shots: usize,
    objective: &mut dyn FnMut(&[f64], u64) -> f64,
    rng: &mut R,
    seed: u64,
) -> LayerwiseResult {
    assert!(target_p >= 1 && params_per_layer >= 2);
    let random_layer = |rng: &mut R| -> Vec<f64> {
        (0..params_per_layer).map(|_| rng.random_range(0.0..=TAU)).collect()
    };
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut stages = Vec::new();

    let mut run_stage = |layers: &mut Vec<Vec<f64>>, free_from: usize, budget: usize, rng: &mut R, trace: &mut Vec<TraceRow>| {
        let fixed: Vec<Vec<f64>> = layers[..free_from].to_vec();
        let p = layers.len();
        let x0: Vec<f64> = layers[free_from..].concat();
        let dim = x0.len();
        let mut wrapped = |x: &[f64], index: u64| {
            let mut all = fixed.clone();
            all.extend(x.chunks(params_per_layer).map(|c| c.to_vec()));
            objective(&to_ansatz_layout(&all), index)
        };
        let offset_index = trace.len() as u64;
        let offset_shots = trace.last().map_or(0, |r| r.cumulative_shots);
        let mut eval = Evaluator::continuing(&mut wrapped, shots, budget, offset_index, offset_shots);
        inner.run(&mut eval, &Bounds::angles(dim), &x0, rng);
        let stage = eval.into_result(seed);
        let mut best_layers = fixed.clone();
        best_layers.extend(stage.best_params.chunks(params_per_layer).map(|c| c.to_vec()));
        *layers = best_layers;
        let out = Stage {
            p,
            params: to_ansatz_layout(layers),
            best_estimate: stage.best_estimate,
            estimations: stage.estimations,
        };
        // Stored parameters are the optimiser's coordinates; map to full vectors.
        for mut row in stage.trace {
            let mut all = fixed.clone();
            all.extend(row.params.chunks(params_per_layer).map(|c| c.to_vec()));
            row.params = to_ansatz_layout(&all);
            trace.push(row);
        }
        out
    };

    match driver {
        LayerwiseDriver::Fixed => {
            let mut layers: Vec<Vec<f64>> = (0..target_p).map(|_| random_layer(rng)).collect();
            stages.push(run_stage(&mut layers, 0, per_layer_budget * target_p, rng, &mut trace));
        }
        LayerwiseDriver::Frozen | LayerwiseDriver::Unfrozen => {
            let mut layers = vec![random_layer(rng)];
            stages.push(run_stage(&mut layers, 0, per_layer_budget, rng, &mut trace));
            for _ in 2..=target_p {
                layers.push(vec![0.0; params_per_layer]);
                let free_from = if driver == LayerwiseDriver::Frozen {
                    layers.len() - 1
                } else {
                    0
                };
                stages.push(run_stage(&mut layers, free_from, per_layer_budget, rng, &mut trace));
            }
        }
    }
    let result = OptResult::from_trace(trace, seed);
    LayerwiseResult { stages, result }
}
