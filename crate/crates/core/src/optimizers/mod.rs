//! Shot-budgeted objective evaluation and the classical optimisers.

mod cobyla;
mod dual_annealing;
mod layerwise;
mod nelder_mead;

use std::f64::consts::TAU;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cobyla::{cobyla_style, CobylaParams};
pub use dual_annealing::{dual_annealing, DaParams};
pub use layerwise::{layerwise, InnerOptimizer, LayerwiseDriver, LayerwiseResult, Stage};
pub use nelder_mead::{nelder_mead, NelderMeadParams};

use crate::circuits::Ansatz;
use crate::error::Result;
use crate::simulator::Sampler;

/// Shots per estimate, estimate cap and post-optimisation shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotBudget {
    pub shots_per_estimate: usize,
    pub max_estimations: usize,
    pub final_shots: usize,
}

impl Default for ShotBudget {
    fn default() -> Self {
        Self {
            shots_per_estimate: 16,
            max_estimations: 2000,
            final_shots: 65536,
        }
    }
}

/// Box constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    /// `[0, 2 pi]` in every coordinate.
    pub fn angles(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![TAU; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clip(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub eval_index: u64,
    pub params: Vec<f64>,
    pub estimate: f64,
    pub shots: usize,
    pub cumulative_shots: u64,
}

/// Counts and records objective calls against a soft cap.
pub struct Evaluator<'a> {
    objective: &'a mut dyn FnMut(&[f64], u64) -> f64,
    shots: usize,
    cap: usize,
    used: usize,
    index_offset: u64,
    shots_offset: u64,
    trace: Vec<TraceRow>,
}

impl<'a> Evaluator<'a> {
    /// `objective(params, eval_index)`; `shots` is what one call costs.
    pub fn new(objective: &'a mut dyn FnMut(&[f64], u64) -> f64, shots: usize, cap: usize) -> Self {
        Self::continuing(objective, shots, cap, 0, 0)
    }

    /// Starts numbering evaluations after an earlier run.
    pub fn continuing(
        objective: &'a mut dyn FnMut(&[f64], u64) -> f64,
        shots: usize,
        cap: usize,
        index_offset: u64,
        shots_offset: u64,
    ) -> Self {
        Self {
            objective,
            shots,
            cap,
            used: 0,
            index_offset,
            shots_offset,
            trace: Vec::new(),
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> f64 {
        let index = self.index_offset + self.used as u64;
        let estimate = (self.objective)(x, index);
        self.used += 1;
        self.trace.push(TraceRow {
            eval_index: index,
            params: x.to_vec(),
            estimate,
            shots: self.shots,
            cumulative_shots: self.shots_offset + (self.used * self.shots) as u64,
        });
        estimate
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.cap.saturating_sub(self.used)
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.cap
    }

    pub fn into_result(self, seed: u64) -> OptResult {
        OptResult::from_trace(self.trace, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_estimate: f64,
    pub estimations: usize,
    pub function_accesses: u64,
    pub seed: u64,
    pub trace: Vec<TraceRow>,
}

impl OptResult {
    pub fn from_trace(trace: Vec<TraceRow>, seed: u64) -> Self {
        let best = trace
            .iter()
            .filter(|r| r.estimate.is_finite())
            .min_by(|a, b| a.estimate.total_cmp(&b.estimate));
        let (best_params, best_estimate) = match best {
            Some(r) => (r.params.clone(), r.estimate),
            None => (Vec::new(), f64::INFINITY),
        };
        Self {
            best_params,
            best_estimate,
            estimations: trace.len(),
            function_accesses: trace.iter().map(|r| r.shots as u64).sum(),
            seed,
            trace,
        }
    }

    /// CSV rows `eval_index, p0.., estimate, cumulative_N_f`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.trace.iter().map(|r| r.params.len()).max().unwrap_or(0);
        let mut header = vec!["eval_index".to_string()];
        header.extend((0..dim).map(|i| format!("param_{i}")));
        header.push("estimate".into());
        header.push("cumulative_n_f".into());
        w.write_record(&header)?;
        for row in &self.trace {
            let mut rec = vec![row.eval_index.to_string()];
            rec.extend((0..dim).map(|i| {
                row.params.get(i).map_or(String::new(), |v| format!("{v:.17e}"))
            }));
            rec.push(format!("{:.17e}", row.estimate));
            rec.push(row.cumulative_shots.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deterministic generator for evaluation `index` under `seed`.
pub fn eval_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sample mean of the cost over `shots` measurements of the ansatz state.
pub fn estimate_expectation(ansatz: &Ansatz, params: &[f64], shots: usize, seed: u64, index: u64) -> Result<f64> {
    let state = ansatz.state(params)?;
    let sampler = Sampler::new(&state);
    let mut rng = eval_rng(seed, index);
    let costs = ansatz.costs();
    let total: f64 = (0..shots).map(|_| costs[sampler.draw(&mut rng) as usize]).sum();
    Ok(total / shots as f64)
}

/// Builds the shot-noise objective for an ansatz.
pub fn sampled_objective(ansatz: &Ansatz, shots: usize, seed: u64) -> impl FnMut(&[f64], u64) -> f64 + '_ {
    move |x, index| estimate_expectation(ansatz, x, shots, seed, index).unwrap_or(f64::INFINITY)
}

/// Exact `<C>` objective; useful as a noiseless reference.
pub fn exact_objective(ansatz: &Ansatz) -> impl FnMut(&[f64], u64) -> f64 + '_ {
    move |x, _| ansatz.expectation(x).unwrap_or(f64::INFINITY)
}
