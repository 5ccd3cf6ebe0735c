//! Browser bindings: landscape scan, output distribution and feasible-set
//! counts for small synthetic instances.
//!
//! The plain functions do the work and are testable natively; the
//! `#[wasm_bindgen]` wrappers only convert errors to strings.

use std::f64::consts::{FRAC_PI_4, TAU};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use dgmvp::circuits::{Ansatz, InitialState, InitialStateKind, MixerSpec};
use dgmvp::encoding::{feasible_count, feasible_indices, unconstrained_count, EncodingSpec};
use dgmvp::hamiltonian::{build_cost_model, CostModel};
use dgmvp::market::synthetic_covariance;
use dgmvp::metrics::ground_truth;

/// Keeps the page responsive.
const MAX_DEMO_QUBITS: usize = 12;

fn instance(n: usize, l: usize, seed: u64, initial: &str) -> Result<(CostModel, Ansatz), String> {
    let spec = EncodingSpec::new(n, l).map_err(|e| e.to_string())?;
    if spec.qubits() > MAX_DEMO_QUBITS {
        return Err(format!("demo is limited to {MAX_DEMO_QUBITS} qubits"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = synthetic_covariance(&mut rng, n, 2);
    let model = build_cost_model(&spec, &sigma).map_err(|e| e.to_string())?;
    let kind = match initial {
        "maxbias" => InitialStateKind::Maxbias,
        "warm_started" => InitialStateKind::WarmStarted,
        "equal_weighted" => InitialStateKind::EqualWeighted,
        "random_weighted" => InitialStateKind::RandomWeighted,
        other => return Err(format!("unknown initial state `{other}`")),
    };
    let init = InitialState::resolve(kind, &spec, &sigma, &mut rng).map_err(|e| e.to_string())?;
    let ansatz = Ansatz::new(&model, MixerSpec::new(1), init).map_err(|e| e.to_string())?;
    Ok((model, ansatz))
}

#[derive(Debug, Serialize)]
pub struct Scan {
    pub betas: Vec<f64>,
    /// Normalised `<C>`: 0 at the cheapest feasible portfolio, 1 at the dearest.
    pub alpha: Vec<f64>,
}

/// `<C>` against `beta_1` on `[0, 2 pi]`, every other angle at `pi/4`.
pub fn scan_beta(n: usize, l: usize, p: usize, seed: u64, initial: &str, points: usize) -> Result<Scan, String> {
    if p == 0 || points < 2 {
        return Err("need p >= 1 and at least two points".into());
    }
    let (model, ansatz) = instance(n, l, seed, initial)?;
    let truth = ground_truth(&model).map_err(|e| e.to_string())?;
    let mut params = vec![FRAC_PI_4; p * ansatz.params_per_layer()];
    let mut betas = Vec::with_capacity(points);
    let mut alpha = Vec::with_capacity(points);
    for i in 0..points {
        let b = TAU * i as f64 / (points - 1) as f64;
        params[p] = b;
        let e = ansatz.expectation(&params).map_err(|e| e.to_string())?;
        betas.push(b);
        alpha.push(truth.normalize(e));
    }
    Ok(Scan { betas, alpha })
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub bits: String,
    pub lots: Vec<u64>,
    pub cost: f64,
    pub probability: f64,
    pub optimal: bool,
}

/// Feasible outcomes of a one-layer circuit, cheapest first.
pub fn distribution(n: usize, l: usize, seed: u64, initial: &str, gamma: f64, beta: f64) -> Result<Vec<Outcome>, String> {
    let (model, ansatz) = instance(n, l, seed, initial)?;
    let truth = ground_truth(&model).map_err(|e| e.to_string())?;
    let state = ansatz.state(&[gamma, beta]).map_err(|e| e.to_string())?;
    let spec = *model.spec();
    let amps = state.amplitudes();
    let mut out: Vec<Outcome> = feasible_indices(&spec)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|i| Outcome {
            bits: dgmvp::encoding::BitString::from_index(i, spec.qubits()).to_string(),
            lots: (0..n).map(|t| spec.lots_of_index(i, t)).collect(),
            cost: model.cost_of_index(i),
            probability: amps[i as usize].norm_sqr(),
            optimal: truth.is_argmin(i),
        })
        .collect();
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct CountRow {
    pub n: usize,
    pub l: usize,
    pub feasible: String,
    pub unconstrained: String,
}

pub fn counts(n_max: usize, l_max: usize) -> Vec<CountRow> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for l in 1..=l_max {
            rows.push(CountRow {
                n,
                l,
                feasible: feasible_count(n, l).to_string(),
                unconstrained: unconstrained_count(n, l).to_string(),
            });
        }
    }
    rows
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = scanBeta)]
pub fn scan_beta_js(n: usize, l: usize, p: usize, seed: u32, initial: &str, points: usize) -> Result<String, JsValue> {
    let scan = scan_beta(n, l, p, seed as u64, initial, points).map_err(|e| JsValue::from_str(&e))?;
    to_json(&scan)
}

#[wasm_bindgen(js_name = outputDistribution)]
pub fn distribution_js(n: usize, l: usize, seed: u32, initial: &str, gamma: f64, beta: f64) -> Result<String, JsValue> {
    let d = distribution(n, l, seed as u64, initial, gamma, beta).map_err(|e| JsValue::from_str(&e))?;
    to_json(&d)
}

#[wasm_bindgen(js_name = feasibleCounts)]
pub fn counts_js(n_max: usize, l_max: usize) -> Result<String, JsValue> {
    to_json(&counts(n_max.min(12), l_max.min(8)))
}
