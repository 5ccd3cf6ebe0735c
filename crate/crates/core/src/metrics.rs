//! Approximation ratios, global-minimum probabilities and scaling fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::encoding::feasible_indices;
use crate::error::{Error, Result};
use crate::hamiltonian::CostModel;
use crate::simulator::Statevector;

/// Amplitude-squared cutoff for a basis state to count as supported.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Costs within `1e-12 * max(1, |f|)` of each other are ties.
pub fn costs_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceGroundTruth {
    pub f_min: f64,
    pub f_max: f64,
    pub argmin: Vec<u64>,
    pub argmax: Vec<u64>,
}

impl InstanceGroundTruth {
    pub fn is_degenerate(&self) -> bool {
        costs_tie(self.f_min, self.f_max)
    }

    /// `(value - f_min) / (f_max - f_min)`; zero for degenerate instances.
    pub fn normalize(&self, value: f64) -> f64 {
        if self.is_degenerate() {
            log::warn!("degenerate instance: f_min == f_max, ratio defined as 0");
            return 0.0;
        }
        (value - self.f_min) / (self.f_max - self.f_min)
    }

    pub fn is_argmin(&self, index: u64) -> bool {
        self.argmin.binary_search(&index).is_ok()
    }
}

/// Exhaustive min and max over the feasible set.
pub fn ground_truth(model: &CostModel) -> Result<InstanceGroundTruth> {
    let indices = feasible_indices(model.spec())?;
    let costs: Vec<(u64, f64)> = indices.iter().map(|&i| (i, model.cost_of_index(i))).collect();
    let f_min = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let f_max = costs.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let mut argmin: Vec<u64> = costs.iter().filter(|c| costs_tie(c.1, f_min)).map(|c| c.0).collect();
    let mut argmax: Vec<u64> = costs.iter().filter(|c| costs_tie(c.1, f_max)).map(|c| c.0).collect();
    argmin.sort_unstable();
    argmax.sort_unstable();
    Ok(InstanceGroundTruth {
        f_min,
        f_max,
        argmin,
        argmax,
    })
}

/// Probability mass per basis index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Distribution {
    mass: BTreeMap<u64, f64>,
}

impl Distribution {
    /// Exact distribution of a state, dropping entries at or below the
    /// support threshold.
    pub fn from_state(state: &Statevector) -> Self {
        let mass = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| (i as u64, a.norm_sqr()))
            .filter(|(_, p)| *p > SUPPORT_THRESHOLD)
            .collect();
        Self { mass }
    }

    /// Empirical distribution of measured indices.
    pub fn from_samples(samples: &[u64]) -> Self {
        let mut mass = BTreeMap::new();
        for &s in samples {
            *mass.entry(s).or_insert(0.0) += 1.0;
        }
        let n = samples.len() as f64;
        mass.values_mut().for_each(|v| *v /= n);
        Self { mass }
    }

    pub fn from_masses(pairs: impl IntoIterator<Item = (u64, f64)>) -> Self {
        Self {
            mass: pairs.into_iter().filter(|(_, p)| *p > 0.0).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.mass.iter().map(|(&i, &p)| (i, p))
    }

    pub fn mass_of(&self, index: u64) -> f64 {
        self.mass.get(&index).copied().unwrap_or(0.0)
    }

    /// `(cost, mass)` sorted by ascending cost, ties by index.
    fn by_cost(&self, cost: &dyn Fn(u64) -> f64) -> Vec<(f64, f64)> {
        let mut v: Vec<(u64, f64, f64)> = self.iter().map(|(i, p)| (i, cost(i), p)).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(_, c, p)| (c, p)).collect()
    }
}

/// Mass-weighted mean cost, normalized.
pub fn alpha_mean(dist: &Distribution, cost: &dyn Fn(u64) -> f64, truth: &InstanceGroundTruth) -> f64 {
    alpha_mean_k(dist, cost, 100.0, truth)
}

/// Mean cost of the cheapest `k` percent of the mass, the boundary state
/// counted fractionally, normalized.
pub fn alpha_mean_k(dist: &Distribution, cost: &dyn Fn(u64) -> f64, k: f64, truth: &InstanceGroundTruth) -> f64 {
    assert!(k > 0.0 && k <= 100.0, "k must lie in (0, 100]");
    let total = dist.total();
    if total == 0.0 {
        return f64::NAN;
    }
    let target = total * k / 100.0;
    let mut taken = 0.0;
    let mut acc = 0.0;
    for (c, p) in dist.by_cost(cost) {
        let take = p.min(target - taken);
        if take <= 0.0 {
            break;
        }
        acc += take * c;
        taken += take;
    }
    truth.normalize(acc / taken)
}

/// Lowest cost present in the distribution, normalized.
pub fn alpha_min(dist: &Distribution, cost: &dyn Fn(u64) -> f64, truth: &InstanceGroundTruth) -> Result<f64> {
    let best = dist
        .iter()
        .map(|(i, _)| cost(i))
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    Ok(truth.normalize(best))
}

/// Mass on the global minimisers.
pub fn p_gm(dist: &Distribution, truth: &InstanceGroundTruth) -> f64 {
    truth.argmin.iter().map(|&i| dist.mass_of(i)).sum()
}

/// Mass on the cheapest states the distribution actually supports.
pub fn p_min(dist: &Distribution, cost: &dyn Fn(u64) -> f64) -> f64 {
    let best = dist.iter().map(|(i, _)| cost(i)).fold(f64::INFINITY, f64::min);
    dist.iter()
        .filter(|(i, _)| costs_tie(cost(*i), best))
        .map(|(_, p)| p)
        .sum()
}

/// Shots needed to see a global minimiser with probability `p_s`, never
/// fewer than one.
pub fn shots_for_success(p_gm: f64, p_s: f64) -> f64 {
    if p_gm <= 0.0 {
        return f64::INFINITY;
    }
    if p_gm >= 1.0 {
        return 1.0;
    }
    ((1.0 - p_s).ln() / (1.0 - p_gm).ln()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub b_stderr: f64,
    /// Half-width of the 95% interval on `b`.
    pub b_ci95: f64,
}

/// Least squares of `ln y = ln a + b ln x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument("power-law fit needs at least three points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidArgument("power-law fit needs positive data".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::InvalidArgument("all x values identical".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - ln_a - b * x).powi(2)).sum();
    let dof = n - 2.0;
    let b_stderr = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::NAN);
    Ok(PowerLawFit {
        a: ln_a.exp(),
        b,
        b_stderr,
        b_ci95: t * b_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSource {
    Sampled { shots: usize },
    ExactStatevector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub alpha_mean: f64,
    pub alpha_mean_5: f64,
    pub alpha_mean_20: f64,
    pub alpha_mean_100: f64,
    pub alpha_min: f64,
    pub p_min: f64,
    pub p_gm: f64,
    pub source: MetricSource,
}

impl MetricReport {
    pub fn from_distribution(
        dist: &Distribution,
        model: &CostModel,
        truth: &InstanceGroundTruth,
        source: MetricSource,
    ) -> Result<Self> {
        let cost = |i: u64| model.cost_of_index(i);
        Ok(Self {
            alpha_mean: alpha_mean(dist, &cost, truth),
            alpha_mean_5: alpha_mean_k(dist, &cost, 5.0, truth),
            alpha_mean_20: alpha_mean_k(dist, &cost, 20.0, truth),
            alpha_mean_100: alpha_mean_k(dist, &cost, 100.0, truth),
            alpha_min: alpha_min(dist, &cost, truth)?,
            p_min: p_min(dist, &cost),
            p_gm: p_gm(dist, truth),
            source,
        })
    }

    pub fn exact(state: &Statevector, model: &CostModel, truth: &InstanceGroundTruth) -> Result<Self> {
        Self::from_distribution(&Distribution::from_state(state), model, truth, MetricSource::ExactStatevector)
    }

    pub fn sampled(samples: &[u64], model: &CostModel, truth: &InstanceGroundTruth) -> Result<Self> {
        Self::from_distribution(
            &Distribution::from_samples(samples),
            model,
            truth,
            MetricSource::Sampled {
                shots: samples.len(),
            },
        )
    }
}
