//! Initial states, budget-conserving mixers and the alternating ansatz.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{sample_feasible_uniform, BitString, EncodingSpec, LotVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{apply_cost_diagonal, CostModel};
use crate::market::CovarianceMatrix;
use crate::simulator::{GateEvent, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateKind {
    Maxbias,
    WarmStarted,
    EqualWeighted,
    RandomWeighted,
}

impl InitialStateKind {
    pub const ALL: [InitialStateKind; 4] = [
        InitialStateKind::Maxbias,
        InitialStateKind::WarmStarted,
        InitialStateKind::EqualWeighted,
        InitialStateKind::RandomWeighted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InitialStateKind::Maxbias => "maxbias",
            InitialStateKind::WarmStarted => "warm_started",
            InitialStateKind::EqualWeighted => "equal_weighted",
            InitialStateKind::RandomWeighted => "random_weighted",
        }
    }
}

/// A resolved initial basis state together with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub kind: InitialStateKind,
    pub lots: Vec<u64>,
    /// Continuous GMVP weights behind a warm start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<Vec<f64>>,
}

impl InitialState {
    pub fn resolve<R: Rng + ?Sized>(
        kind: InitialStateKind,
        spec: &EncodingSpec,
        sigma: &CovarianceMatrix,
        rng: &mut R,
    ) -> Result<Self> {
        let (lots, continuous) = match kind {
            InitialStateKind::Maxbias => (maxbias_lots(spec), None),
            InitialStateKind::EqualWeighted => (equal_weighted_lots(spec), None),
            InitialStateKind::WarmStarted => {
                let w = gmvp_continuous(sigma)?;
                let bits = warm_start_round(spec, &w)?;
                let lots = (0..spec.n())
                    .map(|t| spec.lots_of_index(bits.to_index(), t))
                    .collect();
                (lots, Some(w))
            }
            InitialStateKind::RandomWeighted => {
                let bits = sample_feasible_uniform(spec, rng);
                let lots = (0..spec.n())
                    .map(|t| spec.lots_of_index(bits.to_index(), t))
                    .collect();
                (lots, None)
            }
        };
        let out = Self {
            kind,
            lots,
            continuous,
        };
        if !spec.index_is_feasible(out.index(spec)) {
            return Err(Error::InvalidArgument(format!(
                "{} produced an infeasible state",
                kind.name()
            )));
        }
        Ok(out)
    }

    pub fn index(&self, spec: &EncodingSpec) -> u64 {
        spec.index_of_lots(&self.lots)
    }

    pub fn bits(&self, spec: &EncodingSpec) -> BitString {
        BitString::from_index(self.index(spec), spec.qubits())
    }

    /// X gates preparing the state from `|0...0>`.
    pub fn gate_events(&self, spec: &EncodingSpec) -> Vec<GateEvent> {
        let index = self.index(spec);
        (0..spec.qubits())
            .filter(|q| (index >> q) & 1 == 1)
            .map(|q| GateEvent::PauliX { q })
            .collect()
    }
}

/// Everything in the first asset.
pub fn maxbias_lots(spec: &EncodingSpec) -> Vec<u64> {
    let mut lots = vec![0; spec.n()];
    lots[0] = spec.max_lots();
    lots
}

/// `floor(D / n)` lots each, one more for the first `D mod n` assets.
pub fn equal_weighted_lots(spec: &EncodingSpec) -> Vec<u64> {
    let n = spec.n() as u64;
    let (each, extra) = (spec.max_lots() / n, spec.max_lots() % n);
    (0..spec.n() as u64)
        .map(|t| each + u64::from(t < extra))
        .collect()
}

/// Output of the long-only minimum variance solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GmvpSolution {
    pub weights: Vec<f64>,
    /// Largest violation of the optimality conditions.
    pub kkt_residual: f64,
    /// Ridge added to the diagonal, zero when none was needed.
    pub ridge: f64,
}

/// Minimises `w^T Sigma w` subject to `sum w = 1`, `w >= 0`.
pub fn gmvp_continuous(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    Ok(gmvp_solve(sigma)?.weights)
}

/// Primal active-set method started from the equal-weight point.
pub fn gmvp_solve(sigma: &CovarianceMatrix) -> Result<GmvpSolution> {
    let n = sigma.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty covariance".into()));
    }
    let scale = (sigma.trace() / n as f64).max(f64::MIN_POSITIVE);
    let base = sigma.to_matrix();
    for ridge in [0.0, 1e-12, 1e-10, 1e-8, 1e-6].map(|r| r * scale) {
        let m = &base + DMatrix::identity(n, n) * ridge;
        if let Some(weights) = active_set(&m) {
            let kkt_residual = kkt_residual(&m, &weights);
            return Ok(GmvpSolution {
                weights,
                kkt_residual,
                ridge,
            });
        }
    }
    Err(Error::Singular)
}

/// Minimiser of `w^T M w` on the simplex face where `free` is the support.
fn face_minimiser(m: &DMatrix<f64>, free: &[usize]) -> Option<Vec<f64>> {
    let k = free.len();
    let sub = DMatrix::from_fn(k, k, |r, c| m[(free[r], free[c])]);
    let ones = DVector::from_element(k, 1.0);
    let y = sub.cholesky()?.solve(&ones);
    let total = y.sum();
    if !(total.is_finite() && total > 0.0) {
        return None;
    }
    let mut w = vec![0.0; m.nrows()];
    for (r, &i) in free.iter().enumerate() {
        w[i] = y[r] / total;
    }
    Some(w)
}

fn active_set(m: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = m.nrows();
    let mut w = vec![1.0 / n as f64; n];
    let mut at_bound = vec![false; n];
    for _ in 0..(50 * n + 50) {
        let free: Vec<usize> = (0..n).filter(|&i| !at_bound[i]).collect();
        let target = face_minimiser(m, &free)?;
        let step: Vec<f64> = (0..n).map(|i| target[i] - w[i]).collect();
        if step.iter().all(|s| s.abs() < 1e-15) {
            let grad = m * DVector::from_vec(w.clone());
            let nu = free.iter().map(|&i| grad[i]).sum::<f64>() / free.len() as f64;
            let worst = (0..n)
                .filter(|&i| at_bound[i])
                .map(|i| (i, grad[i] - nu))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((i, mu)) if mu < -1e-14 * nu.abs().max(1e-300) => at_bound[i] = false,
                _ => return Some(w),
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            if step[i] < 0.0 {
                let a = -w[i] / step[i];
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        for i in 0..n {
            w[i] += alpha * step[i];
        }
        if let Some(i) = blocking {
            w[i] = 0.0;
            at_bound[i] = true;
        }
    }
    None
}

/// Stationarity on the support, dual feasibility off it, primal feasibility.
fn kkt_residual(m: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let grad = m * DVector::from_column_slice(w);
    let support: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let nu = support.iter().map(|&i| grad[i]).sum::<f64>() / support.len().max(1) as f64;
    let mut worst = (w.iter().sum::<f64>() - 1.0).abs();
    for i in 0..n {
        worst = worst.max((-w[i]).max(0.0));
        if w[i] > 0.0 {
            worst = worst.max((grad[i] - nu).abs());
        } else {
            worst = worst.max((nu - grad[i]).max(0.0));
        }
    }
    worst
}

/// Rounds continuous weights onto the lot grid: floor each, then hand the
/// leftover lots to the largest remainders (ties go to the lower index).
pub fn warm_start_round(spec: &EncodingSpec, w: &[f64]) -> Result<BitString> {
    if w.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: w.len(),
        });
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 || w.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "weights must be non-negative and sum to one".into(),
        ));
    }
    let d = spec.max_lots();
    let mut lots = Vec::with_capacity(w.len());
    let mut rem = Vec::with_capacity(w.len());
    for &v in w {
        let scaled = v.max(0.0) * d as f64;
        let near = scaled.round();
        // Values a hair below a grid point are treated as on it.
        let floor = if (scaled - near).abs() < 1e-9 { near } else { scaled.floor() };
        lots.push(floor as u64);
        rem.push((scaled - floor).max(0.0));
    }
    let assigned: u64 = lots.iter().sum();
    if assigned > d {
        return Err(Error::InvalidArgument("weights exceed the budget".into()));
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| rem[j].total_cmp(&rem[i]));
    let u = (d - assigned) as usize;
    for &i in order.iter().cycle().take(u) {
        lots[i] += 1;
    }
    crate::encoding::encode(spec, &LotVector(lots))
}

/// Mixer layer shape: asset pairs up to ring distance `distance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixerSpec {
    pub distance: usize,
    /// One beta per asset pair instead of one per layer.
    #[serde(default)]
    pub per_pair_beta: bool,
}

impl MixerSpec {
    pub fn new(distance: usize) -> Self {
        Self {
            distance,
            per_pair_beta: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidArgument("a mixer needs at least two assets".into()));
        }
        if self.distance == 0 || self.distance > n / 2 {
            return Err(Error::InvalidArgument(format!(
                "mixer distance {} outside 1..={}",
                self.distance,
                n / 2
            )));
        }
        Ok(())
    }

    /// Betas consumed by one mixer layer.
    pub fn betas_per_layer(&self, n: usize) -> Result<usize> {
        Ok(if self.per_pair_beta {
            mixer_pairs(n, self)?.len()
        } else {
            1
        })
    }
}

/// Ordered pairs `(t, (t + d) mod n)` for `d = 1..=L`, each unordered pair once.
pub fn mixer_pairs(n: usize, mixer: &MixerSpec) -> Result<Vec<(usize, usize)>> {
    mixer.validate(n)?;
    let mut pairs = Vec::new();
    for d in 1..=mixer.distance {
        for t in 0..n {
            let u = (t + d) % n;
            if !pairs.iter().any(|&(a, b)| (a, b) == (u, t) || (a, b) == (t, u)) {
                pairs.push((t, u));
            }
        }
    }
    Ok(pairs)
}

/// Gates of `H_{tt'}(beta)`, in application order: exchanges, odd carries,
/// even carries, exchanges. Bit `k` here is 0-based, so odd 1-based carry
/// positions are the even 0-based ones.
pub fn h_tt_events(spec: &EncodingSpec, t: usize, u: usize, beta: f64) -> Result<Vec<GateEvent>> {
    let n = spec.n();
    if t >= n || u >= n {
        return Err(Error::InvalidArgument(format!(
            "asset pair ({t}, {u}) outside 0..{n}"
        )));
    }
    if t == u {
        return Err(Error::IndexClash);
    }
    let l = spec.l();
    let exchanges = (0..l).map(|k| GateEvent::TwoExcitation {
        from: spec.qubit(t, k),
        to: spec.qubit(u, k),
        beta,
    });
    let carry = |k: usize| GateEvent::ThreeExcitation {
        hi: spec.qubit(t, k + 1),
        b: spec.qubit(t, k),
        c: spec.qubit(u, k),
        beta,
    };
    let mut events: Vec<GateEvent> = exchanges.clone().collect();
    events.extend((0..l.saturating_sub(1)).step_by(2).map(carry));
    events.extend((1..l.saturating_sub(1)).step_by(2).map(carry));
    events.extend(exchanges);
    Ok(events)
}

pub fn apply_h_tt(state: &mut Statevector, spec: &EncodingSpec, t: usize, u: usize, beta: f64) -> Result<()> {
    for e in h_tt_events(spec, t, u, beta)? {
        e.apply(state)?;
    }
    Ok(())
}

/// Gates of one mixer layer; `betas` holds one value, or one per pair.
pub fn mixer_events(spec: &EncodingSpec, mixer: &MixerSpec, betas: &[f64]) -> Result<Vec<GateEvent>> {
    let pairs = mixer_pairs(spec.n(), mixer)?;
    let expected = if mixer.per_pair_beta { pairs.len() } else { 1 };
    if betas.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: betas.len(),
        });
    }
    let mut events = Vec::new();
    for (i, &(t, u)) in pairs.iter().enumerate() {
        let beta = if mixer.per_pair_beta { betas[i] } else { betas[0] };
        events.extend(h_tt_events(spec, t, u, beta)?);
    }
    Ok(events)
}

pub fn apply_mixer(state: &mut Statevector, spec: &EncodingSpec, mixer: &MixerSpec, beta: f64) -> Result<()> {
    let single = MixerSpec {
        per_pair_beta: false,
        ..*mixer
    };
    for e in mixer_events(spec, &single, &[beta])? {
        e.apply(state)?;
    }
    Ok(())
}

fn wrap(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Serializable description of one ansatz instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub initial: InitialStateKind,
    pub mixer: MixerSpec,
    pub p: usize,
    /// `gamma_1..gamma_p` followed by the betas of each layer in order.
    pub params: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl AnsatzConfig {
    pub fn new(
        initial: InitialStateKind,
        mixer: MixerSpec,
        p: usize,
        params: Vec<f64>,
        seed: u64,
    ) -> Self {
        Self {
            initial,
            mixer,
            p,
            params: params.into_iter().map(wrap).collect(),
            seed,
        }
    }
}

/// Splits a flat parameter vector into gammas and per-layer betas.
pub fn split_params(params: &[f64], p: usize, betas_per_layer: usize) -> Result<(&[f64], &[f64])> {
    let expected = p * (1 + betas_per_layer);
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    Ok(params.split_at(p))
}

/// An ansatz bound to one instance, with the cost phases cached.
#[derive(Debug, Clone)]
pub struct Ansatz {
    spec: EncodingSpec,
    mixer: MixerSpec,
    initial: InitialState,
    costs: Vec<f64>,
    constant: f64,
    betas_per_layer: usize,
    pairs: Vec<(usize, usize)>,
}

impl Ansatz {
    pub fn new(model: &CostModel, mixer: MixerSpec, initial: InitialState) -> Result<Self> {
        let spec = *model.spec();
        let pairs = mixer_pairs(spec.n(), &mixer)?;
        Ok(Self {
            spec,
            betas_per_layer: if mixer.per_pair_beta { pairs.len() } else { 1 },
            mixer,
            initial,
            costs: model.cost_table()?,
            constant: model.constant(),
            pairs,
        })
    }

    pub fn spec(&self) -> &EncodingSpec {
        &self.spec
    }

    pub fn mixer(&self) -> &MixerSpec {
        &self.mixer
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn params_per_layer(&self) -> usize {
        1 + self.betas_per_layer
    }

    /// Final state for `params` (`p` inferred from the length).
    pub fn state(&self, params: &[f64]) -> Result<Statevector> {
        let p = params.len() / self.params_per_layer();
        let (gammas, betas) = split_params(params, p, self.betas_per_layer)?;
        let mut state = Statevector::basis(self.spec.qubits(), self.initial.index(&self.spec))?;
        for layer in 0..p {
            apply_cost_diagonal(&mut state, &self.costs, self.constant, gammas[layer])?;
            let b = &betas[layer * self.betas_per_layer..(layer + 1) * self.betas_per_layer];
            for e in mixer_events(&self.spec, &self.mixer, b)? {
                e.apply(&mut state)?;
            }
        }
        Ok(state)
    }

    /// Full gate list, state preparation included, for gate-level simulation.
    pub fn events(&self, model: &CostModel, params: &[f64]) -> Result<Vec<GateEvent>> {
        let p = params.len() / self.params_per_layer();
        let (gammas, betas) = split_params(params, p, self.betas_per_layer)?;
        let mut events = self.initial.gate_events(&self.spec);
        for layer in 0..p {
            events.extend(model.gate_events(gammas[layer]));
            let b = &betas[layer * self.betas_per_layer..(layer + 1) * self.betas_per_layer];
            events.extend(mixer_events(&self.spec, &self.mixer, b)?);
        }
        Ok(events)
    }

    /// `<C>` on the exact final state.
    pub fn expectation(&self, params: &[f64]) -> Result<f64> {
        self.state(params)?.expectation_diagonal(&self.costs)
    }
}

/// Resolves the initial state and runs the ansatz described by `config`.
pub fn run_ansatz<R: Rng + ?Sized>(
    config: &AnsatzConfig,
    model: &CostModel,
    sigma: &CovarianceMatrix,
    rng: &mut R,
) -> Result<Statevector> {
    let initial = InitialState::resolve(config.initial, model.spec(), sigma, rng)?;
    let ansatz = Ansatz::new(model, config.mixer, initial)?;
    let bpl = config.mixer.betas_per_layer(model.spec().n())?;
    split_params(&config.params, config.p, bpl)?;
    ansatz.state(&config.params)
}

/// Primitive gates of the hardware-level excitation circuits.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitGate {
    Cnot { control: usize, target: usize },
    /// `Ry(theta)` on `target` conditioned on every control reading 1.
    Cry { controls: Vec<usize>, target: usize, theta: f64 },
}

impl CircuitGate {
    pub fn apply(&self, state: &mut Statevector) -> Result<()> {
        match self {
            CircuitGate::Cnot { control, target } => state.apply_cnot(*control, *target),
            CircuitGate::Cry {
                controls,
                target,
                theta,
            } => state.apply_controlled_ry(controls, *target, *theta),
        }
    }
}

/// CNOT, controlled-Ry, CNOT realisation of the two-qubit excitation that
/// moves an excitation from `from` to `to`. The rotation angle is `-2 beta`.
pub fn two_excitation_circuit(from: usize, to: usize, beta: f64) -> Vec<CircuitGate> {
    vec![
        CircuitGate::Cnot {
            control: from,
            target: to,
        },
        CircuitGate::Cry {
            controls: vec![to],
            target: from,
            theta: -2.0 * beta,
        },
        CircuitGate::Cnot {
            control: from,
            target: to,
        },
    ]
}

/// CNOT ladder around a doubly controlled Ry realising the three-qubit
/// excitation. The rotation angle is `2 beta`.
pub fn three_excitation_circuit(hi: usize, b: usize, c: usize, beta: f64) -> Vec<CircuitGate> {
    vec![
        CircuitGate::Cnot { control: hi, target: b },
        CircuitGate::Cnot { control: hi, target: c },
        CircuitGate::Cry {
            controls: vec![b, c],
            target: hi,
            theta: 2.0 * beta,
        },
        CircuitGate::Cnot { control: hi, target: c },
        CircuitGate::Cnot { control: hi, target: b },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_pairs_are_deduplicated() {
        assert_eq!(mixer_pairs(2, &MixerSpec::new(1)).unwrap(), vec![(0, 1)]);
        assert_eq!(
            mixer_pairs(4, &MixerSpec::new(2)).unwrap(),
            vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]
        );
    }

    #[test]
    fn equal_weighted_uses_integer_split() {
        let spec = EncodingSpec::new(3, 2).unwrap();
        assert_eq!(equal_weighted_lots(&spec), vec![1, 1, 1]);
        let spec = EncodingSpec::new(4, 3).unwrap();
        assert_eq!(equal_weighted_lots(&spec), vec![2, 2, 2, 1]);
    }
}
