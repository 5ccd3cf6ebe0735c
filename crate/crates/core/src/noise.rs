//! Thermal relaxation by quantum-jump trajectories, and post-selection.
//!
//! Each trajectory runs the gate list on a pure state. After every gate the
//! touched qubits relax for the gate's duration: an amplitude-damping jump
//! with probability `gamma * P(1)`, otherwise the no-jump Kraus map, then a
//! random `Z` for pure dephasing. Averaged over trajectories this reproduces
//! populations relaxing at `1/T1` and coherences at `1/T2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuits::Ansatz;
use crate::encoding::{BitString, EncodingSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::CostModel;
use crate::optimizers::eval_rng;
use crate::simulator::{GateEvent, Sampler, Statevector};

/// Gate times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateDurations {
    pub single: f64,
    pub two: f64,
    pub measurement: f64,
}

impl Default for GateDurations {
    fn default() -> Self {
        Self {
            single: 50e-9,
            two: 300e-9,
            measurement: 1e-6,
        }
    }
}

impl GateDurations {
    pub fn zero() -> Self {
        Self {
            single: 0.0,
            two: 0.0,
            measurement: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.single == 0.0 && self.two == 0.0 && self.measurement == 0.0
    }

    /// Controlled-Ry: two CNOTs and two single-qubit rotations.
    pub fn controlled_ry(&self) -> f64 {
        2.0 * self.two + 2.0 * self.single
    }

    /// Doubly controlled Ry: two CNOTs and three controlled-Ry.
    pub fn doubly_controlled_ry(&self) -> f64 {
        2.0 * self.two + 3.0 * self.controlled_ry()
    }

    pub fn of(&self, event: &GateEvent) -> f64 {
        match event {
            GateEvent::PauliX { .. } | GateEvent::Rz { .. } => self.single,
            GateEvent::Rzz { .. } => 2.0 * self.two + self.single,
            GateEvent::TwoExcitation { .. } => 2.0 * self.two + self.controlled_ry(),
            GateEvent::ThreeExcitation { .. } => 4.0 * self.two + self.doubly_controlled_ry(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    pub t1_mean: f64,
    pub t1_sd: f64,
    pub t2_mean: f64,
    pub t2_sd: f64,
    pub durations: GateDurations,
    /// Let qubits not touched by a gate relax during it as well.
    pub idle_decay: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            t1_mean: 50e-6,
            t1_sd: 10e-6,
            t2_mean: 70e-6,
            t2_sd: 10e-6,
            durations: GateDurations::default(),
            idle_decay: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitTimes {
    pub t1: f64,
    pub t2: f64,
}

/// Draws `(T1, T2)` per qubit, redrawing until both are positive and
/// `T2 <= 2 T1`.
pub fn sample_qubit_times<R: Rng + ?Sized>(params: &NoiseParams, qubits: usize, rng: &mut R) -> Result<Vec<QubitTimes>> {
    if params.t1_mean <= 0.0 || params.t2_mean <= 0.0 {
        return Err(Error::InvalidArgument("T1 and T2 means must be positive".into()));
    }
    let n1 = Normal::new(params.t1_mean, params.t1_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n2 = Normal::new(params.t2_mean, params.t2_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = Vec::with_capacity(qubits);
    for _ in 0..qubits {
        let mut tries = 0;
        loop {
            let t1 = n1.sample(rng);
            let t2 = n2.sample(rng);
            if t1 > 0.0 && t2 > 0.0 && t2 <= 2.0 * t1 {
                out.push(QubitTimes { t1, t2 });
                break;
            }
            tries += 1;
            if tries > 100_000 {
                return Err(Error::InvalidArgument("could not draw valid T1/T2".into()));
            }
        }
    }
    Ok(out)
}

/// One trajectory step on `qubit` for `duration` seconds.
pub fn apply_relaxation<R: Rng + ?Sized>(
    state: &mut Statevector,
    qubit: usize,
    duration: f64,
    times: QubitTimes,
    rng: &mut R,
) -> Result<()> {
    let QubitTimes { t1, t2 } = times;
    if !(t1 > 0.0 && t2 > 0.0 && t2 <= 2.0 * t1) {
        return Err(Error::InvalidArgument(format!("invalid T1={t1}, T2={t2}")));
    }
    if duration < 0.0 {
        return Err(Error::InvalidArgument("negative duration".into()));
    }
    if qubit >= state.qubits() {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            qubits: state.qubits(),
        });
    }
    if duration == 0.0 {
        return Ok(());
    }
    let gamma = 1.0 - (-duration / t1).exp();
    let excited = state.excited_population(qubit);
    let bit = 1usize << qubit;
    let jump: f64 = rng.random();
    let amps = state.amplitudes_mut();
    if jump < gamma * excited {
        for i in 0..amps.len() {
            if i & bit == 0 {
                amps[i] = amps[i | bit];
                amps[i | bit] = Default::default();
            }
        }
    } else {
        let keep = (1.0 - gamma).sqrt();
        for (i, a) in amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= keep;
            }
        }
    }
    state.normalize();

    let rate_phi = 1.0 / t2 - 0.5 / t1;
    let p_phi = 0.5 * (1.0 - (-duration * rate_phi.max(0.0)).exp());
    let flip: f64 = rng.random();
    if flip < p_phi {
        state.apply_z(qubit)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub index: u64,
    pub feasible: bool,
}

impl TrajectoryOutcome {
    pub fn new(spec: &EncodingSpec, index: u64) -> Self {
        Self {
            index,
            feasible: spec.index_is_feasible(index),
        }
    }

    pub fn bits(&self, spec: &EncodingSpec) -> BitString {
        BitString::from_index(self.index, spec.qubits())
    }
}

/// Runs `events` from `|0...0>` with relaxation after every gate.
pub fn run_trajectory<R: Rng + ?Sized>(
    qubits: usize,
    events: &[GateEvent],
    noise: &NoiseParams,
    times: &[QubitTimes],
    rng: &mut R,
) -> Result<Statevector> {
    if times.len() != qubits {
        return Err(Error::DimensionMismatch {
            expected: qubits,
            got: times.len(),
        });
    }
    let mut state = Statevector::zero(qubits)?;
    for e in events {
        e.apply(&mut state)?;
        let duration = noise.durations.of(e);
        if noise.idle_decay {
            for q in 0..qubits {
                apply_relaxation(&mut state, q, duration, times[q], rng)?;
            }
        } else {
            for q in e.targets() {
                apply_relaxation(&mut state, q, duration, times[q], rng)?;
            }
        }
    }
    for q in 0..qubits {
        apply_relaxation(&mut state, q, noise.durations.measurement, times[q], rng)?;
    }
    Ok(state)
}

/// Generator for the trajectory noise of evaluation `index`; kept apart from
/// the measurement stream so that zero noise leaves measurements untouched.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(index);
    rng
}

/// `shots` noisy measurements, one trajectory each. With every duration
/// zero this is exactly the noiseless sampler driven by the same stream.
#[allow(clippy::too_many_arguments)]
pub fn noisy_sample(
    ansatz: &Ansatz,
    model: &CostModel,
    params: &[f64],
    shots: usize,
    noise: &NoiseParams,
    times: &[QubitTimes],
    seed: u64,
    index: u64,
) -> Result<Vec<TrajectoryOutcome>> {
    let spec = *ansatz.spec();
    let mut measure = eval_rng(seed, index);
    if noise.durations.is_zero() {
        let sampler = Sampler::new(&ansatz.state(params)?);
        return Ok((0..shots)
            .map(|_| TrajectoryOutcome::new(&spec, sampler.draw(&mut measure)))
            .collect());
    }
    let events = ansatz.events(model, params)?;
    let mut traj = trajectory_rng(seed, index);
    let mut out = Vec::with_capacity(shots);
    for _ in 0..shots {
        let state = run_trajectory(spec.qubits(), &events, noise, times, &mut traj)?;
        let sampler = Sampler::new(&state);
        out.push(TrajectoryOutcome::new(&spec, sampler.draw(&mut measure)));
    }
    Ok(out)
}

/// Keeps feasible outcomes; returns them with the kept fraction.
pub fn post_select(outcomes: &[TrajectoryOutcome]) -> Result<(Vec<TrajectoryOutcome>, f64)> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument("no outcomes to filter".into()));
    }
    let kept: Vec<TrajectoryOutcome> = outcomes.iter().copied().filter(|o| o.feasible).collect();
    if kept.is_empty() {
        return Err(Error::EmptyPostSelection);
    }
    let frac = kept.len() as f64 / outcomes.len() as f64;
    Ok((kept, frac))
}

/// Fraction of feasible outcomes (zero when nothing was drawn).
pub fn feasible_fraction(outcomes: &[TrajectoryOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|o| o.feasible).count() as f64 / outcomes.len() as f64
}

/// Noisy cost estimate over all outcomes.
pub fn unfiltered_mean(costs: &[f64], outcomes: &[TrajectoryOutcome]) -> f64 {
    outcomes.iter().map(|o| costs[o.index as usize]).sum::<f64>() / outcomes.len() as f64
}

/// Noisy cost estimate over feasible outcomes, or `fallback` if none survive.
pub fn filtered_mean(costs: &[f64], outcomes: &[TrajectoryOutcome], fallback: f64) -> f64 {
    match post_select(outcomes) {
        Ok((kept, _)) => unfiltered_mean(costs, &kept),
        Err(_) => fallback,
    }
}

/// Largest single-asset variance, the filtered estimate when every shot is
/// discarded.
pub fn empty_filter_fallback(model: &CostModel) -> f64 {
    (0..model.spec().n())
        .map(|i| model.sigma(i, i))
        .fold(f64::NEG_INFINITY, f64::max)
}
