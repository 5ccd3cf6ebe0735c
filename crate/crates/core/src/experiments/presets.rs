//! Task planning and execution for every preset.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{derive_seed, ExperimentConfig, FinalMode, InstanceSource, Preset, ScanTarget};
use super::records::{LandscapePoint, ResultRecord};
use crate::circuits::{Ansatz, InitialState, InitialStateKind, MixerSpec};
use crate::encoding::EncodingSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_cost_model, CostModel};
use crate::market::{load_prices, price_file_tickers, random_instance, synthetic_covariance, CovarianceMatrix};
use crate::metrics::{ground_truth, InstanceGroundTruth, MetricReport};
use crate::noise::{
    empty_filter_fallback, feasible_fraction, filtered_mean, noisy_sample, post_select, sample_qubit_times,
    unfiltered_mean,
};
use crate::optimizers::{
    dual_annealing, estimate_expectation, eval_rng, layerwise, Bounds, Evaluator, InnerOptimizer, LayerwiseDriver,
    OptResult,
};

const TAG_INSTANCE: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_OPT: u64 = 3;
const TAG_TIMES: u64 = 4;

/// Measurement stream for post-optimisation sampling, clear of the
/// optimisation streams which count up from zero.
const FINAL_STREAM: u64 = u64::MAX;

pub struct InstanceData {
    pub label: String,
    pub sigma: CovarianceMatrix,
    pub model: CostModel,
    pub truth: InstanceGroundTruth,
}

pub type InstanceKey = (usize, usize, usize);

/// Covariance for every `(n, instance)` and cost model for every `(n, l)`.
pub fn build_instances(config: &ExperimentConfig, root_seed: u64) -> Result<BTreeMap<InstanceKey, Arc<InstanceData>>> {
    let universe = match &config.instances {
        InstanceSource::Prices { path, tickers, .. } => {
            let all = if tickers.is_empty() { price_file_tickers(path)? } else { tickers.clone() };
            let names: Vec<&str> = all.iter().map(String::as_str).collect();
            Some(load_prices(path, &names)?)
        }
        InstanceSource::Synthetic { .. } => None,
    };
    let mut out = BTreeMap::new();
    for &n in &config.n {
        for i in 0..config.instances.count() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(root_seed, &[TAG_INSTANCE, n as u64, i as u64]));
            let (label, sigma) = match (&config.instances, &universe) {
                (InstanceSource::Prices { .. }, Some(u)) => {
                    let inst = random_instance(&mut rng, u, n)?;
                    let names: Vec<&str> = inst.subset.iter().map(|&k| u[k].ticker.as_str()).collect();
                    (names.join("+"), inst.covariance)
                }
                (InstanceSource::Synthetic { factors, .. }, _) => {
                    (format!("synthetic-n{n}-{i}"), synthetic_covariance(&mut rng, n, *factors))
                }
                _ => unreachable!("price universe loaded above"),
            };
            for &l in &config.l {
                let spec = EncodingSpec::new(n, l)?;
                let model = build_cost_model(&spec, &sigma)?;
                let truth = ground_truth(&model)?;
                out.insert(
                    (n, l, i),
                    Arc::new(InstanceData {
                        label: label.clone(),
                        sigma: sigma.clone(),
                        model,
                        truth,
                    }),
                );
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskKind {
    Scan {
        p: usize,
        distance: usize,
        target: ScanTarget,
    },
    Trial {
        p: usize,
        distance: usize,
        target: ScanTarget,
        optimizer: InnerOptimizer,
        shots: usize,
        seed_index: usize,
    },
    Optimize {
        distance: usize,
        initial: InitialStateKind,
        optimizer: InnerOptimizer,
        driver: LayerwiseDriver,
        shots: usize,
        max_estimations: usize,
        seed_index: usize,
    },
    Noise {
        p: usize,
        distance: usize,
        initial: InitialStateKind,
        optimizer: InnerOptimizer,
        filtered: bool,
        shots: usize,
        seed_index: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub index: usize,
    pub n: usize,
    pub l: usize,
    pub instance: usize,
    pub kind: TaskKind,
}

impl Task {
    fn key(&self) -> InstanceKey {
        (self.n, self.l, self.instance)
    }

    fn seed_index(&self) -> usize {
        match self.kind {
            TaskKind::Scan { .. } => 0,
            TaskKind::Trial { seed_index, .. }
            | TaskKind::Optimize { seed_index, .. }
            | TaskKind::Noise { seed_index, .. } => seed_index,
        }
    }

    /// Shared by every method at the same grid point and seed index, so
    /// method comparisons are paired.
    pub fn seed(&self, root_seed: u64) -> u64 {
        derive_seed(
            root_seed,
            &[self.n as u64, self.l as u64, self.instance as u64, self.seed_index() as u64],
        )
    }

    pub fn is_scan(&self) -> bool {
        matches!(self.kind, TaskKind::Scan { .. })
    }
}

/// Every task of a preset in output order; scans precede the trials that
/// depend on them.
pub fn plan_tasks(config: &ExperimentConfig) -> Vec<Task> {
    let mut tasks = Vec::new();
    let mut push = |n, l, instance, kind| {
        let index = tasks.len();
        tasks.push(Task {
            index,
            n,
            l,
            instance,
            kind,
        })
    };
    let grid: Vec<(usize, usize, usize)> = config
        .n
        .iter()
        .flat_map(|&n| config.l.iter().map(move |&l| (n, l)))
        .flat_map(|(n, l)| (0..config.instances.count()).map(move |i| (n, l, i)))
        .collect();
    match config.preset {
        Preset::IdentityVerification => {}
        Preset::LandscapeScan => {
            for &(n, l, i) in &grid {
                for &p in &config.p {
                    for &distance in &config.distance {
                        for &target in &config.scan.targets {
                            push(n, l, i, TaskKind::Scan { p, distance, target });
                        }
                    }
                }
            }
            for &(n, l, i) in &grid {
                for &p in &config.p {
                    for &distance in &config.distance {
                        for &target in &config.scan.targets {
                            for &optimizer in &config.optimizers {
                                for &shots in &config.shots_values() {
                                    for seed_index in 0..config.seeds {
                                        push(
                                            n,
                                            l,
                                            i,
                                            TaskKind::Trial {
                                                p,
                                                distance,
                                                target,
                                                optimizer,
                                                shots,
                                                seed_index,
                                            },
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Preset::NoiseStudy => {
            for &(n, l, i) in &grid {
                for &p in &config.p {
                    for &distance in &config.distance {
                        for &initial in &config.initial_states {
                            for &optimizer in &config.optimizers {
                                for &shots in &config.shots_values() {
                                    for seed_index in 0..config.seeds {
                                        for filtered in [true, false] {
                                            push(
                                                n,
                                                l,
                                                i,
                                                TaskKind::Noise {
                                                    p,
                                                    distance,
                                                    initial,
                                                    optimizer,
                                                    filtered,
                                                    shots,
                                                    seed_index,
                                                },
                                            );
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        _ => {
            for &(n, l, i) in &grid {
                for &distance in &config.distance {
                    for &initial in &config.initial_states {
                        for &optimizer in &config.optimizers {
                            for &driver in &config.drivers {
                                for &shots in &config.shots_values() {
                                    for &max_estimations in &config.estimation_values() {
                                        for seed_index in 0..config.seeds {
                                            push(
                                                n,
                                                l,
                                                i,
                                                TaskKind::Optimize {
                                                    distance,
                                                    initial,
                                                    optimizer,
                                                    driver,
                                                    shots,
                                                    max_estimations,
                                                    seed_index,
                                                },
                                            );
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    tasks
}

/// Exact landscape along one angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl Landscape {
    /// Position of `value` within the scanned range, 0 at the bottom.
    pub fn relative(&self, value: f64) -> f64 {
        if self.max > self.min {
            (value - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    /// Local minima on the periodic grid (the closing point duplicates the first).
    pub fn valleys(&self) -> usize {
        let m = self.ys.len() - 1;
        (0..m)
            .filter(|&i| {
                let prev = self.ys[(i + m - 1) % m];
                let next = self.ys[(i + 1) % m];
                self.ys[i] < prev && self.ys[i] <= next
            })
            .count()
    }

    pub fn mean_abs_gradient(&self) -> f64 {
        let m = self.ys.len() - 1;
        (0..m)
            .map(|i| ((self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])).abs())
            .sum::<f64>()
            / m as f64
    }
}

pub type LandscapeKey = (InstanceKey, usize, usize, ScanTarget);

/// Everything a task needs besides its own description.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub root_seed: u64,
    pub hash: String,
    pub instances: BTreeMap<InstanceKey, Arc<InstanceData>>,
    pub landscapes: BTreeMap<LandscapeKey, Landscape>,
    pub shots_spent: AtomicU64,
}

impl Context<'_> {
    fn instance(&self, key: InstanceKey) -> Result<&InstanceData> {
        self.instances
            .get(&key)
            .map(|a| a.as_ref())
            .ok_or_else(|| Error::Config(format!("no instance for {key:?}")))
    }

    fn charge(&self, shots: usize) {
        self.shots_spent.fetch_add(shots as u64, Ordering::Relaxed);
    }

    fn base_record(&self, task: &Task, data: &InstanceData) -> ResultRecord {
        ResultRecord {
            config_hash: self.hash.clone(),
            root_seed: self.root_seed,
            preset: self.config.preset.name().into(),
            task: task.index,
            instance: task.instance,
            instance_label: data.label.clone(),
            n: task.n,
            l: task.l,
            seed: task.seed(self.root_seed),
            ..Default::default()
        }
    }
}

#[derive(Debug, Default)]
pub struct TaskOutput {
    pub records: Vec<ResultRecord>,
    pub landscape: Vec<LandscapePoint>,
    pub landscape_summary: Option<Landscape>,
    pub traces: Vec<(String, OptResult)>,
}

pub fn run_task(task: &Task, ctx: &Context<'_>) -> Result<TaskOutput> {
    match &task.kind {
        TaskKind::Scan { p, distance, target } => run_scan(task, ctx, *p, *distance, *target),
        TaskKind::Trial { .. } => run_trial(task, ctx),
        TaskKind::Optimize { .. } => run_optimize(task, ctx),
        TaskKind::Noise { .. } => run_noise(task, ctx),
    }
}

fn build_ansatz(
    data: &InstanceData,
    distance: usize,
    initial: InitialStateKind,
    seed: u64,
) -> Result<Ansatz> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_INIT]));
    let init = InitialState::resolve(initial, data.model.spec(), &data.sigma, &mut rng)?;
    Ansatz::new(&data.model, MixerSpec::new(distance), init)
}

/// All angles at the fixed value except `target`, which is set to `x`.
fn scan_params(ansatz: &Ansatz, p: usize, fixed: f64, target: ScanTarget, x: f64) -> Vec<f64> {
    let mut v = vec![fixed; p * ansatz.params_per_layer()];
    v[target.index(p)] = x;
    v
}

fn run_scan(task: &Task, ctx: &Context<'_>, p: usize, distance: usize, target: ScanTarget) -> Result<TaskOutput> {
    let data = ctx.instance(task.key())?;
    let initial = ctx.config.initial_states[0];
    let ansatz = build_ansatz(data, distance, initial, task.seed(ctx.root_seed))?;
    let res = ctx.config.scan.resolution;
    let xs: Vec<f64> = (0..=res).map(|i| TAU * i as f64 / res as f64).collect();
    let ys = xs
        .iter()
        .map(|&x| ansatz.expectation(&scan_params(&ansatz, p, ctx.config.scan.fixed_angle, target, x)))
        .collect::<Result<Vec<f64>>>()?;
    let (argmin, min) = ys
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &y)| if y < acc.1 { (i, y) } else { acc });
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let land = Landscape { xs, ys, min, max };
    let span = data.truth.f_max - data.truth.f_min;

    let mut rec = ctx.base_record(task, data);
    rec.p = p;
    rec.distance = distance;
    rec.initial = initial.name().into();
    rec.method = format!("scan-{}", target.label());
    rec.exact_expectation = Some(min);
    rec.valleys = Some(land.valleys());
    rec.mean_abs_gradient = Some(if span > 0.0 { land.mean_abs_gradient() / span } else { 0.0 });
    rec.x = Some(land.xs[argmin]);
    rec.y = Some(data.truth.normalize(min));

    let landscape = land
        .xs
        .iter()
        .zip(&land.ys)
        .map(|(&x, &y)| LandscapePoint {
            task: task.index,
            instance: task.instance,
            n: task.n,
            l: task.l,
            p,
            distance,
            target: target.label(),
            x,
            expectation: y,
            alpha: data.truth.normalize(y),
        })
        .collect();
    Ok(TaskOutput {
        records: vec![rec],
        landscape,
        landscape_summary: Some(land),
        traces: Vec::new(),
    })
}

fn run_trial(task: &Task, ctx: &Context<'_>) -> Result<TaskOutput> {
    let TaskKind::Trial {
        p,
        distance,
        target,
        optimizer,
        shots,
        ..
    } = task.kind
    else {
        unreachable!("trial task")
    };
    let data = ctx.instance(task.key())?;
    let land = ctx
        .landscapes
        .get(&(task.key(), p, distance, target))
        .ok_or_else(|| Error::Config("trial without a scanned landscape".into()))?;
    let initial = ctx.config.initial_states[0];
    let seed = task.seed(ctx.root_seed);
    let ansatz = build_ansatz(data, distance, initial, seed)?;
    let fixed = ctx.config.scan.fixed_angle;
    let budget = ctx.config.budget.max_estimations;

    let mut objective = |x: &[f64], index: u64| {
        ctx.charge(shots);
        estimate_expectation(&ansatz, &scan_params(&ansatz, p, fixed, target, x[0]), shots, seed, index)
            .unwrap_or(f64::INFINITY)
    };
    let mut eval = Evaluator::new(&mut objective, shots, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_OPT]));
    let bounds = Bounds::angles(1);
    match optimizer {
        InnerOptimizer::DualAnnealing(params) => dual_annealing(&mut eval, &bounds, None, params, &mut rng),
        InnerOptimizer::Cobyla(_) => {
            let x0 = [rng.random_range(0.0..TAU)];
            optimizer.run(&mut eval, &bounds, &x0, &mut rng);
        }
    }
    let result = eval.into_result(seed);
    let best = result.best_params[0];
    let exact = ansatz.expectation(&scan_params(&ansatz, p, fixed, target, best))?;
    let rel = land.relative(exact);

    let mut rec = ctx.base_record(task, data);
    rec.p = p;
    rec.distance = distance;
    rec.initial = initial.name().into();
    rec.method = optimizer.name().into();
    rec.shots = shots;
    rec.max_estimations = budget;
    rec.estimations = result.estimations;
    rec.function_accesses = result.function_accesses;
    rec.best_estimate = Some(result.best_estimate);
    rec.exact_expectation = Some(exact);
    rec.x = Some(best);
    rec.y = Some(rel);
    rec.success = Some(rel <= ctx.config.scan.success_fraction);
    let traces = if ctx.config.write_traces {
        vec![(format!("task-{:05}-{}", task.index, optimizer.name()), result)]
    } else {
        Vec::new()
    };
    Ok(TaskOutput {
        records: vec![rec],
        traces,
        ..Default::default()
    })
}

fn final_report(ctx: &Context<'_>, data: &InstanceData, ansatz: &Ansatz, params: &[f64], seed: u64) -> Result<MetricReport> {
    let state = ansatz.state(params)?;
    match ctx.config.final_mode {
        FinalMode::Exact => MetricReport::exact(&state, &data.model, &data.truth),
        FinalMode::Sampled => {
            let mut rng = eval_rng(seed, FINAL_STREAM);
            let samples = state.sample(ctx.config.budget.final_shots, &mut rng);
            MetricReport::sampled(&samples, &data.model, &data.truth)
        }
    }
}

fn run_optimize(task: &Task, ctx: &Context<'_>) -> Result<TaskOutput> {
    let TaskKind::Optimize {
        distance,
        initial,
        optimizer,
        driver,
        shots,
        max_estimations,
        ..
    } = task.kind
    else {
        unreachable!("optimisation task")
    };
    let data = ctx.instance(task.key())?;
    let seed = task.seed(ctx.root_seed);
    let ansatz = build_ansatz(data, distance, initial, seed)?;
    let spec = *data.model.spec();
    let initial_is_optimal = data.truth.is_argmin(ansatz.initial().index(&spec));
    let method = format!("{}-{}", optimizer.name(), driver.name());

    // Fixed runs one optimisation per depth; the growing drivers one in total.
    let runs: Vec<usize> = match driver {
        LayerwiseDriver::Fixed => ctx.config.p.clone(),
        _ => vec![ctx.config.max_p()],
    };
    let mut out = TaskOutput::default();
    for target_p in runs {
        let run_seed = match driver {
            LayerwiseDriver::Fixed => derive_seed(seed, &[target_p as u64]),
            _ => seed,
        };
        let mut objective = |x: &[f64], index: u64| {
            ctx.charge(shots);
            estimate_expectation(&ansatz, x, shots, run_seed, index).unwrap_or(f64::INFINITY)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, &[TAG_OPT]));
        let lw = layerwise(
            driver,
            target_p,
            ansatz.params_per_layer(),
            optimizer,
            max_estimations,
            shots,
            &mut objective,
            &mut rng,
            run_seed,
        );
        let mut estimations = 0;
        for stage in &lw.stages {
            estimations += stage.estimations;
            if !ctx.config.p.contains(&stage.p) || (driver == LayerwiseDriver::Fixed && stage.p != target_p) {
                continue;
            }
            let report = final_report(ctx, data, &ansatz, &stage.params, run_seed)?;
            let mut rec = ctx.base_record(task, data);
            rec.seed = run_seed;
            rec.p = stage.p;
            rec.distance = distance;
            rec.initial = initial.name().into();
            rec.method = method.clone();
            rec.shots = shots;
            rec.max_estimations = max_estimations;
            rec.estimations = estimations;
            rec.function_accesses = (estimations * shots) as u64;
            rec.best_estimate = Some(stage.best_estimate);
            rec.exact_expectation = Some(ansatz.expectation(&stage.params)?);
            rec.set_report(&report);
            rec.initial_is_optimal = Some(initial_is_optimal);
            out.records.push(rec);
        }
        if ctx.config.write_traces {
            out.traces
                .push((format!("task-{:05}-{}-p{}", task.index, method, target_p), lw.result));
        }
    }
    Ok(out)
}

fn run_noise(task: &Task, ctx: &Context<'_>) -> Result<TaskOutput> {
    let TaskKind::Noise {
        p,
        distance,
        initial,
        optimizer,
        filtered,
        shots,
        ..
    } = task.kind
    else {
        unreachable!("noise task")
    };
    let data = ctx.instance(task.key())?;
    let seed = task.seed(ctx.root_seed);
    let ansatz = build_ansatz(data, distance, initial, seed)?;
    let spec = *data.model.spec();
    let noise = ctx.config.noise;
    let mut times_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_TIMES]));
    let times = sample_qubit_times(&noise, spec.qubits(), &mut times_rng)?;
    let fallback = empty_filter_fallback(&data.model);
    let costs = ansatz.costs();
    let budget = ctx.config.budget.max_estimations;

    let mut objective = |x: &[f64], index: u64| {
        ctx.charge(shots);
        match noisy_sample(&ansatz, &data.model, x, shots, &noise, &times, seed, index) {
            Ok(o) if filtered => filtered_mean(costs, &o, fallback),
            Ok(o) => unfiltered_mean(costs, &o),
            Err(_) => f64::INFINITY,
        }
    };
    let dim = p * ansatz.params_per_layer();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_OPT, p as u64]));
    let x0: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut eval = Evaluator::new(&mut objective, shots, budget);
    optimizer.run(&mut eval, &Bounds::angles(dim), &x0, &mut rng);
    let result = eval.into_result(seed);

    let final_shots = ctx.config.budget.final_shots;
    let outcomes = noisy_sample(
        &ansatz,
        &data.model,
        &result.best_params,
        final_shots,
        &noise,
        &times,
        seed,
        FINAL_STREAM,
    )?;
    let exact = ansatz.expectation(&result.best_params)?;

    let mut rec = ctx.base_record(task, data);
    rec.p = p;
    rec.distance = distance;
    rec.initial = initial.name().into();
    rec.method = if filtered { "post_selected" } else { "unfiltered" }.into();
    rec.shots = shots;
    rec.max_estimations = budget;
    rec.estimations = result.estimations;
    rec.function_accesses = result.function_accesses;
    rec.best_estimate = Some(result.best_estimate);
    rec.exact_expectation = Some(exact);
    if let Ok((kept, _)) = post_select(&outcomes) {
        let idx: Vec<u64> = kept.iter().map(|o| o.index).collect();
        rec.set_report(&MetricReport::sampled(&idx, &data.model, &data.truth)?);
    } else {
        rec.alpha_mean = Some(data.truth.normalize(fallback));
    }
    rec.p_ps = Some(feasible_fraction(&outcomes));
    rec.x = Some(data.truth.normalize(unfiltered_mean(costs, &outcomes)));
    rec.y = Some(data.truth.normalize(exact));
    let traces = if ctx.config.write_traces {
        vec![(format!("task-{:05}-{}", task.index, rec.method), result)]
    } else {
        Vec::new()
    };
    Ok(TaskOutput {
        records: vec![rec],
        traces,
        ..Default::default()
    })
}
