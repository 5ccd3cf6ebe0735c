use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dgmvp::circuits::{Ansatz, InitialState, InitialStateKind, MixerSpec};
use dgmvp::encoding::EncodingSpec;
use dgmvp::hamiltonian::build_cost_model;
use dgmvp::market::synthetic_covariance;
use dgmvp::optimizers::{
    cobyla_style, dual_annealing, estimate_expectation, eval_rng, exact_objective, layerwise,
    nelder_mead, sampled_objective, Bounds, CobylaParams, DaParams, Evaluator, InnerOptimizer,
    LayerwiseDriver, NelderMeadParams, OptResult,
};

fn ansatz(seed: u64, n: usize, l: usize, kind: InitialStateKind) -> Ansatz {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = EncodingSpec::new(n, l).unwrap();
    let sigma = synthetic_covariance(&mut rng, n, 2);
    let model = build_cost_model(&spec, &sigma).unwrap();
    let init = InitialState::resolve(kind, &spec, &sigma, &mut rng).unwrap();
    Ansatz::new(&model, MixerSpec::new(1), init).unwrap()
}

#[test]
fn basis_state_estimate_is_exact() {
    let a = ansatz(1, 3, 2, InitialStateKind::Maxbias);
    let index = a.initial().index(a.spec()) as usize;
    // With zero angles the state stays on the initial basis state.
    for shots in [1, 16, 1000] {
        let e = estimate_expectation(&a, &[0.0, 0.0], shots, 3, 0).unwrap();
        assert!((e - a.costs()[index]).abs() < 1e-12 * a.costs()[index].abs().max(1.0));
    }
}

#[test]
fn estimate_converges_with_shots() {
    let a = ansatz(2, 2, 2, InitialStateKind::Maxbias);
    let params = [0.9, 0.7];
    let exact = a.expectation(&params).unwrap();
    let state = a.state(&params).unwrap();
    let var: f64 = state
        .probabilities()
        .iter()
        .zip(a.costs())
        .map(|(p, c)| p * (c - exact).powi(2))
        .sum();
    let shots = 100_000;
    let est = estimate_expectation(&a, &params, shots, 5, 0).unwrap();
    assert!((est - exact).abs() < 4.0 * (var / shots as f64).sqrt());
}

#[test]
fn estimates_are_reproducible_per_index() {
    let a = ansatz(3, 3, 2, InitialStateKind::EqualWeighted);
    let x = [1.1, 2.3];
    let e1 = estimate_expectation(&a, &x, 16, 9, 4).unwrap();
    let e2 = estimate_expectation(&a, &x, 16, 9, 4).unwrap();
    assert_eq!(e1, e2);
    let mut r1 = eval_rng(9, 4);
    let mut r2 = eval_rng(9, 5);
    assert_ne!(r1.random::<u64>(), r2.random::<u64>());
}

#[test]
fn counters_add_up() {
    let mut f = |x: &[f64], _: u64| x[0];
    let mut eval = Evaluator::new(&mut f, 16, 10);
    for v in [3.0, 1.0, 2.0] {
        eval.eval(&[v]);
    }
    assert_eq!(eval.remaining(), 7);
    let r = eval.into_result(0);
    assert_eq!(r.estimations, 3);
    assert_eq!(r.function_accesses, 48);
    assert_eq!(r.best_estimate, 1.0);
    assert_eq!(r.best_params, vec![1.0]);
    assert_eq!(r.trace.last().unwrap().cumulative_shots, 48);
}

#[test]
fn trace_csv_has_one_row_per_estimate() {
    let mut f = |x: &[f64], _: u64| x[0] + x[1];
    let mut eval = Evaluator::new(&mut f, 4, 10);
    eval.eval(&[0.5, 0.25]);
    eval.eval(&[0.1, 0.2]);
    let mut buf = Vec::new();
    eval.into_result(1).write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eval_index,param_0,param_1,estimate,cumulative_n_f");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].ends_with(",8"));
}

#[test]
fn dual_annealing_finds_bowl_minimum() {
    for seed in 0..20 {
        let mut f = |x: &[f64], _: u64| (x[0] - 1.0).powi(2);
        let mut eval = Evaluator::new(&mut f, 1, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        dual_annealing(&mut eval, &Bounds::angles(1), None, DaParams::default(), &mut rng);
        assert!(eval.used() <= 500);
        let r = eval.into_result(seed);
        assert!((r.best_params[0] - 1.0).abs() < 1e-2, "seed {seed}: {:?}", r.best_params);
    }
}

#[test]
fn dual_annealing_handles_a_rugged_objective() {
    // Rastrigin-like in two angles; global minimum at (pi, pi).
    let mut f = |x: &[f64], _: u64| {
        x.iter()
            .map(|v| {
                let d = v - std::f64::consts::PI;
                d * d - (3.0 * d).cos() + 1.0
            })
            .sum::<f64>()
    };
    let mut eval = Evaluator::new(&mut f, 1, 3000);
    dual_annealing(&mut eval, &Bounds::angles(2), None, DaParams::default(), &mut ChaCha8Rng::seed_from_u64(3));
    let r = eval.into_result(3);
    assert!(r.best_estimate < 1e-6, "{}", r.best_estimate);
}

#[test]
fn dual_annealing_respects_the_cap_under_noise() {
    let mut noise = ChaCha8Rng::seed_from_u64(0);
    let mut f = |x: &[f64], _: u64| x[0].sin() + noise.random_range(-0.5..0.5);
    for cap in [1, 7, 150, 2000] {
        let mut eval = Evaluator::new(&mut f, 16, cap);
        dual_annealing(&mut eval, &Bounds::angles(1), None, DaParams::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(eval.used() <= cap);
    }
}

#[test]
fn cobyla_converges_on_a_quadratic() {
    let target = [2.0, 4.5, 1.25];
    let mut f = |x: &[f64], _: u64| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut eval = Evaluator::new(&mut f, 1, 5000);
    let params = CobylaParams {
        rho_begin: 1.0,
        rho_end: 1e-7,
    };
    let (_, x) = cobyla_style(&mut eval, &Bounds::angles(3), &[1.0, 1.0, 1.0], params);
    let grad: f64 = x.iter().zip(&target).map(|(a, b)| (2.0 * (a - b)).powi(2)).sum::<f64>().sqrt();
    assert!(grad < 1e-4, "{x:?}");
}

#[test]
fn cobyla_starting_at_the_optimum_stops_quickly() {
    let mut f = |x: &[f64], _: u64| (x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2);
    let mut eval = Evaluator::new(&mut f, 1, 5000);
    let (fx, _) = cobyla_style(&mut eval, &Bounds::angles(2), &[3.0, 3.0], CobylaParams::default());
    assert_eq!(fx, 0.0);
    assert!(eval.used() < 200, "{}", eval.used());
}

#[test]
fn cobyla_terminates_within_budget_on_noise() {
    let mut noise = ChaCha8Rng::seed_from_u64(4);
    let mut f = |_: &[f64], _: u64| noise.random_range(0.0..1.0);
    let mut eval = Evaluator::new(&mut f, 16, 300);
    cobyla_style(&mut eval, &Bounds::angles(2), &[1.0, 1.0], CobylaParams::default());
    assert!(eval.used() <= 300);
}

#[test]
fn nelder_mead_stays_in_bounds() {
    let mut f = |x: &[f64], _: u64| -x[0] - x[1];
    let mut eval = Evaluator::new(&mut f, 1, 400);
    let bounds = Bounds::angles(2);
    let (fx, x) = nelder_mead(&mut eval, &bounds, &[1.0, 1.0], NelderMeadParams::default());
    assert!(bounds.contains(&x));
    assert!((fx + 2.0 * TAU).abs() < 1e-3);
}

#[test]
fn single_layer_frozen_equals_fixed() {
    let a = ansatz(5, 3, 2, InitialStateKind::Maxbias);
    let run = |driver| {
        let mut obj = sampled_objective(&a, 16, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        layerwise(driver, 1, 2, InnerOptimizer::DualAnnealing(DaParams::default()), 100, 16, &mut obj, &mut rng, 11)
    };
    let fixed = run(LayerwiseDriver::Fixed);
    assert_eq!(run(LayerwiseDriver::Frozen), fixed);
    assert_eq!(run(LayerwiseDriver::Unfrozen), fixed);
    assert_eq!(fixed.result.estimations, 100);
}

#[test]
fn zero_layer_is_an_identity() {
    let a = ansatz(6, 3, 2, InitialStateKind::EqualWeighted);
    let one = [0.8, 2.1];
    let two = [0.8, 0.0, 2.1, 0.0];
    let s1 = a.state(&one).unwrap();
    let s2 = a.state(&two).unwrap();
    let diff = s1
        .amplitudes()
        .iter()
        .zip(s2.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12);
}

#[test]
fn frozen_keeps_earlier_layers() {
    let a = ansatz(7, 3, 2, InitialStateKind::Maxbias);
    let mut obj = exact_objective(&a);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inner = InnerOptimizer::Cobyla(CobylaParams::default());
    let out = layerwise(LayerwiseDriver::Frozen, 3, 2, inner, 60, 1, &mut obj, &mut rng, 0);
    assert_eq!(out.stages.len(), 3);
    let first = &out.stages[0].params;
    let last = &out.stages[2].params;
    // Layout is gammas then betas.
    assert_eq!(last[0], first[0]);
    assert_eq!(last[3], first[1]);
    let total: usize = out.stages.iter().map(|s| s.estimations).sum();
    assert_eq!(total, out.result.estimations);
    assert!(out.stages.iter().all(|s| s.estimations <= 60));
}

#[test]
fn unfrozen_never_does_worse_than_its_start() {
    // A zero layer reproduces the previous optimum, so every unfrozen stage
    // starts from the previous best and can only improve on the exact objective.
    let a = ansatz(8, 3, 2, InitialStateKind::Maxbias);
    let mut obj = exact_objective(&a);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inner = InnerOptimizer::DualAnnealing(DaParams::default());
    let out = layerwise(LayerwiseDriver::Unfrozen, 3, 2, inner, 200, 1, &mut obj, &mut rng, 0);
    for w in out.stages.windows(2) {
        assert!(w[1].best_estimate <= w[0].best_estimate + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn best_is_the_trace_minimum(values in prop::collection::vec(-1e3..1e3f64, 1..40)) {
        let mut i = 0;
        let mut f = |_: &[f64], _: u64| { i += 1; values[i - 1] };
        let mut eval = Evaluator::new(&mut f, 2, values.len());
        for _ in 0..values.len() {
            eval.eval(&[0.0]);
        }
        let r: OptResult = eval.into_result(0);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.best_estimate, min);
        prop_assert_eq!(r.function_accesses, 2 * values.len() as u64);
    }

    #[test]
    fn layerwise_budget_is_exact(seed in any::<u64>(), p in 1usize..4, budget in 5usize..40, driver in 0usize..3) {
        let driver = [LayerwiseDriver::Frozen, LayerwiseDriver::Unfrozen, LayerwiseDriver::Fixed][driver];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut obj = |x: &[f64], _: u64| x.iter().map(|v| v.sin()).sum::<f64>();
        let out = layerwise(driver, p, 2, InnerOptimizer::DualAnnealing(DaParams::default()), budget, 16, &mut obj, &mut rng, seed);
        prop_assert!(out.result.estimations <= budget * p);
        prop_assert_eq!(out.result.function_accesses, 16 * out.result.estimations as u64);
        let idx: Vec<u64> = out.result.trace.iter().map(|r| r.eval_index).collect();
        prop_assert_eq!(idx, (0..out.result.estimations as u64).collect::<Vec<_>>());
    }
}
