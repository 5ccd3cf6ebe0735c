mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use dgmvp::encoding::{BitString, EncodingSpec};
use dgmvp::hamiltonian::{
    apply_cost_diagonal, apply_cost_operator, build_cost_model, build_cost_model_unmerged, eval_cost,
};
use dgmvp::market::{synthetic_covariance, CovarianceMatrix};
use dgmvp::simulator::Statevector;

/// `a^2 x^T Sigma x` computed straight from the bits.
fn oracle_cost(spec: &EncodingSpec, sigma: &CovarianceMatrix, index: u64) -> f64 {
    let l = spec.l();
    let x: Vec<f64> = (0..spec.n())
        .map(|t| (0..l).map(|k| (((index >> (t * l + k)) & 1) << k) as f64).sum())
        .collect();
    let a = 1.0 / ((1u64 << l) - 1) as f64;
    let mut f = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            f += sigma.get(i, j) * x[i] * x[j];
        }
    }
    a * a * f
}

fn pauli_diagonal(spec: &EncodingSpec, sigma: &CovarianceMatrix, index: u64) -> f64 {
    let sum = build_cost_model(spec, sigma).unwrap().pauli_sum();
    sum.diagonal_value(index).unwrap().re
}

#[test]
fn single_asset_single_bit() {
    let spec = EncodingSpec::new(1, 1).unwrap();
    let sigma = CovarianceMatrix::unlabeled(vec![vec![2.5]]).unwrap();
    let model = build_cost_model(&spec, &sigma).unwrap();
    assert_eq!(model.z_terms().len(), 1);
    assert!(model.zz_terms().is_empty());
    assert!((model.ising_value(0) - 0.0).abs() < 1e-15);
    assert!((model.ising_value(1) - 2.5).abs() < 1e-15);
}

#[test]
fn identity_two_assets_one_bit() {
    let spec = EncodingSpec::new(2, 1).unwrap();
    let sigma = CovarianceMatrix::identity(2);
    let want = [0.0, 1.0, 1.0, 2.0];
    for (i, w) in want.iter().enumerate() {
        assert!((pauli_diagonal(&spec, &sigma, i as u64) - w).abs() < 1e-14);
    }
}

#[test]
fn random_three_by_two_instance_all_states() {
    let spec = EncodingSpec::new(3, 2).unwrap();
    let sigma = synthetic_covariance(&mut ChaCha8Rng::seed_from_u64(31), 3, 2);
    let sum = build_cost_model(&spec, &sigma).unwrap().pauli_sum();
    for i in 0..64u64 {
        let got = sum.diagonal_value(i).unwrap();
        assert!(got.im.abs() < 1e-15);
        assert!((got.re - oracle_cost(&spec, &sigma, i)).abs() < 1e-12, "state {i}");
    }
}

#[test]
fn eval_cost_examples() {
    let spec = EncodingSpec::new(2, 3).unwrap();
    let sigma = synthetic_covariance(&mut ChaCha8Rng::seed_from_u64(2), 2, 2);
    assert_eq!(eval_cost(&spec, &sigma, &BitString::zeros(6)).unwrap(), 0.0);

    let one = EncodingSpec::new(1, 3).unwrap();
    let s1 = CovarianceMatrix::unlabeled(vec![vec![0.7]]).unwrap();
    assert!((eval_cost(&one, &s1, &"111".parse().unwrap()).unwrap() - 0.7).abs() < 1e-15);

    let model = build_cost_model(&spec, &sigma).unwrap();
    let table = model.cost_table().unwrap();
    for i in 0..64u64 {
        let s = Statevector::basis(6, i).unwrap();
        let bits = BitString::from_index(i, 6);
        assert!((s.expectation_diagonal(&table).unwrap() - eval_cost(&spec, &sigma, &bits).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn term_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (n, l) in [(2, 1), (2, 3), (3, 2), (4, 3), (5, 2)] {
        let spec = EncodingSpec::new(n, l).unwrap();
        let sigma = synthetic_covariance(&mut rng, n, 2);
        let unmerged = build_cost_model_unmerged(&spec, &sigma).unwrap();
        assert_eq!(unmerged.zz_terms().len(), l * l * n * (n - 1) / 2 + n * l * (l - 1));
        assert_eq!(unmerged.z_terms().len(), n * l);
        let merged = build_cost_model(&spec, &sigma).unwrap();
        assert_eq!(merged.zz_terms().len(), l * l * n * (n - 1) / 2 + n * l * (l - 1) / 2);
        for i in 0..1u64 << (n * l) {
            assert!((merged.ising_value(i) - unmerged.ising_value(i)).abs() < 1e-12);
        }
    }
}

#[test]
fn cost_operator_examples() {
    let spec = EncodingSpec::new(2, 2).unwrap();
    let sigma = synthetic_covariance(&mut ChaCha8Rng::seed_from_u64(5), 2, 1);
    let model = build_cost_model(&spec, &sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s0 = random_state(&mut rng, 4);

    let mut s = s0.clone();
    apply_cost_operator(&mut s, &model, 0.0).unwrap();
    assert!(vec_diff(s.amplitudes(), s0.amplitudes()) < 1e-15);

    let mut b = Statevector::basis(4, 9).unwrap();
    apply_cost_operator(&mut b, &model, 1.7).unwrap();
    assert!((b.amplitudes()[9].norm() - 1.0).abs() < 1e-14);

    let gamma = 0.83;
    let mut s = s0.clone();
    apply_cost_operator(&mut s, &model, gamma).unwrap();
    let (z1, z2) = (6usize, 9usize);
    let before = s0.amplitudes()[z1] / s0.amplitudes()[z2];
    let after = s.amplitudes()[z1] / s.amplitudes()[z2];
    let f = |z: usize| oracle_cost(&spec, &sigma, z as u64);
    let want = c(0.0, -gamma * (f(z1) - f(z2))).exp();
    assert!((after / before - want).norm() < 1e-12);
}

#[test]
fn gate_sequence_equals_diagonal_multiplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for (n, l) in [(2, 2), (3, 2), (2, 3), (4, 2)] {
        let spec = EncodingSpec::new(n, l).unwrap();
        let sigma = synthetic_covariance(&mut rng, n, 2);
        let model = build_cost_model(&spec, &sigma).unwrap();
        let table = model.cost_table().unwrap();
        for _ in 0..5 {
            let gamma = rng.random_range(-3.0..3.0);
            let s0 = random_state(&mut rng, spec.qubits());
            let mut gates = s0.clone();
            apply_cost_operator(&mut gates, &model, gamma).unwrap();
            let mut diag = s0;
            apply_cost_diagonal(&mut diag, &table, model.constant(), gamma).unwrap();
            assert!(vec_diff(gates.amplitudes(), diag.amplitudes()) < 1e-11);
        }
    }
}

#[test]
fn random_state_expectation_matches_pauli_terms() {
    let spec = EncodingSpec::new(3, 2).unwrap();
    let sigma = synthetic_covariance(&mut ChaCha8Rng::seed_from_u64(8), 3, 2);
    let model = build_cost_model(&spec, &sigma).unwrap();
    let s = random_state(&mut ChaCha8Rng::seed_from_u64(9), 6);
    let probs = s.probabilities();
    // Each Z string contributes coefficient times its signed probability mass.
    let mut want = model.constant();
    for (p, k) in model.pauli_sum().terms() {
        if *p == dgmvp::pauli::PauliString::IDENTITY {
            continue;
        }
        let z: f64 = probs
            .iter()
            .enumerate()
            .map(|(i, pr)| if (p.z & i as u64).count_ones() % 2 == 0 { *pr } else { -pr })
            .sum();
        want += k.re * z;
    }
    let got = s.expectation_diagonal(&model.cost_table().unwrap()).unwrap();
    assert!((got - want).abs() < 1e-10);
}

#[test]
fn export_lists_every_term() {
    let spec = EncodingSpec::new(3, 2).unwrap();
    let sigma = synthetic_covariance(&mut ChaCha8Rng::seed_from_u64(1), 3, 2);
    let model = build_cost_model(&spec, &sigma).unwrap();
    let ex = model.export();
    assert_eq!(ex.terms.len(), model.z_terms().len() + model.zz_terms().len());
    let back: dgmvp::hamiltonian::CostExport = serde_json::from_str(&serde_json::to_string(&ex).unwrap()).unwrap();
    assert_eq!(back, ex);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn pauli_diagonal_equals_quadratic_form(seed in any::<u64>(), n in 1usize..5, l in 1usize..4) {
        prop_assume!(n * l <= 12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = EncodingSpec::new(n, l).unwrap();
        let sigma = synthetic_covariance(&mut rng, n, 1 + n / 2);
        let model = build_cost_model(&spec, &sigma).unwrap();
        let sum = model.pauli_sum();
        for i in 0..1u64 << spec.qubits() {
            let want = oracle_cost(&spec, &sigma, i);
            prop_assert!((sum.diagonal_value(i).unwrap().re - want).abs() < 1e-10);
            prop_assert!((model.ising_value(i) - want).abs() < 1e-10);
        }
    }
}
