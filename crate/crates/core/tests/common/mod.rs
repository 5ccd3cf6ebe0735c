//! Dense-matrix oracles shared by the integration tests. Qubit 0 is the
//! least significant bit of a basis index throughout.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use dgmvp::simulator::Statevector;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn one_qubit(name: char) -> M {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let entries = match name {
        'I' => [one, o, o, one],
        'X' => [o, one, one, o],
        'Y' => [o, -i, i, o],
        'Z' => [one, o, o, -one],
        // |1><0| and |0><1|.
        '+' => [o, o, one, o],
        '-' => [o, one, o, o],
        // |1><1|.
        '1' => [o, o, o, one],
        _ => panic!("unknown single-qubit operator {name}"),
    };
    M::from_row_slice(2, 2, &entries)
}

/// Tensor product placing `ops[j].1` on qubit `ops[j].0`, identity elsewhere.
pub fn embed(qubits: usize, ops: &[(usize, char)]) -> M {
    let mut out = M::from_element(1, 1, c(1.0, 0.0));
    for q in (0..qubits).rev() {
        let name = ops.iter().find(|(p, _)| *p == q).map_or('I', |(_, n)| *n);
        out = out.kronecker(&one_qubit(name));
    }
    out
}

pub fn expm(generator: &M) -> M {
    generator.clone().exp()
}

pub fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn random_amplitudes<R: Rng + ?Sized>(rng: &mut R, qubits: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1usize << qubits)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, qubits: usize) -> Statevector {
    Statevector::from_amplitudes(random_amplitudes(rng, qubits)).unwrap()
}

pub fn apply_dense(m: &M, v: &[Complex64]) -> Vec<Complex64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

/// Matrix of a state-to-state map, built column by column from basis inputs.
pub fn matrix_of(qubits: usize, f: impl Fn(&mut Statevector)) -> M {
    let d = 1usize << qubits;
    let mut out = M::zeros(d, d);
    for col in 0..d {
        let mut s = Statevector::basis(qubits, col as u64).unwrap();
        f(&mut s);
        for (row, a) in s.amplitudes().iter().enumerate() {
            out[(row, col)] = *a;
        }
    }
    out
}
