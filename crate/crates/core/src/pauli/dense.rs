//! Small dense operators used as oracles for the Pauli algebra.

use num_complex::Complex64;

use super::{PauliString, PauliSum};
use crate::error::{Error, Result};

/// Dense matrices are only built for registers up to this size.
pub const MAX_DENSE_QUBITS: usize = 5;

/// Row-major square matrix; basis index bit `q` is qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut out = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                out.data[r * dim + c] = f(r, c);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn pauli_string(qubits: usize, s: &PauliString) -> Result<Self> {
        if qubits > MAX_DENSE_QUBITS {
            return Err(Error::GuardExceeded {
                qubits,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << qubits;
        let mut out = Self::zeros(dim);
        // i^{|x&z|} X^x Z^z |j> = i^{|x&z|} (-1)^{|z&j|} |j ^ x>
        let base = match (s.x & s.z).count_ones() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        for j in 0..dim as u64 {
            let sign = if (s.z & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out.data[((j ^ s.x) as usize) * dim + j as usize] = base * sign;
        }
        Ok(out)
    }

    pub fn from_pauli_sum(sum: &PauliSum) -> Result<Self> {
        let qubits = sum.qubits();
        if qubits > MAX_DENSE_QUBITS {
            return Err(Error::GuardExceeded {
                qubits,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let mut out = Self::zeros(1 << qubits);
        for (s, c) in sum.terms() {
            let p = Self::pauli_string(qubits, s)?;
            for (o, v) in out.data.iter_mut().zip(&p.data) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == Complex64::default() {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim, other.dim);
        DenseOperator {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> DenseOperator {
        DenseOperator {
            dim: self.dim,
            data: self.data.iter().map(|a| a * k).collect(),
        }
    }

    pub fn adjoint(&self) -> DenseOperator {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    /// `tr(self^† other)`.
    pub fn hs_inner(&self, other: &DenseOperator) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.get(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring with a Taylor kernel.
    pub fn expm(&self) -> DenseOperator {
        let norm = self.norm_one();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scaled = self.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
        let mut result = Self::identity(self.dim);
        let mut term = Self::identity(self.dim);
        for k in 1..=24 {
            term = term.matmul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }

    /// Applies the operator to a state vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }
}

/// Coefficients of `u` on an orthogonal basis and the norm of what is left.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub coefficients: Vec<Complex64>,
    pub residual: f64,
}

/// Projects `u` onto a Hilbert-Schmidt orthogonal basis.
pub fn support_decompose(u: &DenseOperator, basis: &[PauliSum]) -> Result<Decomposition> {
    let dense: Vec<DenseOperator> = basis
        .iter()
        .map(DenseOperator::from_pauli_sum)
        .collect::<Result<_>>()?;
    for d in &dense {
        if d.dim() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                got: d.dim(),
            });
        }
    }
    let norms: Vec<f64> = dense.iter().map(|d| d.hs_inner(d).re).collect();
    for i in 0..dense.len() {
        for j in 0..i {
            let overlap = dense[i].hs_inner(&dense[j]).norm();
            if overlap > 1e-10 * (norms[i] * norms[j]).sqrt().max(1.0) {
                return Err(Error::NonOrthogonalBasis(j, i));
            }
        }
    }
    let mut remainder = u.clone();
    let mut coefficients = Vec::with_capacity(dense.len());
    for (d, &nrm) in dense.iter().zip(&norms) {
        if nrm == 0.0 {
            return Err(Error::InvalidArgument("zero basis element".into()));
        }
        let c = d.hs_inner(u) / nrm;
        remainder = remainder.add(&d.scale(-c));
        coefficients.push(c);
    }
    Ok(Decomposition {
        coefficients,
        residual: remainder.frobenius_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{exp_s_minus, s_minus};

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DenseOperator::zeros(4);
        assert!(z.expm().max_abs_diff(&DenseOperator::identity(4)) < 1e-15);
    }

    #[test]
    fn closed_form_two_excitation_matches_expm() {
        let beta = 2.3;
        let gen = s_minus(2, 0, 1).to_dense().unwrap();
        let exact = gen.scale(Complex64::new(beta, 0.0)).expm();
        let closed = exp_s_minus(2, 0, 1, beta).to_dense().unwrap();
        assert!(exact.max_abs_diff(&closed) < 1e-13);
    }

    #[test]
    fn dense_cap_is_enforced() {
        assert!(PauliSum::identity(6).to_dense().is_err());
    }
}
