//! DGMVP cost function and its Ising form.
//!
//! With `x_t = sum_k 2^{k-1} z_t^k` and `z = (1 - Z)/2`, the risk
//! `a^2 x^T Sigma x` becomes a sum of `Z` and `ZZ` terms plus a constant.
//! Bit weights are kept in lot units; the lot size enters once through `a`.

use serde::{Deserialize, Serialize};

use crate::encoding::{decode, BitString, EncodingSpec, ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::market::CovarianceMatrix;
use crate::pauli::{PauliString, PauliSum};
use crate::simulator::{GateEvent, Statevector};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZzTerm {
    pub a: usize,
    pub b: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTerm {
    pub q: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    spec: EncodingSpec,
    sigma: Vec<Vec<f64>>,
    zz_terms: Vec<ZzTerm>,
    z_terms: Vec<ZTerm>,
    constant: f64,
}

/// Builds the Ising form with same-asset `(k1, k2)` / `(k2, k1)` pairs merged.
pub fn build_cost_model(spec: &EncodingSpec, sigma: &CovarianceMatrix) -> Result<CostModel> {
    build(spec, sigma, true)
}

/// Same Hamiltonian with every ordered same-asset pair kept as its own term.
pub fn build_cost_model_unmerged(spec: &EncodingSpec, sigma: &CovarianceMatrix) -> Result<CostModel> {
    build(spec, sigma, false)
}

fn build(spec: &EncodingSpec, sigma: &CovarianceMatrix, merge: bool) -> Result<CostModel> {
    let n = spec.n();
    let l = spec.l();
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sigma.dim(),
        });
    }
    let a = spec.lot_f64();
    let bk = |k: usize| (1u64 << k) as f64;
    let mut zz_terms = Vec::new();
    let mut z_terms = Vec::with_capacity(n * l);

    for i in 0..n {
        for j in (i + 1)..n {
            for k1 in 0..l {
                for k2 in 0..l {
                    zz_terms.push(ZzTerm {
                        a: spec.qubit(i, k1),
                        b: spec.qubit(j, k2),
                        coefficient: a * a * sigma.get(i, j) * bk(k1) * bk(k2) / 2.0,
                    });
                }
            }
        }
    }
    for i in 0..n {
        let sii = sigma.get(i, i);
        for k1 in 0..l {
            for k2 in 0..l {
                if k1 == k2 || (merge && k2 < k1) {
                    continue;
                }
                let scale = if merge { 2.0 } else { 1.0 };
                zz_terms.push(ZzTerm {
                    a: spec.qubit(i, k1),
                    b: spec.qubit(i, k2),
                    coefficient: scale * a * a * sii * bk(k1) * bk(k2) / 4.0,
                });
            }
        }
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| sigma.get(i, j)).sum();
        for k in 0..l {
            z_terms.push(ZTerm {
                q: spec.qubit(i, k),
                coefficient: -0.5 * a * row_sum * bk(k),
            });
        }
    }
    // f vanishes on the all-zero string, where every Z reads +1.
    let constant = -(zz_terms.iter().map(|t| t.coefficient).sum::<f64>()
        + z_terms.iter().map(|t| t.coefficient).sum::<f64>());

    Ok(CostModel {
        spec: *spec,
        sigma: (0..n).map(|i| (0..n).map(|j| sigma.get(i, j)).collect()).collect(),
        zz_terms,
        z_terms,
        constant,
    })
}

/// `a^2 x^T Sigma x` for the lot vector encoded by `bits`.
pub fn eval_cost(spec: &EncodingSpec, sigma: &CovarianceMatrix, bits: &BitString) -> Result<f64> {
    if sigma.dim() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: sigma.dim(),
        });
    }
    let (lots, _) = decode(spec, bits)?;
    let x: Vec<f64> = lots.0.iter().map(|&v| v as f64).collect();
    Ok(quadratic_form(spec.lot_f64(), &x, |i, j| sigma.get(i, j)))
}

fn quadratic_form(a: f64, x: &[f64], sigma: impl Fn(usize, usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        for (j, xj) in x.iter().enumerate() {
            acc += sigma(i, j) * xi * xj;
        }
    }
    a * a * acc
}

impl CostModel {
    pub fn spec(&self) -> &EncodingSpec {
        &self.spec
    }

    pub fn zz_terms(&self) -> &[ZzTerm] {
        &self.zz_terms
    }

    pub fn z_terms(&self) -> &[ZTerm] {
        &self.z_terms
    }

    /// The scalar `c`; kept so that metrics see true costs.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i][j]
    }

    /// Cost of a basis index straight from the quadratic form.
    pub fn cost_of_index(&self, index: u64) -> f64 {
        let x: Vec<f64> = (0..self.spec.n())
            .map(|t| self.spec.lots_of_index(index, t) as f64)
            .collect();
        quadratic_form(self.spec.lot_f64(), &x, |i, j| self.sigma[i][j])
    }

    /// Cost of a basis index from the Ising terms plus the constant.
    pub fn ising_value(&self, index: u64) -> f64 {
        let z = |q: usize| if (index >> q) & 1 == 0 { 1.0 } else { -1.0 };
        self.constant
            + self.z_terms.iter().map(|t| t.coefficient * z(t.q)).sum::<f64>()
            + self
                .zz_terms
                .iter()
                .map(|t| t.coefficient * z(t.a) * z(t.b))
                .sum::<f64>()
    }

    /// `f(z)` for every basis index.
    pub fn cost_table(&self) -> Result<Vec<f64>> {
        let qubits = self.spec.qubits();
        if qubits > ENUMERATION_LIMIT {
            return Err(Error::GuardExceeded {
                qubits,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok((0..1u64 << qubits).map(|i| self.cost_of_index(i)).collect())
    }

    /// The Hamiltonian as a Pauli sum, constant included.
    pub fn pauli_sum(&self) -> PauliSum {
        use crate::pauli::Letter;
        let qubits = self.spec.qubits();
        let mut sum = PauliSum::identity(qubits).scale_re(self.constant);
        for t in &self.z_terms {
            sum.add_term(
                PauliString::single(t.q, Letter::Z),
                Complex64::new(t.coefficient, 0.0),
            );
        }
        for t in &self.zz_terms {
            sum.add_term(
                PauliString::from_letters(&[(t.a, Letter::Z), (t.b, Letter::Z)]),
                Complex64::new(t.coefficient, 0.0),
            );
        }
        sum
    }

    /// Gates realising `exp(-i gamma (C - c))`.
    pub fn gate_events(&self, gamma: f64) -> Vec<GateEvent> {
        let mut events = Vec::with_capacity(self.z_terms.len() + self.zz_terms.len());
        for t in &self.z_terms {
            events.push(GateEvent::Rz {
                q: t.q,
                theta: 2.0 * gamma * t.coefficient,
            });
        }
        for t in &self.zz_terms {
            events.push(GateEvent::Rzz {
                a: t.a,
                b: t.b,
                theta: 2.0 * gamma * t.coefficient,
            });
        }
        events
    }

    pub fn export(&self) -> CostExport {
        let mut terms: Vec<ExportTerm> = self
            .z_terms
            .iter()
            .map(|t| ExportTerm {
                qubits: vec![t.q],
                coefficient: t.coefficient,
            })
            .collect();
        terms.extend(self.zz_terms.iter().map(|t| ExportTerm {
            qubits: vec![t.a, t.b],
            coefficient: t.coefficient,
        }));
        CostExport {
            n: self.spec.n(),
            l: self.spec.l(),
            constant: self.constant,
            terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportTerm {
    pub qubits: Vec<usize>,
    pub coefficient: f64,
}

/// JSON shape of the Hamiltonian; each term is a product of `Z` on `qubits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostExport {
    pub n: usize,
    pub l: usize,
    pub constant: f64,
    pub terms: Vec<ExportTerm>,
}

/// Applies the cost layer gate by gate.
pub fn apply_cost_operator(state: &mut Statevector, model: &CostModel, gamma: f64) -> Result<()> {
    for event in model.gate_events(gamma) {
        event.apply(state)?;
    }
    Ok(())
}

/// Same unitary as [`apply_cost_operator`] from a precomputed cost table.
pub fn apply_cost_diagonal(
    state: &mut Statevector,
    table: &[f64],
    constant: f64,
    gamma: f64,
) -> Result<()> {
    if table.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: table.len(),
        });
    }
    for (amp, &f) in state.amplitudes_mut().iter_mut().zip(table) {
        *amp *= Complex64::from_polar(1.0, -gamma * (f - constant));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matches_closed_form() {
        let spec = EncodingSpec::new(3, 2).unwrap();
        let sigma = CovarianceMatrix::unlabeled(vec![
            vec![2.0, 0.3, -0.1],
            vec![0.3, 1.0, 0.2],
            vec![-0.1, 0.2, 1.5],
        ])
        .unwrap();
        let model = build_cost_model(&spec, &sigma).unwrap();
        let a = spec.lot_f64();
        let d = spec.max_lots() as f64;
        let total: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| sigma.get(i, j)).sum();
        let b2: f64 = (0..2).map(|k| 4f64.powi(k)).sum();
        let diag: f64 = (0..3).map(|i| sigma.get(i, i)).sum();
        let expected = a * a * (d * d * total / 4.0 + diag * b2 / 4.0);
        assert!((model.constant() - expected).abs() < 1e-12);
    }
}
