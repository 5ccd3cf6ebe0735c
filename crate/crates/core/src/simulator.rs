//! Dense statevector simulator.
//!
//! Amplitude index bit `q` holds the value of qubit `q`. Excitation gates are
//! applied analytically on the amplitude pairs they mix rather than through a
//! gate decomposition.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Registers above this size are refused.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amps: Vec<Complex64>,
}

/// Inserts a zero bit at each position in `sorted` (ascending).
#[inline]
fn spread(mut k: usize, sorted: &[usize]) -> usize {
    for &p in sorted {
        k = ((k >> p) << (p + 1)) | (k & ((1 << p) - 1));
    }
    k
}

fn sorted<const N: usize>(mut qs: [usize; N]) -> [usize; N] {
    qs.sort_unstable();
    qs
}

impl Statevector {
    /// `|0...0>` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, index: u64) -> Result<Self> {
        if qubits > MAX_QUBITS {
            return Err(Error::GuardExceeded {
                qubits,
                limit: MAX_QUBITS,
            });
        }
        let dim = 1usize << qubits;
        if index as usize >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} outside {qubits}-qubit register"
            )));
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amps })
    }

    /// Wraps amplitudes after normalising them.
    pub fn from_amplitudes(mut amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "{dim} amplitudes is not a power of two"
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("zero or non-finite state".into()));
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in self.amps.iter_mut() {
                *a /= n;
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability that qubit `q` reads 1.
    pub fn excited_population(&self, q: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> q) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn check(&self, qs: &[usize]) -> Result<()> {
        for (i, &q) in qs.iter().enumerate() {
            if q >= self.qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    qubits: self.qubits,
                });
            }
            if qs[..i].contains(&q) {
                return Err(Error::IndexClash);
            }
        }
        Ok(())
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.check(&[q])?;
        let bit = 1 << q;
        for k in 0..self.dim() / 2 {
            let i = spread(k, &[q]);
            self.amps.swap(i, i | bit);
        }
        Ok(())
    }

    pub fn apply_z(&mut self, q: usize) -> Result<()> {
        self.check(&[q])?;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i >> q) & 1 == 1 {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// `exp(-i theta Z / 2)`: bit value 0 picks up `e^{-i theta/2}`.
    pub fn apply_rz(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check(&[q])?;
        let p0 = Complex64::from_polar(1.0, -theta / 2.0);
        let p1 = p0.conj();
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if (i >> q) & 1 == 0 { p0 } else { p1 };
        }
        Ok(())
    }

    /// `exp(-i theta Z_a Z_b / 2)`.
    pub fn apply_rzz(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        self.check(&[a, b])?;
        let even = Complex64::from_polar(1.0, -theta / 2.0);
        let odd = even.conj();
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if ((i >> a) ^ (i >> b)) & 1 == 0 { even } else { odd };
        }
        Ok(())
    }

    /// `Ry(theta) = [[cos, -sin], [sin, cos]]` at half angle.
    pub fn apply_ry(&mut self, q: usize, theta: f64) -> Result<()> {
        self.apply_controlled_ry(&[], q, theta)
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check(&[control, target])?;
        let (c, t) = (1 << control, 1 << target);
        let qs = sorted([control, target]);
        for k in 0..self.dim() / 4 {
            let i = spread(k, &qs) | c;
            self.amps.swap(i, i | t);
        }
        Ok(())
    }

    /// `Ry(theta)` on `target` when every control reads 1.
    pub fn apply_controlled_ry(&mut self, controls: &[usize], target: usize, theta: f64) -> Result<()> {
        let mut all: Vec<usize> = controls.to_vec();
        all.push(target);
        self.check(&all)?;
        let (s, c) = (theta / 2.0).sin_cos();
        let mask: usize = controls.iter().map(|&q| 1 << q).sum();
        let t = 1 << target;
        for i in 0..self.dim() {
            if i & t != 0 || i & mask != mask {
                continue;
            }
            let (a0, a1) = (self.amps[i], self.amps[i | t]);
            self.amps[i] = a0 * c - a1 * s;
            self.amps[i | t] = a0 * s + a1 * c;
        }
        Ok(())
    }

    /// `exp(beta (Q†_to Q_from - Q_to Q†_from))`: rotates an excitation on
    /// `from` onto `to`, so `|from=1,to=0>` goes to
    /// `cos(beta)|10> + sin(beta)|01>`.
    pub fn apply_two_excitation(&mut self, from: usize, to: usize, beta: f64) -> Result<()> {
        self.check(&[from, to])?;
        let (s, c) = beta.sin_cos();
        let (fb, tb) = (1 << from, 1 << to);
        let qs = sorted([from, to]);
        for k in 0..self.dim() / 4 {
            let base = spread(k, &qs);
            let (i10, i01) = (base | fb, base | tb);
            let (a10, a01) = (self.amps[i10], self.amps[i01]);
            self.amps[i10] = a10 * c - a01 * s;
            self.amps[i01] = a10 * s + a01 * c;
        }
        Ok(())
    }

    /// `exp(beta (Q†_hi Q_b Q_c - Q_hi Q†_b Q†_c))`: mixes `|hi,b,c> = |0,1,1>`
    /// with `|1,0,0>`; every other configuration is left unchanged.
    pub fn apply_three_excitation(&mut self, hi: usize, b: usize, c: usize, beta: f64) -> Result<()> {
        self.check(&[hi, b, c])?;
        let (s, co) = beta.sin_cos();
        let (hb, bb, cb) = (1 << hi, 1 << b, 1 << c);
        let qs = sorted([hi, b, c]);
        for k in 0..self.dim() / 8 {
            let base = spread(k, &qs);
            let (i011, i100) = (base | bb | cb, base | hb);
            let (a011, a100) = (self.amps[i011], self.amps[i100]);
            self.amps[i011] = a011 * co - a100 * s;
            self.amps[i100] = a011 * s + a100 * co;
        }
        Ok(())
    }

    /// Multiplies amplitude `z` by `exp(-i gamma phases[z])`.
    pub fn apply_diagonal_phase(&mut self, phases: &[f64], gamma: f64) -> Result<()> {
        if phases.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: phases.len(),
            });
        }
        for (a, &p) in self.amps.iter_mut().zip(phases) {
            *a *= Complex64::from_polar(1.0, -gamma * p);
        }
        Ok(())
    }

    /// `sum_z |amp_z|^2 costs[z]`.
    pub fn expectation_diagonal(&self, costs: &[f64]) -> Result<f64> {
        if costs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: costs.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(costs)
            .map(|(a, c)| a.norm_sqr() * c)
            .sum())
    }

    /// `shots` i.i.d. basis indices drawn from `|amp|^2`.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Vec<u64> {
        Sampler::new(self).sample(shots, rng)
    }

    /// Writes little-endian `(re, im)` doubles to `path` and a JSON sidecar
    /// next to it with the `.json` extension.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.dim() * 16);
        for a in &self.amps {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        let sidecar = DumpSidecar {
            qubit_count: self.qubits,
            amplitude_count: self.dim(),
            layout: "little-endian f64 pairs (re, im)".into(),
            ordering: "bit q of the amplitude index is qubit q; qubit q = t*l + k for asset t, bit k (LSB first)".into(),
        };
        std::fs::write(
            path.with_extension("json"),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        Ok(())
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.len() % 16 != 0 {
            return Err(Error::InvalidArgument("truncated statevector dump".into()));
        }
        let amps: Vec<Complex64> = bytes
            .chunks_exact(16)
            .map(|ch| {
                let re = f64::from_le_bytes(ch[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(ch[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        let dim = amps.len();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidArgument("dump length is not a power of two".into()));
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DumpSidecar {
    pub qubit_count: usize,
    pub amplitude_count: usize,
    pub layout: String,
    pub ordering: String,
}

/// Cumulative distribution over basis states, reusable across draws.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(state: &Statevector) -> Self {
        Self::from_probabilities(&state.probabilities())
    }

    pub fn from_probabilities(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    /// One draw per uniform variate.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cdf.last().expect("non-empty distribution");
        let u: f64 = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        // Guard against landing past the end through rounding, and skip
        // zero-probability states sitting at the boundary.
        idx.min(self.cdf.len() - 1) as u64
    }

    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Vec<u64> {
        (0..shots).map(|_| self.draw(rng)).collect()
    }
}

/// One gate of the ansatz circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateEvent {
    PauliX { q: usize },
    Rz { q: usize, theta: f64 },
    Rzz { a: usize, b: usize, theta: f64 },
    TwoExcitation { from: usize, to: usize, beta: f64 },
    ThreeExcitation { hi: usize, b: usize, c: usize, beta: f64 },
}

impl GateEvent {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            GateEvent::PauliX { q } | GateEvent::Rz { q, .. } => vec![q],
            GateEvent::Rzz { a, b, .. } => vec![a, b],
            GateEvent::TwoExcitation { from, to, .. } => vec![from, to],
            GateEvent::ThreeExcitation { hi, b, c, .. } => vec![hi, b, c],
        }
    }

    pub fn apply(&self, state: &mut Statevector) -> Result<()> {
        match *self {
            GateEvent::PauliX { q } => state.apply_x(q),
            GateEvent::Rz { q, theta } => state.apply_rz(q, theta),
            GateEvent::Rzz { a, b, theta } => state.apply_rzz(a, b, theta),
            GateEvent::TwoExcitation { from, to, beta } => state.apply_two_excitation(from, to, beta),
            GateEvent::ThreeExcitation { hi, b, c, beta } => {
                state.apply_three_excitation(hi, b, c, beta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn spread_inserts_zero_bits() {
        assert_eq!(spread(0b11, &[1]), 0b101);
        assert_eq!(spread(0b111, &[0, 2]), 0b11010);
    }

    #[test]
    fn sampler_never_returns_zero_mass_tail() {
        let probs = [0.5, 0.5, 0.0, 0.0];
        let s = Sampler::from_probabilities(&probs);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(s.draw(&mut rng) < 2);
        }
    }
}
