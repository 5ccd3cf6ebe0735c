//! Pauli-string arithmetic over up to 64 qubits.
//!
//! A [`PauliString`] stores its letters as two bitmasks (`x`, `z`); the letter
//! on qubit `q` is `I`, `X`, `Z` or `Y` for `(x_q, z_q) = (0,0), (1,0), (0,1),
//! (1,1)`. Phases live in the coefficients of a [`PauliSum`].

pub mod dense;
pub mod identities;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use dense::{support_decompose, DenseOperator, Decomposition};

/// Coefficients below this magnitude are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(q: usize, letter: Letter) -> Self {
        let bit = 1u64 << q;
        match letter {
            Letter::I => Self::IDENTITY,
            Letter::X => Self { x: bit, z: 0 },
            Letter::Z => Self { x: 0, z: bit },
            Letter::Y => Self { x: bit, z: bit },
        }
    }

    pub fn from_letters(letters: &[(usize, Letter)]) -> Self {
        letters.iter().fold(Self::IDENTITY, |acc, &(q, l)| {
            let s = Self::single(q, l);
            Self {
                x: acc.x | s.x,
                z: acc.z | s.z,
            }
        })
    }

    pub fn letter(&self, q: usize) -> Letter {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => Letter::I,
            (1, 0) => Letter::X,
            (0, 1) => Letter::Z,
            _ => Letter::Y,
        }
    }

    /// Highest qubit touched, plus one.
    pub fn span(&self) -> usize {
        64 - (self.x | self.z).leading_zeros() as usize
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Product `self * other` as `(phase, string)`.
    ///
    /// Writing each string as `i^{|x&z|} X^x Z^z`, the product picks up
    /// `(-1)^{|z1 & x2|}` from moving `Z^{z1}` past `X^{x2}`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let ones = |m: u64| m.count_ones() as i64;
        let exp = ones(self.x & self.z) + ones(other.x & other.z) + 2 * ones(self.z & other.x)
            - ones(x & z);
        let phase = match exp.rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (phase, PauliString { x, z })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Eigenvalue of a diagonal string on basis state `index`.
    pub fn diagonal_value(&self, index: u64) -> f64 {
        debug_assert!(self.is_diagonal());
        if (self.z & index).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.x == 0 && self.z == 0 {
            return f.write_str("I");
        }
        let mut first = true;
        for q in 0..self.span() {
            let c = match self.letter(q) {
                Letter::I => continue,
                Letter::X => 'X',
                Letter::Y => 'Y',
                Letter::Z => 'Z',
            };
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{c}{q}")?;
            first = false;
        }
        Ok(())
    }
}

/// Linear combination of Pauli strings on a fixed qubit universe.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(qubits: usize) -> Self {
        assert!(qubits <= 64, "at most 64 qubits");
        Self {
            qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(qubits: usize) -> Self {
        Self::from_string(qubits, PauliString::IDENTITY, Complex64::new(1.0, 0.0))
    }

    pub fn from_string(qubits: usize, s: PauliString, coeff: Complex64) -> Self {
        assert!(s.span() <= qubits, "string outside the qubit universe");
        let mut out = Self::zero(qubits);
        out.add_term(s, coeff);
        out
    }

    pub fn from_letters(qubits: usize, letters: &[(usize, Letter)], coeff: Complex64) -> Self {
        Self::from_string(qubits, PauliString::from_letters(letters), coeff)
    }

    pub fn x(qubits: usize, q: usize) -> Self {
        Self::from_letters(qubits, &[(q, Letter::X)], Complex64::new(1.0, 0.0))
    }

    pub fn y(qubits: usize, q: usize) -> Self {
        Self::from_letters(qubits, &[(q, Letter::Y)], Complex64::new(1.0, 0.0))
    }

    /// Product of `Z` on every listed qubit.
    pub fn z(qubits: usize, qs: &[usize]) -> Self {
        let letters: Vec<_> = qs.iter().map(|&q| (q, Letter::Z)).collect();
        Self::from_letters(qubits, &letters, Complex64::new(1.0, 0.0))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, s: PauliString, coeff: Complex64) {
        let entry = self.terms.entry(s).or_default();
        *entry += coeff;
        if entry.norm() < PRUNE_THRESHOLD {
            self.terms.remove(&s);
        }
    }

    fn check_universe(&self, other: &PauliSum) -> Result<()> {
        if self.qubits != other.qubits {
            return Err(Error::UniverseMismatch(self.qubits, other.qubits));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_universe(other)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_universe(other)?;
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (phase, s) = a.mul(b);
                *acc.entry(s).or_default() += phase * ca * cb;
            }
        }
        acc.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        Ok(PauliSum {
            qubits: self.qubits,
            terms: acc,
        })
    }

    pub fn scale(&self, k: Complex64) -> PauliSum {
        let mut out = Self::zero(self.qubits);
        for (s, c) in &self.terms {
            out.add_term(*s, c * k);
        }
        out
    }

    pub fn scale_re(&self, k: f64) -> PauliSum {
        self.scale(Complex64::new(k, 0.0))
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            qubits: self.qubits,
            terms: self.terms.iter().map(|(s, c)| (*s, c.conj())).collect(),
        }
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        let ab = self.try_mul(other)?;
        let ba = other.try_mul(self)?;
        ab.try_add(&ba.scale_re(-1.0))
    }

    /// Largest coefficient-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &PauliSum) -> f64 {
        let mut keys: Vec<&PauliString> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.into_iter()
            .map(|s| (self.coefficient(s) - other.coefficient(s)).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.norm() <= tol)
    }

    /// Evaluates a diagonal sum on basis state `index`.
    pub fn diagonal_value(&self, index: u64) -> Option<Complex64> {
        let mut acc = Complex64::default();
        for (s, c) in &self.terms {
            if !s.is_diagonal() {
                return None;
            }
            acc += c * s.diagonal_value(index);
        }
        Some(acc)
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        DenseOperator::from_pauli_sum(self)
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        self.try_add(rhs).expect("same qubit universe")
    }
}

impl Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self.try_add(&rhs.scale_re(-1.0)).expect("same qubit universe")
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        self.try_mul(rhs).expect("same qubit universe")
    }
}

impl Neg for &PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale_re(-1.0)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(s, c)| format!("({:.6}{:+.6}i) {}", c.re, c.im, s))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Raising operator `Q† = (X - iY)/2 = |1><0|` on qubit `q`.
pub fn raise(qubits: usize, q: usize) -> PauliSum {
    let x = PauliSum::x(qubits, q);
    let y = PauliSum::y(qubits, q).scale(Complex64::new(0.0, -1.0));
    (&x + &y).scale_re(0.5)
}

/// Lowering operator `Q = (X + iY)/2 = |0><1|` on qubit `q`.
pub fn lower(qubits: usize, q: usize) -> PauliSum {
    raise(qubits, q).adjoint()
}

fn excitation2(qubits: usize, a: usize, b: usize, sign: f64) -> PauliSum {
    let fwd = &raise(qubits, a) * &lower(qubits, b);
    let back = &lower(qubits, a) * &raise(qubits, b);
    &fwd + &back.scale_re(sign)
}

fn excitation3(qubits: usize, a: usize, b: usize, c: usize, sign: f64) -> PauliSum {
    let fwd = &(&raise(qubits, a) * &lower(qubits, b)) * &lower(qubits, c);
    let back = &(&lower(qubits, a) * &raise(qubits, b)) * &raise(qubits, c);
    &fwd + &back.scale_re(sign)
}

/// `S+_{AB} = Q†_A Q_B + Q_A Q†_B`.
pub fn s_plus(qubits: usize, a: usize, b: usize) -> PauliSum {
    excitation2(qubits, a, b, 1.0)
}

/// `S-_{AB} = Q†_A Q_B - Q_A Q†_B`, anti-Hermitian.
pub fn s_minus(qubits: usize, a: usize, b: usize) -> PauliSum {
    excitation2(qubits, a, b, -1.0)
}

/// `P+_{ABC} = Q†_A Q_B Q_C + Q_A Q†_B Q†_C`.
pub fn p_plus(qubits: usize, a: usize, b: usize, c: usize) -> PauliSum {
    excitation3(qubits, a, b, c, 1.0)
}

/// `P-_{ABC} = Q†_A Q_B Q_C - Q_A Q†_B Q†_C`, anti-Hermitian.
pub fn p_minus(qubits: usize, a: usize, b: usize, c: usize) -> PauliSum {
    excitation3(qubits, a, b, c, -1.0)
}

/// Closed form of `exp(beta * S-_{AB})`.
pub fn exp_s_minus(qubits: usize, a: usize, b: usize, beta: f64) -> PauliSum {
    let (s, c) = (beta / 2.0).sin_cos();
    let mut out = PauliSum::identity(qubits).scale_re(c * c);
    out = &out + &PauliSum::z(qubits, &[a, b]).scale_re(s * s);
    &out + &s_minus(qubits, a, b).scale_re(beta.sin())
}

/// Closed form of `exp(beta * P-_{ABC})`.
pub fn exp_p_minus(qubits: usize, a: usize, b: usize, c: usize, beta: f64) -> PauliSum {
    let half = (beta / 2.0).sin().powi(2) / 2.0;
    let mut out = PauliSum::identity(qubits).scale_re((3.0 + beta.cos()) / 4.0);
    out = &out + &PauliSum::z(qubits, &[a, b]).scale_re(half);
    out = &out + &PauliSum::z(qubits, &[a, c]).scale_re(half);
    out = &out - &PauliSum::z(qubits, &[b, c]).scale_re(half);
    &out + &p_minus(qubits, a, b, c).scale_re(beta.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_products() {
        let x = PauliString::single(0, Letter::X);
        let y = PauliString::single(0, Letter::Y);
        let z = PauliString::single(0, Letter::Z);
        assert_eq!(x.mul(&y), (c(0.0, 1.0), z));
        assert_eq!(y.mul(&x), (c(0.0, -1.0), z));
        assert_eq!(y.mul(&z), (c(0.0, 1.0), x));
        assert_eq!(z.mul(&x), (c(0.0, 1.0), y));
        assert_eq!(y.mul(&y), (c(1.0, 0.0), PauliString::IDENTITY));
    }

    #[test]
    fn s_forms_match_pauli_expansion() {
        let sp = s_plus(2, 0, 1);
        let xx = PauliSum::from_letters(2, &[(0, Letter::X), (1, Letter::X)], c(0.5, 0.0));
        let yy = PauliSum::from_letters(2, &[(0, Letter::Y), (1, Letter::Y)], c(0.5, 0.0));
        assert!(sp.max_abs_diff(&(&xx + &yy)) < 1e-15);

        let sm = s_minus(2, 0, 1);
        let xy = PauliSum::from_letters(2, &[(0, Letter::X), (1, Letter::Y)], c(0.0, 0.5));
        let yx = PauliSum::from_letters(2, &[(0, Letter::Y), (1, Letter::X)], c(0.0, -0.5));
        assert!(sm.max_abs_diff(&(&xy + &yx)) < 1e-15);
    }

    #[test]
    fn p_is_symmetric_in_b_c() {
        assert!(p_plus(3, 0, 1, 2).max_abs_diff(&p_plus(3, 0, 2, 1)) < 1e-15);
        assert!(p_minus(3, 0, 1, 2).max_abs_diff(&p_minus(3, 0, 2, 1)) < 1e-15);
    }

    #[test]
    fn universe_mismatch_is_reported() {
        let a = PauliSum::identity(2);
        let b = PauliSum::identity(3);
        assert!(matches!(a.try_mul(&b), Err(Error::UniverseMismatch(2, 3))));
    }
}
