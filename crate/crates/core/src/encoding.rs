//! Binary block encoding of portfolio weights.
//!
//! Asset `t` (0-based) owns the contiguous qubit block `t*l .. t*l + l`, least
//! significant bit first. Qubit `q` of the register is bit `q` of a basis
//! state index, so the text form of a bitstring lists qubit 0 first.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Largest register the exhaustive enumeration will walk.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncodingSpec {
    n: usize,
    l: usize,
}

impl EncodingSpec {
    pub fn new(n: usize, l: usize) -> Result<Self> {
        if n == 0 || l == 0 {
            return Err(Error::InvalidArgument("n and l must be at least 1".into()));
        }
        if n * l > 63 || l > 31 {
            return Err(Error::InvalidArgument(format!(
                "register of {} qubits is too large",
                n * l
            )));
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn qubits(&self) -> usize {
        self.n * self.l
    }

    /// Maximum lots per asset, `2^l - 1`.
    pub fn max_lots(&self) -> u64 {
        (1u64 << self.l) - 1
    }

    /// Unit trading lot as an exact rational.
    pub fn lot(&self) -> Ratio<u64> {
        Ratio::new(1, self.max_lots())
    }

    pub fn lot_f64(&self) -> f64 {
        1.0 / self.max_lots() as f64
    }

    /// Global qubit index of bit `k` (0-based, LSB) of asset `t`.
    pub fn qubit(&self, t: usize, k: usize) -> usize {
        debug_assert!(t < self.n && k < self.l);
        t * self.l + k
    }

    /// Lot count of asset `t` read from a basis-state index.
    #[inline]
    pub fn lots_of_index(&self, index: u64, t: usize) -> u64 {
        (index >> (t * self.l)) & self.max_lots()
    }

    #[inline]
    pub fn budget_of_index(&self, index: u64) -> u64 {
        (0..self.n).map(|t| self.lots_of_index(index, t)).sum()
    }

    #[inline]
    pub fn index_is_feasible(&self, index: u64) -> bool {
        self.budget_of_index(index) == self.max_lots()
    }

    /// Basis index of a lot vector. Lots must fit in `l` bits.
    pub fn index_of_lots(&self, lots: &[u64]) -> u64 {
        lots.iter()
            .enumerate()
            .fold(0u64, |acc, (t, &x)| acc | (x << (t * self.l)))
    }

    fn check_len(&self, bits: &BitString) -> Result<()> {
        if bits.len() != self.qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.qubits(),
                got: bits.len(),
            });
        }
        Ok(())
    }
}

/// Measurement record over `n*l` qubits in asset-major, LSB-first order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_index(index: u64, len: usize) -> Self {
        Self {
            bits: (0..len).map(|q| (index >> q) & 1 == 1).collect(),
        }
    }

    pub fn to_index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (q, &b)| acc | ((b as u64) << q))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, q: usize) -> bool {
        self.bits[q]
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bad bit `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::new)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotVector(pub Vec<u64>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(pub Vec<Ratio<u64>>);

impl WeightVector {
    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|r| r.to_f64().expect("finite ratio"))
            .collect()
    }
}

pub fn decode(spec: &EncodingSpec, bits: &BitString) -> Result<(LotVector, WeightVector)> {
    spec.check_len(bits)?;
    let lots: Vec<u64> = (0..spec.n())
        .map(|t| {
            (0..spec.l())
                .filter(|&k| bits.get(spec.qubit(t, k)))
                .map(|k| 1u64 << k)
                .sum()
        })
        .collect();
    let a = spec.lot();
    let weights = lots.iter().map(|&x| a * x).collect();
    Ok((LotVector(lots), WeightVector(weights)))
}

pub fn encode(spec: &EncodingSpec, lots: &LotVector) -> Result<BitString> {
    if lots.0.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: lots.0.len(),
        });
    }
    if let Some(&x) = lots.0.iter().find(|&&x| x > spec.max_lots()) {
        return Err(Error::InvalidArgument(format!(
            "{x} lots exceed the block capacity {}",
            spec.max_lots()
        )));
    }
    Ok(BitString::from_index(spec.index_of_lots(&lots.0), spec.qubits()))
}

/// True iff the lots sum to `2^l - 1`. Bitstrings of the wrong length are
/// never feasible.
pub fn is_feasible(spec: &EncodingSpec, bits: &BitString) -> bool {
    bits.len() == spec.qubits() && spec.index_is_feasible(bits.to_index())
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of feasible bitstrings, `C(2^l + n - 2, n - 1)`.
pub fn feasible_count(n: usize, l: usize) -> BigUint {
    let d = (1u64 << l) - 1;
    compositions(n as u64, d)
}

/// Number of ways to write `total` as an ordered sum of `parts` non-negative
/// integers.
fn compositions(parts: u64, total: u64) -> BigUint {
    if parts == 0 {
        return if total == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(total + parts - 1, parts - 1)
}

pub fn unconstrained_count(n: usize, l: usize) -> BigUint {
    BigUint::one() << (n * l)
}

/// Lot vector at position `rank` in lexicographic order of all feasible
/// allocations.
pub fn unrank_feasible(spec: &EncodingSpec, rank: &BigUint) -> Result<LotVector> {
    let total = feasible_count(spec.n(), spec.l());
    if rank >= &total {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 0..{total}"
        )));
    }
    let mut rank = rank.clone();
    let mut remaining = spec.max_lots();
    let mut lots = Vec::with_capacity(spec.n());
    for t in 0..spec.n() {
        let rest = (spec.n() - t - 1) as u64;
        if rest == 0 {
            lots.push(remaining);
            break;
        }
        let mut v = 0;
        loop {
            let block = compositions(rest, remaining - v);
            if rank < block {
                break;
            }
            rank -= block;
            v += 1;
        }
        lots.push(v);
        remaining -= v;
    }
    Ok(LotVector(lots))
}

/// Inverse of [`unrank_feasible`].
pub fn rank_feasible(spec: &EncodingSpec, lots: &LotVector) -> Result<BigUint> {
    if lots.0.iter().sum::<u64>() != spec.max_lots() || lots.0.len() != spec.n() {
        return Err(Error::InvalidArgument("lot vector is not feasible".into()));
    }
    let mut rank = BigUint::zero();
    let mut remaining = spec.max_lots();
    for (t, &x) in lots.0.iter().enumerate() {
        let rest = (spec.n() - t - 1) as u64;
        if rest == 0 {
            break;
        }
        for v in 0..x {
            rank += compositions(rest, remaining - v);
        }
        remaining -= x;
    }
    Ok(rank)
}

/// Iterator over feasible lot vectors in lexicographic order.
pub struct FeasibleIter {
    spec: EncodingSpec,
    current: Option<Vec<u64>>,
}

impl Iterator for FeasibleIter {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        let lots = self.current.take()?;
        let out = BitString::from_index(self.spec.index_of_lots(&lots), self.spec.qubits());
        self.current = next_composition(lots);
        Some(out)
    }
}

fn next_composition(mut lots: Vec<u64>) -> Option<Vec<u64>> {
    let n = lots.len();
    if n < 2 {
        return None;
    }
    // Increment the rightmost position that still has something to its right
    // to borrow from, then push all remaining mass to the last slot.
    let mut i = n - 1;
    loop {
        if i == 0 {
            return None;
        }
        i -= 1;
        let tail: u64 = lots[i + 1..].iter().sum();
        if tail > 0 {
            lots[i] += 1;
            for x in lots[i + 1..].iter_mut() {
                *x = 0;
            }
            lots[n - 1] = tail - 1;
            return Some(lots);
        }
    }
}

pub fn enumerate_feasible(spec: &EncodingSpec) -> Result<FeasibleIter> {
    if spec.qubits() > ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded {
            qubits: spec.qubits(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut first = vec![0; spec.n()];
    first[spec.n() - 1] = spec.max_lots();
    Ok(FeasibleIter {
        spec: *spec,
        current: Some(first),
    })
}

/// Feasible basis indices in enumeration order.
pub fn feasible_indices(spec: &EncodingSpec) -> Result<Vec<u64>> {
    Ok(enumerate_feasible(spec)?.map(|b| b.to_index()).collect())
}

fn uniform_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits % 32 == 0 {
        u32::MAX
    } else {
        (1u32 << (bits % 32)) - 1
    };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
        if let Some(last) = digits.last_mut() {
            *last &= top_mask;
        }
        let candidate = BigUint::from_slice(&digits);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform draw from the feasible set by unranking a uniform rank.
pub fn sample_feasible_uniform<R: Rng + ?Sized>(spec: &EncodingSpec, rng: &mut R) -> BitString {
    let total = feasible_count(spec.n(), spec.l());
    let rank = uniform_below(rng, &total);
    let lots = unrank_feasible(spec, &rank).expect("rank below total");
    encode(spec, &lots).expect("unranked lots fit the block")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn next_composition_walks_all_n3() {
        let spec = EncodingSpec::new(3, 2).unwrap();
        let all: Vec<_> = enumerate_feasible(&spec).unwrap().collect();
        assert_eq!(all.len(), 10);
    }

    #[test]
    fn lot_is_exact() {
        let spec = EncodingSpec::new(2, 5).unwrap();
        assert_eq!(spec.lot() * spec.max_lots(), Ratio::from_integer(1));
    }

    #[test]
    fn unrank_order_matches_enumeration() {
        let spec = EncodingSpec::new(3, 2).unwrap();
        for (r, bits) in enumerate_feasible(&spec).unwrap().enumerate() {
            let lots = unrank_feasible(&spec, &BigUint::from(r)).unwrap();
            assert_eq!(encode(&spec, &lots).unwrap(), bits);
        }
    }
}
